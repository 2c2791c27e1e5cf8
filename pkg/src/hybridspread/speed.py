"""Spreading speeds from the dispersion curve ``k(lam)``.

``c_right = inf_{lam>0} -k(lam)/lam`` and ``c_left = inf_{lam>0} -k(-lam)/lam``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.sparse.csgraph import connected_components

from .coeffs import (Competition, Linear, MatrixField, PeriodicField, SystemSpec,
                     mean_harmonic)
from .reporting import dumps, write_csv
from .spectral import k_of_lambda, lambda1_infinity


class SpeedError(RuntimeError):
    pass


def _minimize_ratio(k, lam_hi_cap: float = 1e4):
    """Minimize ``phi(lam) = -k(lam)/lam`` over ``lam > 0``.

    ``k`` is concave with ``k(0) < 0`` so ``phi`` is unimodal.  A dyadic scan
    brackets the minimum, bounded Brent refines it, and a 501-point scan backs
    it up if Brent lands on a bracket end.
    """
    phi = lambda l: -k(l) / l  # noqa: E731
    # walk dyadically from lam = 1 in the direction phi decreases; phi may be
    # negative (a receding front) and lam* may be tiny when k(0) is near 0
    grid, vals = [1.0, 2.0], [phi(1.0), phi(2.0)]
    step = 2.0 if vals[1] < vals[0] else 0.5
    if step < 1:
        grid, vals = grid[::-1], vals[::-1]
    while vals[-1] < vals[-2]:
        nxt = grid[-1] * step
        if nxt > lam_hi_cap or nxt < 1e-12:
            raise SpeedError("could not bracket the minimum of -k(lam)/lam")
        grid.append(nxt)
        vals.append(phi(nxt))
    a, b = sorted((grid[-1], grid[-3])) if len(grid) > 2 else (1.0, 2.0)
    res = minimize_scalar(phi, bounds=(a, b), method="bounded", options={"xatol": 1e-11 * b})
    lam = float(res.x)
    if min(lam - a, b - lam) < 1e-6 * b:
        scan = np.linspace(a, b, 501)
        sv = np.array([phi(l) for l in scan])
        i = int(np.argmin(sv))
        lo, hi = scan[max(i - 1, 0)], scan[min(i + 1, 500)]
        lam = float(minimize_scalar(phi, bounds=(lo, hi), method="bounded",
                                    options={"xatol": 1e-11 * b}).x)
    return _polish(k, lam)


def _polish(k, lam, step=1e-4):
    # stationarity of -k/lam means lam k'(lam) - k(lam) = 0
    def g(l):
        return l * (k(l + step) - k(l - step)) / (2 * step) - k(l)

    for w in (1e-5, 1e-4, 1e-3):
        lo, hi = lam * (1 - w), lam * (1 + w)
        try:
            glo, ghi = g(lo), g(hi)
        except Exception:
            break
        if glo * ghi < 0:
            cand = brentq(g, lo, hi, xtol=1e-13 * lam)
            if -k(cand) / cand <= -k(lam) / lam + 1e-13 * max(1.0, abs(k(lam) / lam)):
                return cand
            return lam
    return lam


def _kfun(spec, N, sign=1.0):
    cache = {}

    def k(l):
        l = float(l)
        if l not in cache:
            cache[l] = k_of_lambda(spec, sign * l, N).value
        return cache[l]

    return k


def _speed(spec, N, sign):
    k = _kfun(spec, N, sign)
    if k(0.0) >= 0:
        raise SpeedError(f"no positive speed regime: periodic principal eigenvalue k(0) = {k(0.0):.6g} >= 0")
    lam = _minimize_ratio(k)
    return -k(lam) / lam, lam


def min_speed_right(spec: SystemSpec, N: int = 128):
    """Return ``(c*, lam*)`` for rightward propagation."""
    return _speed(spec, N, 1.0)


def min_speed_left(spec: SystemSpec, N: int = 128):
    """Return ``(c*_left, lam*_left)``; ``lam*_left > 0`` minimizes ``-k(-lam)/lam``."""
    return _speed(spec, N, -1.0)


@dataclass
class SpeedReport:
    c_right: float
    c_left: float
    lambda_star_right: float
    lambda_star_left: float
    lambda1_per: float
    lambda1_inf: float
    argmax_lambda: float
    converged: bool = True
    valid: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path=None, extra=None) -> str:
        d = self.to_dict()
        d.update(extra or {})
        s = dumps(d)
        if path:
            with open(path, "w") as fh:
                fh.write(s + "\n")
        return s

    def csv_row(self) -> list:
        return [self.c_right, self.c_left, self.lambda_star_right, self.lambda_star_left,
                self.lambda1_per, self.lambda1_inf, int(self.converged), int(self.valid)]

    CSV_HEADER = ["c_right", "c_left", "lambda_star_right", "lambda_star_left",
                  "lambda1_per", "lambda1_inf", "converged", "valid"]


def speed_report(spec: SystemSpec, N: int = 128) -> SpeedReport:
    l1 = lambda1_infinity(spec, N, tail=False)
    if l1.lambda1_per >= 0:
        return SpeedReport(np.nan, np.nan, np.nan, np.nan, l1.lambda1_per, l1.value, l1.argmax,
                           converged=False, valid=False, note="lambda1_per >= 0: no spreading")
    cr, lr = min_speed_right(spec, N)
    cl, ll = min_speed_left(spec, N)
    return SpeedReport(cr, cl, lr, ll, l1.lambda1_per, l1.value, l1.argmax)


@dataclass
class Crossing:
    kind: str
    roots: list = field(default_factory=list)
    c_star: float = np.nan
    lambda_star: float = np.nan


def crossing_structure(spec: SystemSpec, c: float, N: int = 128, rtol: float = 1e-9) -> Crossing:
    """Classify ``c`` against ``c*`` and solve ``lam c + k(lam) = 0`` for ``lam > 0``."""
    k = _kfun(spec, N)
    if k(0.0) >= 0:
        raise SpeedError("no positive speed regime: k(0) >= 0")
    cs, ls = min_speed_right(spec, N)
    if c < cs * (1 - rtol):
        return Crossing("below", [], cs, ls)
    if c <= cs * (1 + rtol):
        return Crossing("tangent", [ls], cs, ls)
    h = lambda l: l * c + k(l)  # noqa: E731
    r1 = brentq(h, 0.0, ls, xtol=1e-14, rtol=1e-14)
    hi = 2 * ls
    while h(hi) > 0:
        hi *= 2
        if hi > 1e6:
            raise SpeedError("second root not bracketed")
    r2 = brentq(h, ls, hi, xtol=1e-14, rtol=1e-14)
    return Crossing("two_roots", [r1, r2], cs, ls)


def pf_constant(M):
    """Perron-Frobenius eigenvalue and sup-normalized positive eigenvector of a constant matrix.

    Off-diagonal entries must be nonnegative and the matrix irreducible.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    d = M.shape[0]
    off = M - np.diag(np.diag(M))
    if off.min() < 0:
        raise ValueError("matrix is not cooperative (negative off-diagonal entry)")
    if d == 1:
        return float(M[0, 0]), np.ones(1)
    ncomp, _ = connected_components(off > 0, directed=True, connection="strong")
    if ncomp != 1:
        raise ValueError("matrix is reducible")
    if d == 2:
        a, b, c, dd = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
        disc = np.sqrt((a - dd) ** 2 + 4 * b * c)
        lam = 0.5 * (a + dd + disc)
        # pick the better-conditioned of the two equivalent eigenvector formulas
        if a - dd >= 0:
            v = np.array([a - dd + disc, 2 * c])
        else:
            v = np.array([2 * b, dd - a + disc])
        return float(lam), v / v.max()
    s = 1.0 + np.abs(np.diag(M)).max()
    P = M + s * np.eye(d)
    v = np.ones(d)
    rho = 0.0
    for _ in range(100_000):
        w = P @ v
        rho_new = w.max()
        w /= rho_new
        if np.max(np.abs(w - v)) < 1e-14 and abs(rho_new - rho) <= 1e-14 * abs(rho_new):
            v = w
            break
        v, rho = w, rho_new
    return float(rho_new - s), v / v.max()


def homogenized_coefficients(spec: SystemSpec):
    """Harmonic-mean diffusion, effective drift and averaged reaction matrix."""
    sH = np.array([mean_harmonic(s) for s in spec.sigma])
    qH = np.array([sH[i] * np.mean(spec.q[i].samples / spec.sigma[i].samples) for i in range(spec.d)])
    Abar = spec.A.mean()
    return sH, qH, Abar


def homogenized_speed(spec: SystemSpec, return_lambda: bool = False):
    """``inf_{lam>0} lam_PF(lam^2 sigma_H - lam q_H + Abar) / lam``."""
    sH, qH, Abar = homogenized_coefficients(spec)
    pf_constant(Abar)  # validates cooperativity / irreducibility
    k = lambda l: -pf_constant(l * l * np.diag(sH) - l * np.diag(qH) + Abar)[0]  # noqa: E731
    if k(0.0) >= 0:
        raise SpeedError("no positive speed regime for the averaged system")
    lam = _minimize_ratio(k)
    c = -k(lam) / lam
    return (c, lam) if return_lambda else c


def _centered_diff(f: PeriodicField) -> np.ndarray:
    h = f.period / f.n
    return (np.roll(f.samples, -1) - np.roll(f.samples, 1)) / (2 * h)


def strong_coupling_reduce(spec2: SystemSpec, p: PeriodicField) -> SystemSpec:
    """Scalar equation for ``S = u + v`` in the fast-exchange limit.

    With ``u = (1-p) S`` and ``v = p S``::

        S_t = (sigma S_x)_x + q S_x + (r + q_x - kappa S) S
        sigma = (1-p) sigma_u + p sigma_v,  q = (sigma_v - sigma_u) p_x

    and ``r``, ``kappa`` averaged like ``sigma``.  Growth rates are read from a
    mutation-competition nonlinearity when present, otherwise from ``diag(A)``.
    """
    if spec2.d != 2:
        raise ValueError("strong-coupling reduction needs a 2-species spec")
    ps = p.samples
    if ps.min() <= 0 or ps.max() >= 1:
        raise ValueError(f"proportion p must lie in (0, 1); range is [{ps.min()}, {ps.max()}]")
    x = p.grid
    su, sv = (s(x) for s in spec2.sigma)
    nl = spec2.nonlinearity
    if getattr(nl, "r_u", None) is not None:
        ru, rv = nl.r_u(x), nl.r_v(x)
    else:
        ru, rv = spec2.A[0, 0](x), spec2.A[1, 1](x)
    sigma = (1 - ps) * su + ps * sv
    r = (1 - ps) * ru + ps * rv
    qs = (sv - su) * _centered_diff(p)
    qf = PeriodicField(p.period, qs, "q")
    zeroth = r + _centered_diff(qf)
    if isinstance(nl, Competition):
        ku, kv = (kk(x) for kk in nl.kappa)
        red_nl = Competition((PeriodicField(p.period, (1 - ps) * ku + ps * kv, "kappa", True),))
    else:
        red_nl = Linear()
    return SystemSpec((PeriodicField(p.period, sigma, "sigma", True),), (qf,),
                      MatrixField(((PeriodicField(p.period, zeroth, "r+q_x"),),)),
                      "divergence", red_nl, "strong-coupling reduction")


def drift_integral(spec: SystemSpec) -> float:
    """``int_0^L q / (2 sigma)`` for a scalar spec (periodic trapezoid rule)."""
    if spec.d != 1:
        raise ValueError("drift integral is defined for scalar specs")
    s, q = spec.sigma[0], spec.q[0]
    x = q.grid if q.n >= s.n else s.grid
    return float(np.mean(q(x) / (2 * s(x))) * spec.period)


def drift_speed_ordering(spec: SystemSpec, tol: float = 1e-10) -> str:
    """Predict which direction spreads faster from the sign of the drift integral."""
    m = drift_integral(spec)
    if m < -tol:
        return "right_faster"
    if m > tol:
        return "left_faster"
    return "equal"


def write_speed_csv(reports, path, labels=None) -> None:
    labels = labels or [str(i) for i in range(len(reports))]
    write_csv(path, ["label"] + SpeedReport.CSV_HEADER,
              [[lab] + r.csv_row() for lab, r in zip(labels, reports)])
