"""Principal eigenpairs of cooperative finite-difference operators.

``k(lam)`` is the principal eigenvalue of ``-L_lam - A`` on periodic functions,
i.e. minus the Perron root of the essentially nonnegative matrix ``B``.
"""

from __future__ import annotations

import csv
from contextlib import contextmanager
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq, minimize_scalar
from scipy.sparse.linalg import splu

from .coeffs import SystemSpec
from .operators import DiscreteOperator, assemble_L_lambda

TOL_EIG = 1e-10
MAX_N = 1 << 15


class EigenError(RuntimeError):
    pass


@dataclass
class Eigenpair:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int
    x: np.ndarray | None = None
    d: int = 1
    lam: float = 0.0
    N: int = 0

    @property
    def components(self) -> np.ndarray:
        """Eigenvector reshaped to ``(d, n)``."""
        return self.vector.reshape(self.d, -1)


def _check_cooperative(B: sp.csr_matrix):
    m = B.tocoo()
    off = m.row != m.col
    if off.any() and m.data[off].min() < 0:
        k = int(np.argmin(np.where(off, m.data, np.inf)))
        raise EigenError(
            f"negative off-diagonal entry {m.data[k]!r} at ({m.row[k]}, {m.col[k]}); "
            "the operator is not cooperative (refine the grid or check A)")


def _noda(B, tol, max_iter):
    # Noda's shift-invert iteration: quadratically convergent, Collatz-Wielandt bracketing
    n = B.shape[0]
    eye = sp.identity(n, format="csc")
    Bc = B.tocsc()
    scale = float(abs(B).sum(axis=1).max()) or 1.0
    floor = 64 * np.finfo(float).eps * scale
    x = np.ones(n)
    gaps = []
    for it in range(1, max_iter + 1):
        r = (B @ x) / x
        hi, lo = float(r.max()), float(r.min())
        gap = hi - lo
        gaps.append(gap)
        if gap <= max(tol * max(1.0, abs(hi)), floor):
            return x, hi, lo, it
        if len(gaps) > 4 and gap >= 0.5 * gaps[-4]:
            # stalled at round-off level
            if gap <= 1e3 * floor:
                return x, hi, lo, it
            raise EigenError(f"eigen-iteration stalled with Collatz gap {gap:.3e}")
        try:
            y = splu((hi * eye - Bc).tocsc()).solve(x)
        except RuntimeError:
            return x, hi, lo, it
        if not np.all(y > 0):
            raise EigenError("non-positive iterate; cooperativity or irreducibility is broken")
        x = y / y.max()
    raise EigenError(f"no convergence after {max_iter} iterations (gap {gap:.3e})")


def _power(B, tol, max_iter):
    # shifted power iteration, stopped on the same Collatz-Wielandt bracket as _noda
    n = B.shape[0]
    s = 1.0 + float(np.abs(B.diagonal()).max())
    P = B + s * sp.identity(n, format="csr")
    x = np.ones(n)
    for it in range(1, max_iter + 1):
        y = P @ x
        if np.any(y <= 0):
            raise EigenError("non-positive iterate; cooperativity or irreducibility is broken")
        r = y / x - s
        hi, lo = float(r.max()), float(r.min())
        if hi - lo <= tol * max(1.0, abs(hi)):
            return x, hi, lo, it
        x = y / y.max()
    raise EigenError(f"power iteration did not converge in {max_iter} iterations")


_TOL = [1e-12]


@contextmanager
def eigen_tolerance(tol: float):
    """Temporarily change the default bracket tolerance of every eigen solve."""
    if not 0 < tol < 1:
        raise ValueError("tolerance must lie in (0, 1)")
    old = _TOL[0]
    _TOL[0] = tol
    try:
        yield
    finally:
        _TOL[0] = old


def principal_eigen(op, tol: float | None = None, max_iter: int | None = None,
                    method: str = "noda") -> Eigenpair:
    """Principal eigenpair of ``-B`` for a cooperative irreducible matrix ``B``.

    Parameters
    ----------
    op : DiscreteOperator or sparse matrix
    tol : float
        Relative width of the Collatz-Wielandt bracket at convergence.
    method : {'noda', 'power'}
        ``'power'`` runs plain shifted power iteration (slow, mostly for cross-checks).

    Returns
    -------
    Eigenpair
        ``value`` is ``k = -rho(B)``; the vector is strictly positive with unit
        sup norm.
    """
    tol = _TOL[0] if tol is None else tol
    B = op.matrix if isinstance(op, DiscreteOperator) else sp.csr_matrix(op)
    _check_cooperative(B)
    if method == "noda":
        x, hi, lo, it = _noda(B, tol, max_iter or 200)
    elif method == "power":
        x, hi, lo, it = _power(B, tol, max_iter or 500_000)
    else:
        raise ValueError(f"unknown method {method!r}")
    theta = 0.5 * (hi + lo)
    res = float(np.max(np.abs(-(B @ x) + theta * x)))
    kw = {}
    if isinstance(op, DiscreteOperator):
        kw = dict(x=op.x, d=op.d, lam=op.lam)
    return Eigenpair(-theta, x, res, it, **kw)


def k_of_lambda(spec: SystemSpec, lam: float, N: int = 128, tol: float | None = None,
                refine: bool = False, method: str = "noda") -> Eigenpair:
    """Principal eigenvalue ``k(lam)`` of ``-L_lam - A`` with periodic conditions.

    The grid is doubled while the assembled matrix has negative off-diagonal
    entries (large ``|lam| h``).  With ``refine=True`` it is also doubled until
    two successive grids agree to 1e-6.
    """
    while True:
        op = assemble_L_lambda(spec, lam, N, "periodic")
        if op.offdiag_min() >= 0 or N >= MAX_N:
            break
        N *= 2
    ep = principal_eigen(op, tol, method=method)
    ep.N = N
    if refine:
        while N < MAX_N:
            fine = k_of_lambda(spec, lam, 2 * N, tol, False, method)
            if abs(fine.value - ep.value) <= 1e-6:
                return fine
            ep, N = fine, 2 * N
    return ep


@dataclass
class KCurve:
    lambdas: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    vectors: list | None = None

    def concavity_defects(self) -> np.ndarray:
        """``(k(l1)+k(l3))/2 - k((l1+l3)/2)`` over equally spaced triples; <= 0 when concave."""
        k = self.values
        return 0.5 * (k[:-2] + k[2:]) - k[1:-1]

    def quadratic_cap(self):
        """Fit ``alpha - beta lam^2`` dominating every sample.

        ``beta`` is minus the leading coefficient of a least-squares quadratic;
        ``alpha`` is then the smallest value making the cap dominate.
        """
        c2 = np.polyfit(self.lambdas, self.values, 2)[0]
        beta = -c2
        alpha = float(np.max(self.values + beta * self.lambdas ** 2))
        return alpha, float(beta)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "k", "residual"])
            for row in zip(self.lambdas, self.values, self.residuals):
                w.writerow([format(v, ".17g") for v in row])


def k_curve(spec: SystemSpec, lam_min: float, lam_max: float, M: int = 41, N: int = 128,
            keep_vectors: bool = False, workers: int = 1) -> KCurve:
    if M < 5:
        raise ValueError("k_curve needs at least 5 samples")
    lams = np.linspace(lam_min, lam_max, M)
    job = lambda l: k_of_lambda(spec, float(l), N)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            eps = list(ex.map(job, lams))
    else:
        eps = [job(l) for l in lams]
    return KCurve(lams, np.array([e.value for e in eps]), np.array([e.residual for e in eps]),
                  [e.vector for e in eps] if keep_vectors else None)


def k_prime(spec: SystemSpec, lam: float, N: int = 128, step: float = 1e-4) -> float:
    return (k_of_lambda(spec, lam + step, N).value - k_of_lambda(spec, lam - step, N).value) / (2 * step)


def lambda1_dirichlet(spec: SystemSpec, R: float, N: int = 128, tol: float | None = None) -> Eigenpair:
    """Principal eigenpair of ``-L - A`` on ``(-R, R)`` with zero boundary values.

    ``N`` is the number of grid intervals per period length.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    op = assemble_L_lambda(spec, 0.0, N, "dirichlet", R=R)
    ep = principal_eigen(op, tol)
    ep.N = N
    return ep


@dataclass
class Lambda1Infinity:
    value: float
    argmax: float
    lambda1_per: float
    radii: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dirichlet_tail: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _polish_max(f, a, b, x0, step=1e-4):
    """Root of the central-difference derivative near ``x0`` when a sign change is found."""
    dk = lambda l: (f(l + step) - f(l - step)) / (2 * step)  # noqa: E731
    for w in (1e-4, 1e-3, 1e-2):
        lo, hi = max(a, x0 - w), min(b, x0 + w)
        flo, fhi = dk(lo), dk(hi)
        if flo * fhi < 0:
            return brentq(dk, lo, hi, xtol=1e-13)
    return x0


def lambda1_infinity(spec: SystemSpec, N: int = 128, radii=(2, 4, 8, 16),
                     tail: bool = True) -> Lambda1Infinity:
    """Generalized principal eigenvalue ``max_lam k(lam)`` plus a Dirichlet tail.

    ``radii`` are in units of the period.  The tail values decrease towards the
    returned value but converge slowly; they are diagnostics only.
    """
    cache = {}

    def k(l):
        l = float(l)
        if l not in cache:
            cache[l] = k_of_lambda(spec, l, N).value
        return cache[l]

    k0 = k(0.0)
    Lam = 1.0
    for _ in range(12):
        if k(Lam) < k(0.5 * Lam) and k(-Lam) < k(-0.5 * Lam):
            break
        Lam *= 2.0
    else:
        raise EigenError("could not bracket the maximum of k(lambda)")
    res = minimize_scalar(lambda l: -k(l), bounds=(-Lam, Lam), method="bounded",
                          options={"xatol": 1e-8})
    arg = _polish_max(k, -Lam, Lam, float(res.x))
    val = max(k(arg), k0)
    if val == k0 and k(arg) < k0:
        arg = 0.0
    rs = np.array([r * spec.period for r in radii], dtype=float) if tail else np.zeros(0)
    vals = np.array([lambda1_dirichlet(spec, R, N).value for R in rs])
    return Lambda1Infinity(float(val), float(arg), float(k0), rs, vals)


def minimax_lower_bound(spec: SystemSpec, lam: float, phi_test, N: int | None = None) -> float:
    """``min`` over nodes and species of ``(-(L_lam + A) phi)_i / phi_i``; never exceeds ``k(lam)``."""
    phi = np.asarray(phi_test, dtype=float).ravel()
    if np.any(phi <= 0):
        raise ValueError("test function must be strictly positive")
    n = N or phi.size // spec.d
    op = assemble_L_lambda(spec, lam, n, "periodic")
    if phi.size != op.size:
        raise ValueError(f"test function has {phi.size} entries, operator needs {op.size}")
    return float(np.min(-(op.matrix @ phi) / phi))
