"""Method-of-lines parabolic solver on a truncated line, with front tracking,
comparison and hair-trigger experiments, barrier functions and a
Poincare-map traveling-wave constructor.

Time stepping is semi-implicit: the linear diffusion-advection part is
advanced by backward Euler, the reaction explicitly.  The implicit matrix
``I - dt L`` is an M-matrix whenever the cell Peclet number is at most one,
so each step maps nonnegative data to nonnegative data and is order preserving
for cooperative reactions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .coeffs import (Competition, LowerBarrier, MutationCompetition, PeriodicField,
                     SystemSpec)
from .operators import assemble_L
from .reporting import write_csv
from .spectral import k_of_lambda, lambda1_infinity
from .speed import crossing_structure, min_speed_right


class SimulationError(RuntimeError):
    pass


class WaveError(ValueError):
    def __init__(self, reason, detail=""):
        super().__init__(f"{reason}{': ' + detail if detail else ''}")
        self.reason = reason
        self.detail = detail


@dataclass
class SimConfig:
    domain: tuple = (0.0, 400.0)
    N_x: int = 2048
    dt: float = 0.01
    T: float = 80.0
    bc: str = "neumann"
    out_every: float = 0.5
    delta: float | None = None

    def __post_init__(self):
        if self.N_x < 128:
            raise ValueError(f"N_x must be at least 128, got {self.N_x}")
        if not (self.dt > 0 and self.T >= 0):
            raise ValueError("dt must be positive and T nonnegative")
        if self.bc not in ("neumann", "periodic"):
            raise ValueError(f"truncation bc must be neumann or periodic, got {self.bc!r}")
        a, b = self.domain
        if not b > a:
            raise ValueError("empty domain")

    @property
    def h(self) -> float:
        a, b = self.domain
        return (b - a) / (self.N_x - 1 if self.bc == "neumann" else self.N_x)

    @property
    def x(self) -> np.ndarray:
        return self.domain[0] + self.h * np.arange(self.N_x)


@dataclass
class SimState:
    t: float
    u: np.ndarray


@dataclass
class FrontTrace:
    times: np.ndarray
    positions: np.ndarray
    fitted_speed: float = np.nan
    fit_residual: float = np.nan

    def fit(self, frac: float = 0.5) -> "FrontTrace":
        """Least-squares slope over the final ``frac`` of finite samples."""
        ok = np.isfinite(self.positions)
        t, p = self.times[ok], self.positions[ok]
        n = t.size
        if n < 4:
            self.fitted_speed, self.fit_residual = np.nan, np.nan
            return self
        t, p = t[n - max(int(np.ceil(frac * n)), 2):], p[n - max(int(np.ceil(frac * n)), 2):]
        coef, res, *_ = np.polyfit(t, p, 1, full=True)
        self.fitted_speed = float(coef[0])
        self.fit_residual = float(np.sqrt(res[0] / t.size)) if res.size else 0.0
        return self

    def to_csv(self, path) -> None:
        write_csv(path, ["t", "position"], zip(self.times, self.positions),
                  meta={"fitted_speed": format(self.fitted_speed, ".17g"),
                        "fit_residual": format(self.fit_residual, ".17g")})


class Stepper:
    """Reusable factorization of ``I - dt L`` plus the explicit reaction."""

    def __init__(self, spec: SystemSpec, x: np.ndarray, dt: float, bc: str = "neumann",
                 nonlinearity=None):
        self.spec, self.x, self.dt, self.bc = spec, x, dt, bc
        N = x.size
        if bc == "neumann":
            op = assemble_L(spec, N, "neumann", domain=(x[0], x[-1]))
        else:
            h = x[1] - x[0]
            op = assemble_L(spec, N, "periodic", domain=(x[0], x[-1] + h))
        h = op.h
        for i in range(spec.d):
            s, q = spec.sigma[i](x), spec.q[i](x)
            pe = float(np.max(np.abs(q) * h / (2 * s)))
            if pe > 1:
                raise SimulationError(f"cell Peclet number {pe:.3g} > 1 for species {i + 1}; refine the grid")
        self.L = op.matrix
        n = op.size
        self.lu = splu((sp.identity(n, format="csc") - dt * op.matrix).tocsc())
        sp_ = spec if nonlinearity is None else spec.replace(nonlinearity=nonlinearity)
        self.f = sp_.reaction(x)
        self.clamped = 0

    def __call__(self, u: np.ndarray) -> np.ndarray:
        rhs = u + self.dt * self.f(u)
        w = self.lu.solve(rhs.ravel()).reshape(u.shape)
        bad = w < -1e-12
        if bad.any():
            self.clamped += int(bad.sum())
        np.maximum(w, 0.0, out=w)
        return w


def step(state: SimState, spec: SystemSpec, dt: float, x: np.ndarray, bc: str = "neumann",
         stepper: Stepper | None = None) -> SimState:
    """Advance one time step; pass a cached ``stepper`` in loops."""
    st = stepper or Stepper(spec, x, dt, bc)
    return SimState(state.t + dt, st(state.u))


def front_position(u: np.ndarray, x: np.ndarray, delta: float, side: str = "right") -> float:
    """Outermost grid node where every species is at least ``delta``.

    Returns ``-inf`` (right) or ``+inf`` (left) when no node qualifies.
    """
    m = np.atleast_2d(u).min(axis=0) >= delta
    idx = np.flatnonzero(m)
    if side == "right":
        return float(x[idx[-1]]) if idx.size else -np.inf
    if side == "left":
        return float(x[idx[0]]) if idx.size else np.inf
    raise ValueError("side must be 'right' or 'left'")


def steady_level(spec: SystemSpec) -> float:
    """Rough sup of the positive steady state, used to set front thresholds."""
    nl = spec.nonlinearity
    if isinstance(nl, MutationCompetition):
        from .ode import OdeParams, equilibrium
        p = OdeParams(*(float(np.mean(f.samples)) for f in (nl.r_u, nl.r_v, nl.kappa_u, nl.kappa_v,
                                                             nl.mu_u, nl.mu_v)))
        try:
            e = equilibrium(p)
            return max(e.u, e.v)
        except ValueError:
            return 1.0
    if isinstance(nl, Competition):
        Abar = spec.A.mean()
        growth = max(float(np.max(Abar.sum(axis=1))), 1e-12)
        return growth / (spec.d * min(float(np.mean(k.samples)) for k in nl.kappa))
    return 1.0


@dataclass
class SimResult:
    state: SimState
    x: np.ndarray
    right: FrontTrace
    left: FrontTrace
    snapshots: list = field(default_factory=list)
    clamped: int = 0
    history_max: float = 0.0


def simulate(spec: SystemSpec, u0, config: SimConfig, snapshot_times=(), callback=None) -> SimResult:
    """Evolve ``u0`` (shape ``(d, N_x)`` or a callable of ``x``) to ``config.T``."""
    x = config.x
    u = np.array(u0(x) if callable(u0) else u0, dtype=float).reshape(spec.d, x.size)
    if np.any(u < 0):
        raise ValueError("initial data must be nonnegative")
    delta = config.delta if config.delta is not None else 0.01 * steady_level(spec)
    nsteps = int(round(config.T / config.dt))
    dt = config.T / nsteps if nsteps else config.dt
    st = Stepper(spec, x, dt, config.bc)
    every = max(int(round(config.out_every / dt)), 1)
    snaps = sorted(snapshot_times)
    times, pr, pl, out = [0.0], [front_position(u, x, delta, "right")], [front_position(u, x, delta, "left")], []
    hmax = float(u.max())
    t = 0.0
    for n in range(1, nsteps + 1):
        u = st(u)
        t = n * dt
        if not np.all(np.isfinite(u)):
            raise SimulationError(f"non-finite state at t={t}")
        if callback is not None:
            callback(t, u)
        while snaps and t >= snaps[0] - 0.5 * dt:
            out.append((snaps.pop(0), u.copy()))
        if n % every == 0 or n == nsteps:
            times.append(t)
            pr.append(front_position(u, x, delta, "right"))
            pl.append(front_position(u, x, delta, "left"))
            hmax = max(hmax, float(u.max()))
    right = FrontTrace(np.array(times), np.array(pr)).fit()
    left = FrontTrace(np.array(times), -np.array(pl)).fit()
    return SimResult(SimState(t, u), x, right, left, out, st.clamped, hmax)


def front_runs(spec: SystemSpec, config: SimConfig, seed_width: float = 20.0):
    """Two runs from the steady level on one edge of the domain.

    The first seeds ``[x0, x0 + seed_width]`` and tracks the right front, the
    second seeds the right edge and tracks the left front, so each front has
    the whole domain to cross.  Returns ``(right_run, left_run)``.
    """
    x = config.x
    level = steady_level(spec)
    r = simulate(spec, np.tile(np.where(x <= x[0] + seed_width, level, 0.0), (spec.d, 1)), config)
    rl = simulate(spec, np.tile(np.where(x >= x[-1] - seed_width, level, 0.0), (spec.d, 1)), config)
    return r, rl


def write_snapshot(path, x, u, t=None) -> None:
    u = np.atleast_2d(u)
    write_csv(path, ["x"] + [f"u_{i + 1}" for i in range(u.shape[0])],
              (np.concatenate([[xi], u[:, j]]) for j, xi in enumerate(x)),
              meta={"t": format(t, ".17g")} if t is not None else None)


# --- barriers and comparison -------------------------------------------------

def barrier_eta(spec: SystemSpec) -> float:
    """Largest ``eta`` for which ``f - beta u**2`` is cooperative on ``[0, eta]^d``.

    For the mutation model this is ``min(inf mu_v/kappa_u, inf mu_u/kappa_v)``;
    linear and scalar nonlinearities have no restriction and use the steady level.
    """
    nl = spec.nonlinearity
    if isinstance(nl, MutationCompetition):
        return float(min(np.min(nl.mu_v.samples / nl.kappa_u.samples),
                         np.min(nl.mu_u.samples / nl.kappa_v.samples)))
    if isinstance(nl, Competition) and spec.d > 1:
        # off-diagonal a_ij - kappa_i u_i >= 0 needs u_i <= a_ij / kappa_i
        bounds = []
        for i in range(spec.d):
            for j in range(spec.d):
                if i != j:
                    bounds.append(np.min(spec.A[i, j].samples / nl.kappa[i].samples))
        return float(max(min(bounds), 1e-12))
    return steady_level(spec)


def lower_barrier_spec(spec: SystemSpec, eta: float | None = None, factor: float = 1.1) -> SystemSpec:
    """Return the spec with nonlinearity ``f - beta u**2``, ``beta = factor * beta*``.

    ``beta* = sup_x max_i sum_j a_ij(x) / eta`` makes the constant ``eta`` a
    supersolution of the modified system.
    """
    eta = barrier_eta(spec) if eta is None else eta
    if not eta > 0:
        raise ValueError("eta must be positive")
    rowsum = np.max([sum(spec.A[i, j].samples for j in range(spec.d)) for i in range(spec.d)])
    beta = factor * max(float(rowsum), 0.0) / eta
    return spec.replace(nonlinearity=LowerBarrier(spec.nonlinearity, beta),
                        label=f"{spec.label}[beta={beta:.6g}]")


def comparison_experiment(spec: SystemSpec, eta: float | None, u0, config: SimConfig) -> dict:
    """Run the full system and its beta-barrier side by side.

    The barrier starts from ``min(u0, eta)``.  Returns the largest value of
    ``v - u`` seen, and whether the barrier stayed below ``eta``.
    """
    eta = barrier_eta(spec) if eta is None else eta
    bspec = lower_barrier_spec(spec, eta)
    x = config.x
    u = np.array(u0(x) if callable(u0) else u0, dtype=float).reshape(spec.d, x.size)
    v = np.minimum(u, eta)
    nsteps = int(round(config.T / config.dt))
    dt = config.T / nsteps
    su = Stepper(spec, x, dt, config.bc)
    sv = Stepper(bspec, x, dt, config.bc)
    viol = float(np.max(v - u))
    vmax = float(v.max())
    for _ in range(nsteps):
        u, v = su(u), sv(v)
        viol = max(viol, float(np.max(v - u)))
        vmax = max(vmax, float(v.max()))
        if vmax > eta * (1 + 1e-12):
            return {"max_violation": viol, "barrier_max": vmax, "eta": eta,
                    "beta": bspec.nonlinearity.beta, "aborted": True}
    return {"max_violation": viol, "barrier_max": vmax, "eta": eta,
            "beta": bspec.nonlinearity.beta, "aborted": False,
            "clamped": su.clamped + sv.clamped}


def compact_bump(x, center=0.0, width=1.0, amplitude=0.1):
    z = (np.asarray(x) - center) / width
    return amplitude * np.clip(1 - z * z, 0.0, None)


def hair_trigger_experiment(spec: SystemSpec, bump_center: float, bump_width: float,
                            config: SimConfig, amplitude: float = 0.1, window=(-5.0, 5.0),
                            N_eig: int = 128) -> dict:
    """Grow a small compactly supported bump and report its minimum on ``window`` at ``T``."""
    l1 = lambda1_infinity(spec, N_eig, tail=False)
    if l1.value >= 0:
        return {"applicable": False, "lambda1_inf": l1.value,
                "reason": "lambda1_inf >= 0: hair-trigger experiment inapplicable"}
    x = config.x
    u0 = np.tile(compact_bump(x, bump_center, bump_width, amplitude), (spec.d, 1))
    res = simulate(spec, u0, config)
    w = (x >= window[0]) & (x <= window[1])
    return {"applicable": True, "lambda1_inf": l1.value,
            "min_over_window": float(res.state.u[:, w].min()),
            "max_over_window": float(res.state.u[:, w].max()), "clamped": res.clamped}


class _EigenProfile:
    """Periodic eigenvector ``phi_lam`` as interpolable per-species fields."""

    def __init__(self, spec, lam, N):
        ep = k_of_lambda(spec, lam, N)
        self.k = ep.value
        comps = ep.components
        self.fields = [PeriodicField(spec.period, comps[i]) for i in range(spec.d)]
        self.inf = float(comps.min())
        self.sup = float(comps.max())

    def __call__(self, x):
        return np.array([f(x) for f in self.fields])


@dataclass
class UpperBarrier:
    """``exp(-lam (x - c t)) phi_lam(x)``."""

    c: float
    lam: float
    k: float
    phi: _EigenProfile

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.lam * (x - self.c * t)) * self.phi(x)


def upper_barrier(spec: SystemSpec, c: float, lam: float, N: int = 128, tol: float = 1e-9) -> UpperBarrier:
    phi = _EigenProfile(spec, lam, N)
    if lam * c + phi.k < -tol:
        raise ValueError(f"lam c + k(lam) = {lam * c + phi.k:.3e} < 0; not a supersolution")
    return UpperBarrier(c, lam, phi.k, phi)


def quadratic_remainder_bound(spec: SystemSpec, nl) -> float:
    """``M`` with ``|f(x,u) - A u|_inf <= M |u|_inf^2``."""
    M = 0.0
    base = nl
    if isinstance(nl, LowerBarrier):
        M += nl.beta
        base = nl.base
    if isinstance(base, Competition):
        M += spec.d * max(float(k.samples.max()) for k in base.kappa)
    return M


@dataclass
class XiBarrier:
    """``exp(-lam z) phi_lam - omega exp(-mu z) phi_mu`` with ``z = x - c t``."""

    c: float
    lam: float
    mu: float
    omega: float
    omega_star: float
    eta: float
    phi_lam: _EigenProfile
    phi_mu: _EigenProfile

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        z = x - self.c * t
        return np.exp(-self.lam * z) * self.phi_lam(x) - self.omega * np.exp(-self.mu * z) * self.phi_mu(x)

    def crossover(self) -> float:
        """Point right of which every component of ``xi(0, .)`` is positive (bound)."""
        return float(np.log(self.omega * self.phi_mu.sup / self.phi_lam.inf) / (self.mu - self.lam))


def lower_barrier_xi(spec: SystemSpec, c: float, omega_scale: float = 2.0, eta: float | None = None,
                     N: int = 128, beta_hat: float = 1.0) -> XiBarrier:
    """Subsolution of the barrier system for ``c > c*``.

    ``lam`` is the smaller root of ``lam c = -k(lam)`` and ``mu`` the midpoint
    of ``(lam, min(lam (1 + beta_hat), lam_2))``.  ``omega`` is ``omega_scale``
    times the larger of the explicit logarithmic bound and the value that
    keeps ``sup xi <= eta``.
    """
    cr = crossing_structure(spec, c, N)
    if cr.kind != "two_roots":
        raise WaveError("c < c*" if cr.kind == "below" else "c = c*",
                        f"c={c:.6g}, c*={cr.c_star:.6g}")
    lam, lam2 = cr.roots
    mu = 0.5 * (lam + min(lam * (1 + beta_hat), lam2))
    eta = barrier_eta(spec) if eta is None else eta
    bspec = lower_barrier_spec(spec, eta)
    M = quadratic_remainder_bound(spec, bspec.nonlinearity)
    pl, pm = _EigenProfile(spec, lam, N), _EigenProfile(spec, mu, N)
    gap = pm.k + mu * c
    if gap <= 0:
        raise WaveError("mu outside the admissible window", f"k(mu) + mu c = {gap:.3e}")
    Pl, pmi = pl.sup, pm.inf
    b = beta_hat
    log_w = ((mu - lam) / (b * lam) * np.log(M * Pl ** (1 + b) / (gap * pmi))
             - ((1 + b) * lam - mu) / (b * lam) * np.log(Pl / pmi))
    w_star = float(np.exp(log_w))
    w_eta = float((Pl / eta) ** ((mu - lam) / lam) * lam * Pl / (mu * pmi))
    omega = omega_scale * max(w_star, w_eta)
    return XiBarrier(c, lam, mu, omega, w_star, eta, pl, pm)


@dataclass
class WaveProfile:
    c: float
    x: np.ndarray
    profile: np.ndarray
    iterations: int
    sup_diff: float
    converged: bool
    upper: np.ndarray
    lower: np.ndarray
    lam: float
    wave_residual: float = np.nan
    tail_slope: float = np.nan
    history: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        d = self.profile.shape[0]
        hdr = ["x"] + [f"u_{i + 1}" for i in range(d)] + [f"upper_{i + 1}" for i in range(d)] \
            + [f"lower_{i + 1}" for i in range(d)]
        rows = (np.concatenate([[xi], self.profile[:, j], self.upper[:, j], self.lower[:, j]])
                for j, xi in enumerate(self.x))
        write_csv(path, hdr, rows, meta={"c": format(self.c, ".17g"), "iterations": self.iterations,
                                         "sup_diff": format(self.sup_diff, ".17g")})


def construct_wave(spec: SystemSpec, c: float, M: float = 30.0, X_max: float = 40.0,
                   tol: float = 1e-6, max_iter: int = 500, h: float = 1 / 16, dt: float = 0.01,
                   start: str = "xi", N: int = 128, buffer: float = 10.0, omega_scale: float = 2.0,
                   min_ratio: float = 1.05) -> WaveProfile:
    """Pulsating traveling wave of speed ``c`` by iterating the period map.

    One iteration evolves the state for time ``L/c``, shifts it left by one
    period ``L`` and clamps it between ``max(xi, 0)`` and the upper barrier.
    Left of ``-M`` the state is extended by ``max(min(v(-M), upper), xi)`` and
    right of ``X_max`` by the upper barrier.
    """
    cs, _ = min_speed_right(spec, N)
    if c < cs:
        raise WaveError("c < c*", f"c={c:.6g}, c*={cs:.6g}")
    if c < min_ratio * cs:
        raise WaveError("c too close to c*", f"need c >= {min_ratio} c* = {min_ratio * cs:.6g}")
    L = spec.period
    n_per = max(int(round(L / h)), 1)
    h = L / n_per
    M = np.ceil(M / L) * L
    X_max = np.ceil(X_max / L) * L
    B = np.ceil(buffer / L) * L
    x_ext = np.arange(-int(round((M + B) / h)), int(round((X_max + L + B) / h)) + 1) * h
    i0 = int(round(B / h))
    nG = int(round((M + X_max) / h)) + 1
    x = x_ext[i0:i0 + nG]
    left = slice(0, i0)
    right = slice(i0 + nG, None)

    ub = upper_barrier(spec, c, crossing_structure(spec, c, N).roots[0], N)
    xi = lower_barrier_xi(spec, c, omega_scale, None, N)
    U_ext, X_ext = ub(0.0, x_ext), xi(0.0, x_ext)
    U, Xi = U_ext[:, i0:i0 + nG], X_ext[:, i0:i0 + nG]
    lo = np.maximum(Xi, 0.0)

    nsteps = max(int(np.ceil((L / c) / dt)), 1)
    st = Stepper(spec, x_ext, (L / c) / nsteps, "neumann")

    def evolve(v):
        w = np.empty((spec.d, x_ext.size))
        w[:, i0:i0 + nG] = v
        w[:, left] = np.maximum(np.minimum(v[:, :1], U_ext[:, left]), X_ext[:, left])
        w[:, right] = U_ext[:, right]
        for _ in range(nsteps):
            w = st(w)
        return w

    def period_map(v):
        w = evolve(v)
        return w[:, i0 + n_per:i0 + n_per + nG]

    v = lo.copy() if start == "xi" else np.minimum(U, steady_level(spec))
    hist, diff = [], np.inf
    it = 0
    for it in range(1, max_iter + 1):
        nv = np.clip(period_map(v), lo, U)
        diff = float(np.max(np.abs(nv - v)))
        hist.append(diff)
        v = nv
        if diff < tol:
            break
    w = evolve(v)
    # u(L/c, x) against u(0, x - L) where both are inside the computed window
    resid = float(np.max(np.abs(w[:, i0 + n_per:i0 + nG] - v[:, :nG - n_per])))
    wp = WaveProfile(c, x, v, it, diff, diff < tol, U, Xi, xi.lam, resid, history=hist)
    wp.tail_slope = tail_log_slope(x, v, X_max - 20.0, X_max - 5.0)
    return wp


def tail_log_slope(x, u, a, b) -> float:
    """Minus the least-squares slope of ``log min_i u_i`` on ``[a, b]``."""
    m = (x >= a) & (x <= b)
    y = np.atleast_2d(u)[:, m].min(axis=0)
    if np.any(y <= 0):
        return np.nan
    return float(-np.polyfit(x[m], np.log(y), 1)[0])
