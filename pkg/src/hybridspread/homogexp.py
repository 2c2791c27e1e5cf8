"""Experiments for the two singular limits: rapidly oscillating coefficients
and fast exchange between two species (strong coupling).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coeffs import (Competition, Linear, MatrixField, MutationCompetition, PeriodicField,
                     SystemSpec)
from .ode import OdeParams, equilibrium
from .pde import SimConfig, compact_bump, simulate
from .reporting import write_csv
from .spectral import k_of_lambda
from .speed import (drift_integral, drift_speed_ordering, homogenized_speed, min_speed_left,
                    min_speed_right, strong_coupling_reduce)


@dataclass
class SweepTable:
    parameter: str
    params: np.ndarray
    values: np.ndarray
    reference: np.ndarray
    errors: np.ndarray
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def monotone_decline(self) -> bool:
        e = self.errors
        return bool(np.all(np.isfinite(e)) and np.all(np.diff(e) < 0))

    def to_csv(self, path) -> None:
        cols = [self.parameter, "value", "reference", "error"] + list(self.extra)
        rows = zip(self.params, self.values, self.reference, self.errors, *self.extra.values())
        meta = dict(self.meta)
        meta["monotone_decline"] = self.monotone_decline
        write_csv(path, cols, rows, meta)


def epsilon_speed_sweep(spec: SystemSpec, eps_list, N_per: int = 128, refine_check: bool = False,
                        workers: int = 1) -> SweepTable:
    """``c*`` of the rescaled coefficients ``x -> coef(x / eps)`` against the homogenized speed.

    Each eigenproblem is posed on one cell of length ``eps L`` with ``N_per``
    points, i.e. ``N_per / eps`` points per unit cell.
    """
    eps_list = np.asarray(eps_list, dtype=float)
    if np.any(eps_list <= 0) or np.any(eps_list > 1) or np.any(np.diff(eps_list) >= 0):
        raise ValueError("eps_list must be decreasing in (0, 1]")
    c_hom = homogenized_speed(spec)

    def row(eps):
        rs = spec.rapid(float(eps))
        try:
            c = min_speed_right(rs, N_per)[0]
        except Exception as exc:  # reported per row
            return np.nan, np.nan, str(exc)
        c2 = min_speed_right(rs, 2 * N_per)[0] if refine_check else np.nan
        return c, c2, ""

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(row, eps_list))
    else:
        rows = [row(e) for e in eps_list]
    vals = np.array([r[0] for r in rows])
    extra = {"grid_points_per_unit": N_per / eps_list}
    if refine_check:
        extra["value_doubled_grid"] = np.array([r[1] for r in rows])
    meta = {"spec": spec.label, "N_per_period": N_per, "c_hom": format(c_hom, ".17g")}
    fails = [r[2] for r in rows if r[2]]
    if fails:
        meta["failures"] = "; ".join(fails)
    return SweepTable("eps", eps_list, vals, np.full(vals.size, c_hom), np.abs(vals - c_hom), meta, extra)


def strong_coupling_system(spec2: SystemSpec, p: PeriodicField, eps: float) -> SystemSpec:
    """Two-species spec with exchange terms ``-(p u - (1 - p) v) / eps`` and its negative.

    Linearization at zero: ``[[r_u - p/eps, (1-p)/eps], [p/eps, r_v - (1-p)/eps]]``.
    """
    if spec2.d != 2:
        raise ValueError("strong coupling needs 2 species")
    x = p.grid
    nl = spec2.nonlinearity
    if getattr(nl, "r_u", None) is not None:
        ru, rv = nl.r_u(x), nl.r_v(x)
    else:
        ru, rv = spec2.A[0, 0](x), spec2.A[1, 1](x)
    ps = p.samples
    L = p.period
    A = MatrixField(((PeriodicField(L, ru - ps / eps, "a11"), PeriodicField(L, (1 - ps) / eps, "a12")),
                     (PeriodicField(L, ps / eps, "a21"), PeriodicField(L, rv - (1 - ps) / eps, "a22"))))
    new_nl = Competition(nl.kappa) if isinstance(nl, Competition) else Linear()
    sig = tuple(PeriodicField(L, s(x), s.label, True) for s in spec2.sigma)
    q = tuple(PeriodicField(L, s(x), s.label) for s in spec2.q)
    return SystemSpec(sig, q, A, "divergence", new_nl, f"strong coupling eps={eps:g}")


def strong_coupling_sweep(spec2: SystemSpec, p: PeriodicField, eps_list, lam_grid,
                          N: int = 128, workers: int = 1) -> SweepTable:
    """Sup over ``lam_grid`` of ``|k_eps(lam) - k_0(lam)|`` for each ``eps``."""
    lam_grid = np.asarray(lam_grid, dtype=float)
    red = strong_coupling_reduce(spec2, p)
    k0 = np.array([k_of_lambda(red, l, N).value for l in lam_grid])

    def row(eps):
        sys = strong_coupling_system(spec2, p, float(eps))
        try:
            ke = np.array([k_of_lambda(sys, l, N).value for l in lam_grid])
        except Exception:
            return np.nan
        return float(np.max(np.abs(ke - k0)))

    eps_list = np.asarray(eps_list, dtype=float)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            errs = np.array(list(ex.map(row, eps_list)))
    else:
        errs = np.array([row(e) for e in eps_list])
    meta = {"N": N, "lam_min": lam_grid.min(), "lam_max": lam_grid.max(), "n_lam": lam_grid.size}
    return SweepTable("eps", eps_list, errs, np.zeros_like(errs), errs, meta,
                      {"k0_max": np.full(errs.size, float(k0.max()))})


def anisotropy_report(spec: SystemSpec, N: int = 128) -> dict:
    """Both speeds of a scalar spec and whether their order matches the drift integral."""
    cr, _ = min_speed_right(spec, N)
    cl, _ = min_speed_left(spec, N)
    m = drift_integral(spec)
    pred = drift_speed_ordering(spec, tol=1e-6)
    gap = cr - cl
    if pred == "right_faster":
        ok = gap > 0
    elif pred == "left_faster":
        ok = gap < 0
    else:
        ok = True
    return {"c_right": cr, "c_left": cl, "integral_q_over_2sigma": m, "prediction": pred,
            "consistent": bool(ok)}


def homogenized_equilibrium(spec: SystemSpec):
    """Equilibrium of the mutation ODE with arithmetic-mean coefficients, or ``None`` if extinct."""
    nl = spec.nonlinearity
    if not isinstance(nl, MutationCompetition):
        raise ValueError("homogenized equilibrium is defined for the mutation model")
    p = OdeParams(*(float(np.mean(f.samples)) for f in (nl.r_u, nl.r_v, nl.kappa_u, nl.kappa_v,
                                                         nl.mu_u, nl.mu_v)))
    try:
        e = equilibrium(p)
    except ValueError:
        return None
    return np.array([e.u, e.v])


def rapidosc_longtime(spec: SystemSpec, eps: float, config: SimConfig | None = None,
                      window=(-5.0, 5.0), bump_center: float = 0.0, bump_width: float = 2.0,
                      amplitude: float = 0.1) -> dict:
    """Long-time state of the rescaled mutation model against the averaged equilibrium."""
    if config is None:
        config = SimConfig(domain=(-10.0, 10.0), N_x=2561, dt=0.01, T=200.0)
    rs = spec.rapid(eps) if eps < 1 else spec
    x = config.x
    u0 = np.tile(compact_bump(x, bump_center, bump_width, amplitude), (spec.d, 1))
    res = simulate(rs, u0, config)
    w = (x >= window[0]) & (x <= window[1])
    target = homogenized_equilibrium(spec)
    state = res.state.u[:, w]
    if target is None:
        dev = float(np.max(np.abs(state)))
        rel = dev
    else:
        dev = float(np.max(np.abs(state - target[:, None])))
        rel = dev / float(np.max(target))
    return {"sup_deviation": dev, "relative_deviation": rel,
            "target": None if target is None else target.tolist(),
            "state": res.state.u, "x": x, "clamped": res.clamped}
