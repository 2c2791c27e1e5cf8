"""Spatially homogeneous two-species mutation-competition ODE.

    u' = (r_u - mu_u - kappa_u (u + v)) u + mu_v v
    v' = (r_v - mu_v - kappa_v (u + v)) v + mu_u u
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .reporting import write_csv


@dataclass(frozen=True)
class OdeParams:
    r_u: float
    r_v: float
    kappa_u: float
    kappa_v: float
    mu_u: float
    mu_v: float

    def __post_init__(self):
        for name in ("kappa_u", "kappa_v", "mu_u", "mu_v"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def A(self) -> np.ndarray:
        return np.array([[self.r_u - self.mu_u, self.mu_v], [self.mu_u, self.r_v - self.mu_v]])

    def rhs(self, u, v):
        S = u + v
        du = (self.r_u - self.mu_u - self.kappa_u * S) * u + self.mu_v * v
        dv = (self.r_v - self.mu_v - self.kappa_v * S) * v + self.mu_u * u
        return du, dv


@dataclass(frozen=True)
class Equilibrium:
    u: float
    v: float
    Q: float
    S: float
    jac: tuple
    lambda_A: float
    phi_A: np.ndarray


def lambda_A(p: OdeParams):
    """Eigenvalues ``lam1 > lam2`` of the linearization at 0 and the positive eigenvector of ``lam1``."""
    a, d = p.r_u - p.mu_u, p.r_v - p.mu_v
    disc = np.sqrt((a - d) ** 2 + 4 * p.mu_u * p.mu_v)
    l1, l2 = 0.5 * (a + d + disc), 0.5 * (a + d - disc)
    if a >= d:
        phi = np.array([a - d + disc, 2 * p.mu_u])
    else:
        # same direction, written without cancellation
        phi = np.array([2 * p.mu_v, d - a + disc])
    return float(l1), float(l2), phi / phi.max()


def equilibrium(p: OdeParams) -> Equilibrium:
    """Unique positive equilibrium, from the positive root ``Q = u*/v*`` of a quadratic.

    Raises ``ValueError`` when ``lambda_A <= 0`` (the origin attracts everything).
    """
    l1, _, phi = lambda_A(p)
    if l1 <= 0:
        raise ValueError(f"no positive equilibrium: lambda_A = {l1:.6g} <= 0")
    rho = p.kappa_u / p.kappa_v
    b = p.r_u - p.mu_u - rho * (p.r_v - p.mu_v)
    disc = np.sqrt(b * b + 4 * rho * p.mu_u * p.mu_v)
    # positive root of mu_u rho Q^2 - b Q - mu_v = 0, cancellation-free form
    Q = (b + disc) / (2 * p.mu_u * rho) if b >= 0 else 2 * p.mu_v / (disc - b)
    S = (p.r_v + p.mu_u * Q - p.mu_v) / p.kappa_v
    u, v = float(Q * S / (1 + Q)), float(S / (1 + Q))
    return Equilibrium(u, v, float(Q), float(S), jacobian(p, u, v), l1, phi)


def jacobian(p: OdeParams, u, v):
    """``(a, b, c, d)`` entries of the right-hand side Jacobian at ``(u, v)``."""
    a = p.r_u - p.mu_u - p.kappa_u * (2 * u + v)
    b = p.mu_v - p.kappa_u * u
    c = p.mu_u - p.kappa_v * v
    d = p.r_v - p.mu_v - p.kappa_v * (u + 2 * v)
    return (float(a), float(b), float(c), float(d))


def jacobian_identities(p: OdeParams, eq: Equilibrium):
    """``a`` and ``d`` rewritten with the equilibrium relations; both are negative."""
    a = -(p.kappa_u * eq.u + p.mu_v * eq.v / eq.u)
    d = -(p.kappa_v * eq.v + p.mu_u * eq.u / eq.v)
    return a, d


def stability_certificate(jac) -> dict:
    a, b, c, d = jac
    tr, det = a + d, a * d - b * c
    return {"trace": tr, "det": det, "stable": bool(tr < 0 and det > 0)}


def lyapunov_K(p: OdeParams, eq: Equilibrium) -> float | None:
    """Weight ``K`` making ``F_u + K F_v`` a Lyapunov function.

    ``K`` is the midpoint between the two positive roots of
    ``P(K) = C^2 K^2 - (4AD - 2BC) K + B^2`` where ``P < 0``.  Returns ``None``
    when ``BC >= AD``: then ``P`` has no negative values and the quadratic-form
    bound certifies no weight.  This happens when ``0 < r_v - mu_v < mu_u``
    and ``r_u - mu_u <= 0`` (or the mirror case), where ``B`` and ``C`` are
    both negative.
    """
    if max(p.r_u - p.mu_u, p.r_v - p.mu_v) <= 0:
        raise ValueError("Lyapunov weight needs max(r_u - mu_u, r_v - mu_v) > 0")
    A, D = p.kappa_u, p.kappa_v
    B = p.kappa_u - p.mu_v / eq.u
    C = p.kappa_v - p.mu_u / eq.v
    scale = max(A, D)
    if abs(B) <= 1e-14 * scale and abs(C) <= 1e-14 * scale:
        return 1.0
    if abs(C) <= 1e-14 * scale:
        return 2 * B * B / (4 * A * D - 2 * B * C)
    if B * C >= A * D:
        return None
    return (4 * A * D - 2 * B * C) / (2 * C * C)


def lyapunov_poly(p: OdeParams, eq: Equilibrium, K: float) -> float:
    A, D = p.kappa_u, p.kappa_v
    B = p.kappa_u - p.mu_v / eq.u
    C = p.kappa_v - p.mu_u / eq.v
    return C * C * K * K - (4 * A * D - 2 * B * C) * K + B * B


def lyapunov_value(K: float, eq: Equilibrium, u, v):
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    if np.any(u <= 0) or np.any(v <= 0):
        raise ValueError("Lyapunov function needs u, v > 0")
    Fu = u - eq.u - eq.u * np.log(u / eq.u)
    Fv = v - eq.v - eq.v * np.log(v / eq.v)
    return Fu + K * Fv


@dataclass
class Trajectory:
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def to_csv(self, path, K=None, eq=None) -> None:
        F = lyapunov_value(K, eq, self.u, self.v) if K is not None else np.full(self.t.size, np.nan)
        write_csv(path, ["t", "u", "v", "F_K"], zip(self.t, self.u, self.v, F))


def integrate(p: OdeParams, u0: float, v0: float, T: float, dt: float = 0.01) -> Trajectory:
    """Classical RK4 with the step capped at ``0.1 / ||J||_inf`` along the path."""
    if u0 < 0 or v0 < 0 or (u0 == 0 and v0 == 0):
        raise ValueError("initial data must be nonnegative and nontrivial")

    # plain floats: this loop runs ~1e4 times per trajectory
    f = p.rhs
    u, v = float(u0), float(v0)
    t = 0.0
    ts, ys = [0.0], [(u, v)]
    while t < T - 1e-14:
        a, b, c, d = jacobian(p, u, v)
        J = max(abs(a) + abs(b), abs(c) + abs(d))
        h = min(dt, 0.1 / max(J, 1e-300), T - t)
        k1u, k1v = f(u, v)
        k2u, k2v = f(u + 0.5 * h * k1u, v + 0.5 * h * k1v)
        k3u, k3v = f(u + 0.5 * h * k2u, v + 0.5 * h * k2v)
        k4u, k4v = f(u + h * k3u, v + h * k3v)
        u = u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (math.isfinite(u) and math.isfinite(v)):
            raise FloatingPointError("ODE solution blew up")
        t += h
        ts.append(t)
        ys.append((u, v))
    ys = np.array(ys)
    return Trajectory(np.array(ts), ys[:, 0], ys[:, 1])


def decay_rate_omega(jac, sigma_u: float, sigma_v: float) -> float:
    """``min(-(a+d)/2, -(a/sigma_u + d/sigma_v) / (1/sigma_u + 1/sigma_v))``."""
    if sigma_u <= 0 or sigma_v <= 0:
        raise ValueError("diffusivities must be positive")
    a, _, _, d = jac
    wu, wv = 1 / sigma_u, 1 / sigma_v
    om = min(-(a + d) / 2, -(wu * a + wv * d) / (wu + wv))
    if om <= 0:
        raise ValueError(f"nonpositive decay rate {om}; the equilibrium is inconsistent")
    return float(om)
