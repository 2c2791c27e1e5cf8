"""Finite-difference assembly of ``L``, the conjugated operator ``L_lambda`` and ``L_lambda + A``.

Unknowns are ordered species-major: entry ``i * n + j`` is species ``i`` at node ``j``.

Divergence form uses face fluxes with face diffusivities taken as the harmonic
average of the two neighbouring nodes.  With that choice the discrete operator
satisfies ``B(lam).T == B(-lam)`` exactly when ``q == 0`` and the discrete
harmonic mean of a piecewise-constant diffusivity is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .coeffs import SystemSpec

BCS = ("periodic", "dirichlet", "neumann")


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    matrix: sp.csr_matrix
    x: np.ndarray
    h: float
    bc: str
    lam: float
    form: str
    d: int

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def apply(self, v) -> np.ndarray:
        return apply(self, v)

    def offdiag_min(self) -> float:
        m = self.matrix.tocoo()
        off = m.row != m.col
        return float(m.data[off].min()) if off.any() else 0.0

    def to_triplets(self, path) -> None:
        """Dump the matrix as ``row col value`` lines."""
        m = self.matrix.tocoo()
        with open(path, "w") as fh:
            for r, c, v in zip(m.row, m.col, m.data):
                fh.write(f"{r} {c} {v:.17g}\n")


def apply(op: DiscreteOperator, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[0] != op.size:
        raise ValueError(f"vector length {v.shape[0]} does not match operator size {op.size}")
    return op.matrix @ v


def _harm(a, b):
    return 2.0 * a * b / (a + b)


def grid(bc: str, N: int, period: float, domain=None, R: float | None = None):
    """Node layout for a boundary condition.

    Returns ``(x_all, h, interior)`` where ``x_all`` includes Dirichlet boundary
    nodes and ``interior`` selects the unknowns.
    """
    if bc == "periodic":
        a, b = (0.0, period) if domain is None else domain
        h = (b - a) / N
        x = a + h * np.arange(N)
        return x, h, slice(None)
    if bc == "dirichlet":
        if R is not None:
            a, b = -R, R
            n = int(np.ceil(round(2.0 * R * N / period, 9)))
        else:
            a, b = domain
            n = N
        h = (b - a) / n
        x = a + h * np.arange(n + 1)
        return x, h, slice(1, n)
    if bc == "neumann":
        a, b = domain
        h = (b - a) / (N - 1)
        return a + h * np.arange(N), h, slice(None)
    raise ValueError(f"unknown boundary condition {bc!r}; expected one of {BCS}")


def _stencil(s_all, q_all, interior, bc, h, lam, form):
    """Return (lower, diag, upper) coefficient arrays for one species on the unknown nodes."""
    if bc == "periodic":
        s_pf = _harm(s_all, np.roll(s_all, -1))
        s_mf = np.roll(s_pf, 1)
    elif bc == "neumann":
        faces = _harm(s_all[:-1], s_all[1:])
        s_pf = np.concatenate([faces, faces[-1:]])
        s_mf = np.concatenate([faces[:1], faces])
    else:
        faces = _harm(s_all[:-1], s_all[1:])
        s_pf = faces[1:]
        s_mf = faces[:-1]
    s = s_all[interior]
    q = q_all[interior]
    h2 = h * h
    if form == "divergence":
        up = s_pf / h2 - lam * s_pf / h + q / (2 * h)
        lo = s_mf / h2 + lam * s_mf / h - q / (2 * h)
        dg = -(s_pf + s_mf) / h2 - lam * q + lam * lam * 0.5 * (s_pf + s_mf)
    else:
        drift = -2.0 * lam * s + q
        up = s / h2 + drift / (2 * h)
        lo = s / h2 - drift / (2 * h)
        dg = -2.0 * s / h2 - lam * q + lam * lam * s
    return lo, dg, up


def _block(lo, dg, up, bc):
    n = dg.size
    j = np.arange(n)
    rows = [j, j[1:], j[:-1]]
    cols = [j, j[1:] - 1, j[:-1] + 1]
    vals = [dg, lo[1:], up[:-1]]
    if bc == "periodic":
        rows += [np.array([0]), np.array([n - 1])]
        cols += [np.array([n - 1]), np.array([0])]
        vals += [lo[:1], up[-1:]]
    elif bc == "neumann":
        # ghost node mirrors its interior neighbour
        rows += [np.array([0]), np.array([n - 1])]
        cols += [np.array([1]), np.array([n - 2])]
        vals += [lo[:1], up[-1:]]
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def assemble_L_lambda(spec: SystemSpec, lam: float = 0.0, N: int = 128, bc: str = "periodic",
                      domain=None, R: float | None = None, with_A: bool = True) -> DiscreteOperator:
    """Assemble ``L_lam + A`` (or ``L_lam`` alone with ``with_A=False``).

    Parameters
    ----------
    N : int
        Grid points per period for ``periodic`` (or per period length for the
        Dirichlet problem on ``(-R, R)``); total node count for ``neumann``.
    domain : tuple, optional
        ``(a, b)`` for periodic or Neumann grids; periodic defaults to one period.
    R : float, optional
        Half-width of the Dirichlet interval ``(-R, R)``.
    """
    if N < 16:
        raise ValueError(f"grid too small: N={N} < 16")
    if bc == "dirichlet" and R is None and domain is None:
        raise ValueError("dirichlet assembly needs R or domain")
    if bc == "neumann" and domain is None:
        raise ValueError("neumann assembly needs a domain")
    x_all, h, interior = grid(bc, N, spec.period, domain, R)
    x = x_all[interior]
    n, d = x.size, spec.d
    rows, cols, vals = [], [], []
    for i in range(d):
        s_all = spec.sigma[i](x_all)
        if s_all.min() <= 0:
            k = int(np.argmin(s_all))
            raise ValueError(f"sigma_{i + 1} nonpositive ({float(s_all[k])!r}) at x={float(x_all[k])!r}")
        lo, dg, up = _stencil(s_all, spec.q[i](x_all), interior, bc, h, lam, spec.form)
        r, c, v = _block(lo, dg, up, bc)
        rows.append(r + i * n)
        cols.append(c + i * n)
        vals.append(v)
    if with_A:
        Ax = spec.A(x)
        j = np.arange(n)
        for i in range(d):
            for k in range(d):
                rows.append(j + i * n)
                cols.append(j + k * n)
                vals.append(Ax[i, k])
    m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(d * n, d * n)).tocsr()
    m.sum_duplicates()
    return DiscreteOperator(m, x, h, bc, float(lam), spec.form, d)


def assemble_L(spec: SystemSpec, N: int = 128, bc: str = "periodic", domain=None,
               R: float | None = None) -> DiscreteOperator:
    """Assemble the diffusion-advection operator ``L`` alone."""
    return assemble_L_lambda(spec, 0.0, N, bc, domain, R, with_A=False)
