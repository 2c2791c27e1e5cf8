"""Periodic coefficient fields, matrix fields and system descriptions.

Every coefficient is stored as uniform samples over one period and evaluated
elsewhere by periodic linear interpolation.  Downstream solvers only ever see
this representation; closed-form input is evaluated onto the grid first.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

MIN_SAMPLES = 8


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """One period of a scalar coefficient sampled on ``x_j = j * period / N``."""

    period: float
    samples: np.ndarray
    label: str = ""
    positive: bool = False

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples, got {s.size}")
        if not np.all(np.isfinite(s)):
            raise ValueError(f"field {self.label!r} has non-finite samples")
        if not self.period > 0:
            raise ValueError("period must be positive")
        if self.positive and s.min() <= 0:
            j = int(np.argmin(s))
            raise ValueError(
                f"field {self.label!r} must be positive; sample {float(s[j])!r} at x={j * self.period / s.size!r}"
            )
        object.__setattr__(self, "samples", _frozen(s))
        object.__setattr__(self, "period", float(self.period))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n) * (self.period / self.n)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = self.period / self.n
        s = np.mod(x, self.period) / h
        j = np.floor(s).astype(int)
        w = s - j
        j %= self.n
        return (1.0 - w) * self.samples[j] + w * self.samples[(j + 1) % self.n]

    def is_constant(self, tol: float = 0.0) -> bool:
        return float(np.ptp(self.samples)) <= tol

    def with_samples(self, samples, label: str | None = None) -> "PeriodicField":
        return PeriodicField(self.period, samples, self.label if label is None else label)

    @classmethod
    def from_function(cls, fn: Callable, period: float = 1.0, n: int = 128, label: str = "",
                      positive: bool = False) -> "PeriodicField":
        x = np.arange(n) * (period / n)
        vals = np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape)
        return cls(period, vals, label, positive)

    @classmethod
    def constant(cls, value: float, period: float = 1.0, n: int = 128, label: str = "",
                 positive: bool = False) -> "PeriodicField":
        return cls(period, np.full(n, float(value)), label, positive)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for x, v in zip(self.grid, self.samples):
                w.writerow([format(x, ".17g"), format(v, ".17g")])

    @classmethod
    def from_csv(cls, path, period: float | None = None, label: str = "",
                 positive: bool = False) -> "PeriodicField":
        """Load a two-column ``x,value`` table sampled on a uniform periodic grid.

        If ``period`` is omitted it is inferred as ``N * (x_1 - x_0)``.
        """
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() == "x":
                    continue
                rows.append((float(row[0]), float(row[1])))
        data = np.array(rows)
        if data.shape[0] < MIN_SAMPLES:
            raise ValueError(f"{path}: need at least {MIN_SAMPLES} rows")
        if period is None:
            period = data.shape[0] * (data[1, 0] - data[0, 0])
        return cls(period, data[:, 1], label or Path(path).stem, positive)


def sample_field(values_on_grid, period: float, label: str = "") -> PeriodicField:
    return PeriodicField(period, values_on_grid, label)


def mean_arithmetic(f: PeriodicField) -> float:
    # equal-weight periodic trapezoid rule
    return float(np.mean(f.samples))


def mean_harmonic(f: PeriodicField) -> float:
    if f.samples.min() <= 0:
        raise ValueError("harmonic mean needs a strictly positive field")
    return float(1.0 / np.mean(1.0 / f.samples))


def make_rapid(f: PeriodicField, eps: float) -> PeriodicField:
    """Return ``x -> f(x / eps)``, which has period ``eps * f.period``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return PeriodicField(eps * f.period, f.samples, f.label, f.positive)


@dataclass(frozen=True, eq=False)
class MatrixField:
    """d x d matrix of periodic fields sharing one period."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        d = len(rows)
        if d < 1 or any(len(r) != d for r in rows):
            raise ValueError("matrix field must be square")
        periods = {e.period for r in rows for e in r}
        if len(periods) != 1:
            raise ValueError("matrix entries must share one period")
        object.__setattr__(self, "entries", rows)

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def period(self) -> float:
        return self.entries[0][0].period

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points ``x``; result has shape ``(d, d) + x.shape``."""
        return np.array([[e(x) for e in row] for row in self.entries])

    def __getitem__(self, ij) -> PeriodicField:
        i, j = ij
        return self.entries[i][j]

    @classmethod
    def constant(cls, matrix, period: float = 1.0, n: int = 128) -> "MatrixField":
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(tuple(tuple(PeriodicField.constant(m[i, j], period, n, f"a{i + 1}{j + 1}")
                               for j in range(m.shape[1])) for i in range(m.shape[0])))

    def mean(self) -> np.ndarray:
        return np.array([[mean_arithmetic(e) for e in row] for row in self.entries])

    def rapid(self, eps: float) -> "MatrixField":
        return MatrixField(tuple(tuple(make_rapid(e, eps) for e in row) for row in self.entries))

    def permuted(self, perm: Sequence[int]) -> "MatrixField":
        return MatrixField(tuple(tuple(self.entries[i][j] for j in perm) for i in perm))


def _has_window(samples: np.ndarray, nu: float, w: int) -> bool:
    hit = samples >= nu
    if hit.all():
        return True
    # longest cyclic run of hits
    doubled = np.concatenate([hit, hit])
    run = best = 0
    for h in doubled:
        run = run + 1 if h else 0
        best = max(best, run)
    return best >= w


def check_structure(A: MatrixField, nu: float = 1e-8, w: int = 2) -> dict:
    """Cooperativity and (grid-windowed) full coupling of a matrix field."""
    d = A.d
    cooperative = all(A[i, j].samples.min() >= 0 for i in range(d) for j in range(d) if i != j)
    adj = np.zeros((d, d), dtype=int)
    for i in range(d):
        for j in range(d):
            if i != j and _has_window(A[i, j].samples, nu, w):
                adj[i, j] = 1
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    return {"cooperative": bool(cooperative), "fully_coupled": bool(ncomp == 1)}


# --- nonlinearities -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Linear:
    """f(x, u) = A(x) u."""

    kind = "linear"

    def quadratic(self, x, u):
        return np.zeros_like(u)

    def rapid(self, eps):
        return self


@dataclass(frozen=True, eq=False)
class Competition:
    """f_i(x, u) = (A(x) u)_i - kappa_i(x) u_i (u_1 + ... + u_d)."""

    kappa: tuple
    kind = "competition"

    def quadratic(self, x, u):
        kap = np.array([k(x) for k in self.kappa])
        return kap * u * u.sum(axis=0)

    def rapid(self, eps):
        return Competition(tuple(make_rapid(k, eps) for k in self.kappa))


@dataclass(frozen=True, eq=False)
class MutationCompetition(Competition):
    """Two-species mutation-competition model; keeps the raw rate fields."""

    r_u: PeriodicField = None
    r_v: PeriodicField = None
    mu_u: PeriodicField = None
    mu_v: PeriodicField = None
    kind = "mutation_competition"

    @property
    def kappa_u(self):
        return self.kappa[0]

    @property
    def kappa_v(self):
        return self.kappa[1]

    def rapid(self, eps):
        return MutationCompetition(tuple(make_rapid(k, eps) for k in self.kappa),
                                   *(make_rapid(f, eps) for f in (self.r_u, self.r_v, self.mu_u, self.mu_v)))


@dataclass(frozen=True, eq=False)
class LowerBarrier:
    """f(x, u) - beta u**2 (componentwise square)."""

    base: object
    beta: float
    kind = "lower_barrier_beta"

    def quadratic(self, x, u):
        return self.base.quadratic(x, u) + self.beta * u * u

    def rapid(self, eps):
        return LowerBarrier(self.base.rapid(eps), self.beta)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Coefficients of ``u_t = L u + f(x, u)`` on one period.

    ``L`` acts diagonally, species ``i`` getting diffusion ``sigma[i]`` and
    drift ``q[i]``; ``A`` is the linearization ``Df(x, 0)``.
    """

    sigma: tuple
    q: tuple
    A: MatrixField
    form: str = "divergence"
    nonlinearity: object = field(default_factory=Linear)
    label: str = ""

    def __post_init__(self):
        sigma, q = tuple(self.sigma), tuple(self.q)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "q", q)
        d = len(sigma)
        if len(q) != d or self.A.d != d:
            raise ValueError("sigma, q and A must all have dimension d")
        if self.form not in ("divergence", "nondivergence"):
            raise ValueError(f"unknown operator form {self.form!r}")
        periods = {f.period for f in sigma + q} | {self.A.period}
        if len(periods) != 1:
            raise ValueError(f"all fields must share one period, got {sorted(periods)}")
        for i, s in enumerate(sigma):
            if s.samples.min() <= 0:
                j = int(np.argmin(s.samples))
                raise ValueError(f"sigma_{i + 1} must be positive; {float(s.samples[j])!r} at x={float(s.grid[j])!r}")
        if isinstance(self.nonlinearity, MutationCompetition) and d != 2:
            raise ValueError("mutation_competition requires d = 2")

    @property
    def d(self) -> int:
        return len(self.sigma)

    @property
    def period(self) -> float:
        return self.A.period

    def reaction(self, x: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        """Return ``u -> f(x, u)`` for ``u`` of shape ``(d, len(x))``."""
        Ax = self.A(x)
        nl = self.nonlinearity

        def f(u):
            return np.einsum("ijn,jn->in", Ax, u) - nl.quadratic(x, u)

        return f

    def rapid(self, eps: float) -> "SystemSpec":
        return SystemSpec(tuple(make_rapid(s, eps) for s in self.sigma),
                          tuple(make_rapid(s, eps) for s in self.q),
                          self.A.rapid(eps), self.form, self.nonlinearity.rapid(eps),
                          f"{self.label}[eps={eps:g}]")

    def replace(self, **kw) -> "SystemSpec":
        args = dict(sigma=self.sigma, q=self.q, A=self.A, form=self.form,
                    nonlinearity=self.nonlinearity, label=self.label)
        args.update(kw)
        return SystemSpec(**args)


def _as_field(v, period, n, label, positive=False) -> PeriodicField:
    if isinstance(v, PeriodicField):
        return v
    if callable(v):
        return PeriodicField.from_function(v, period, n, label, positive)
    return PeriodicField.constant(float(v), period, n, label, positive)


def scalar_spec(sigma=1.0, r=1.0, q=0.0, kappa=None, form="divergence", period=1.0, n=128,
                label="scalar") -> SystemSpec:
    """Scalar spec; ``kappa`` switches on the logistic term ``-kappa u^2``."""
    s = _as_field(sigma, period, n, "sigma", True)
    qf = _as_field(q, period, n, "q")
    rf = _as_field(r, period, n, "r")
    nl = Linear() if kappa is None else Competition((_as_field(kappa, period, n, "kappa", True),))
    return SystemSpec((s,), (qf,), MatrixField(((rf,),)), form, nl, label)


def mutation_spec(sigma_u=1.0, sigma_v=1.0, r_u=1.0, r_v=1.0, kappa_u=1.0, kappa_v=1.0,
                  mu_u=1.0, mu_v=1.0, q_u=0.0, q_v=0.0, form="nondivergence", period=1.0,
                  n=128, label="mutation") -> SystemSpec:
    """The two-species mutation-competition model.

    Linearization at zero is ``[[r_u - mu_u, mu_v], [mu_u, r_v - mu_v]]``.
    Any argument may be a number, a callable of ``x`` or a PeriodicField.
    """
    F = lambda v, name, pos=False: _as_field(v, period, n, name, pos)  # noqa: E731
    su, sv = F(sigma_u, "sigma_u", True), F(sigma_v, "sigma_v", True)
    ru, rv = F(r_u, "r_u"), F(r_v, "r_v")
    ku, kv = F(kappa_u, "kappa_u", True), F(kappa_v, "kappa_v", True)
    mu, mv = F(mu_u, "mu_u", True), F(mu_v, "mu_v", True)
    A = MatrixField(((ru.with_samples(ru.samples - mu.samples, "a11"), mv),
                     (mu, rv.with_samples(rv.samples - mv.samples, "a22"))))
    nl = MutationCompetition((ku, kv), ru, rv, mu, mv)
    return SystemSpec((su, sv), (F(q_u, "q_u"), F(q_v, "q_v")), A, form, nl, label)


def _is_even(f: PeriodicField, tol: float) -> bool:
    s = f.samples
    return bool(np.max(np.abs(s - np.roll(s[::-1], 1))) <= tol * max(1.0, np.max(np.abs(s))))


def is_isotropic(spec: SystemSpec, tol: float = 1e-12) -> str | None:
    """Which symmetry makes ``k`` even, if any.

    ``'even'``: ``q = 0`` and every coefficient is even in ``x``;
    ``'symmetric'``: divergence form, ``q = 0`` and ``A(x)`` symmetric.
    """
    if any(np.max(np.abs(q.samples)) > tol for q in spec.q):
        return None
    d = spec.d
    fields = list(spec.sigma) + [spec.A[i, j] for i in range(d) for j in range(d)]
    if all(_is_even(f, tol) for f in fields):
        return "even"
    if spec.form == "divergence" and all(
            np.allclose(spec.A[i, j](spec.A[i, j].grid), spec.A[j, i](spec.A[i, j].grid), rtol=0, atol=tol)
            for i in range(d) for j in range(i)):
        return "symmetric"
    return None
