"""Property suite run by ``hybridspread verify`` over the built-in corpus."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import check_structure, is_isotropic
from .config import corpus_names, load_corpus
from .operators import assemble_L_lambda
from .spectral import k_curve, k_of_lambda, lambda1_infinity, minimax_lower_bound
from .speed import (crossing_structure, drift_speed_ordering, min_speed_left, min_speed_right)


@dataclass
class Check:
    spec: str
    name: str
    passed: bool
    value: float
    tol: float

    def to_dict(self):
        return {"spec": self.spec, "check": self.name, "passed": bool(self.passed),
                "value": self.value, "tol": self.tol}


def check_spec(name: str, spec, N: int = 128, rng=None, n_random: int = 20) -> list:
    """All corpus-wide properties for one spec."""
    rng = np.random.default_rng(0) if rng is None else rng
    out = []

    def add(check, passed, value, tol):
        out.append(Check(name, check, bool(passed), float(value), float(tol)))

    st = check_structure(spec.A)
    add("cooperative", st["cooperative"], float(st["cooperative"]), 1)
    add("fully_coupled", st["fully_coupled"], float(st["fully_coupled"]), 1)

    ep = k_of_lambda(spec, 0.0, N)
    add("perron_vector_positive", ep.vector.min() > 0, ep.vector.min(), 0)

    # dense oracle on a coarse grid
    op = assemble_L_lambda(spec, 0.5, 32)
    ev = np.linalg.eigvals(-op.matrix.toarray())
    dense = float(np.min(ev.real))
    sparse = k_of_lambda(spec, 0.5, 32).value
    add("dense_eigen_agreement", abs(dense - sparse) <= 1e-8 * max(1, abs(dense)),
        abs(dense - sparse), 1e-8)

    kc = k_curve(spec, -3.0, 3.0, 41, N)
    worst = float(kc.concavity_defects().max())
    add("midpoint_concavity", worst <= 1e-10, worst, 1e-10)
    alpha, beta = kc.quadratic_cap()
    gap = float(np.min(alpha - beta * kc.lambdas ** 2 - kc.values))
    add("quadratic_cap", beta > 0 and gap >= 0, beta, 0)

    l1 = lambda1_infinity(spec, N)
    add("per_le_inf", l1.lambda1_per <= l1.value + 1e-12, l1.value - l1.lambda1_per, 0)
    add("inf_le_dirichlet", np.all(l1.dirichlet_tail >= l1.value - 1e-10),
        float(np.min(l1.dirichlet_tail - l1.value)), 0)
    add("dirichlet_decreasing", np.all(np.diff(l1.dirichlet_tail) < 0),
        float(np.max(np.diff(l1.dirichlet_tail))), 0)
    tail_gap = abs(l1.dirichlet_tail[-1] - l1.value)
    add("dirichlet_tail_gap", tail_gap < 0.05, tail_gap, 0.05)

    worst_mm = -np.inf
    for lam in (-1.0, 0.0, 1.0):
        k = k_of_lambda(spec, lam, N).value
        for _ in range(n_random // 3 + 1):
            phi = np.exp(0.5 * rng.standard_normal(spec.d * N))
            worst_mm = max(worst_mm, minimax_lower_bound(spec, lam, phi, N) - k)
    add("minimax_lower_bound", worst_mm <= 1e-9, worst_mm, 1e-9)

    iso = is_isotropic(spec)
    if iso:
        lams = np.linspace(0.1, 2.0, 20)
        odd = max(abs(k_of_lambda(spec, l, N).value - k_of_lambda(spec, -l, N).value) for l in lams)
        add(f"k_even[{iso}]", odd < 1e-8, odd, 1e-8)

    if ep.value < 0:
        cr, _ = min_speed_right(spec, N)
        cl, _ = min_speed_left(spec, N)
        add("speeds_positive", min(cr, cl) > 0, min(cr, cl), 0)
        if iso:
            add("isotropic_speeds_equal", abs(cr - cl) < 1e-6, abs(cr - cl), 1e-6)
        cs = crossing_structure(spec, 1.2 * cr, N)
        add("two_roots_above_cstar", cs.kind == "two_roots", len(cs.roots), 2)
        below = crossing_structure(spec, 0.9 * cr, N)
        add("no_root_below_cstar", below.kind == "below", len(below.roots), 0)
        if spec.d == 1 and np.max(np.abs(spec.q[0].samples)) > 0:
            pred = drift_speed_ordering(spec, 1e-6)
            ok = {"right_faster": cr > cl, "left_faster": cl > cr, "equal": True}[pred]
            add(f"drift_ordering[{pred}]", ok, cr - cl, 0)
    return out


def run_suite(names=None, N: int = 128, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    checks = []
    for name in names or corpus_names():
        checks.extend(check_spec(name, load_corpus(name).spec, N, rng))
    return checks
