import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import fsolve

from hybridspread.ode import (OdeParams, decay_rate_omega, equilibrium, integrate, jacobian,
                              jacobian_identities, lambda_A, lyapunov_K, lyapunov_poly, lyapunov_value,
                              stability_certificate)

SYM = OdeParams(2.0, 2.0, 1.0, 1.0, 1.0, 1.0)


def random_params(rng):
    while True:
        p = OdeParams(*rng.uniform(-0.5, 3.0, 2), *rng.uniform(0.3, 2.0, 2), *rng.uniform(0.1, 1.5, 2))
        if lambda_A(p)[0] > 0.05:
            return p


def test_lambda_A_examples():
    l1, l2, phi = lambda_A(OdeParams(1.5, 1.5, 1, 1, 0.5, 0.5))
    assert (l1, l2) == pytest.approx((1.5, 0.5)) and np.allclose(phi, [1, 1])
    assert lambda_A(OdeParams(3, 1, 1, 1, 1, 1))[0] == pytest.approx(1 + np.sqrt(2), abs=1e-12)


def test_lambda_A_against_numpy():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = random_params(rng)
        l1, l2, phi = lambda_A(p)
        w = np.sort(np.linalg.eigvals(p.A).real)
        assert (l2, l1) == pytest.approx(tuple(w), abs=1e-12)
        assert np.allclose(p.A @ phi, l1 * phi, atol=1e-12)


def test_weighted_mean_criterion():
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = OdeParams(*rng.uniform(-2, 2, 2), 1.0, 1.0, *rng.uniform(0.1, 2, 2))
        if (p.mu_v * p.r_u + p.mu_u * p.r_v) / (p.mu_u + p.mu_v) > 0:
            assert lambda_A(p)[0] > 0


def test_lambda_A_convex_in_mutation_scale():
    p = OdeParams(2.0, 0.5, 1, 1, 0.7, 0.3)
    f = lambda a: lambda_A(OdeParams(p.r_u, p.r_v, 1, 1, a * p.mu_u, a * p.mu_v))[0]  # noqa: E731
    al = np.linspace(0.1, 5, 60)
    v = np.array([f(a) for a in al])
    assert np.all(0.5 * (v[:-2] + v[2:]) - v[1:-1] >= -1e-10)


def test_symmetric_equilibrium():
    e = equilibrium(SYM)
    assert (e.Q, e.S, e.u, e.v) == pytest.approx((1, 2, 1, 1))
    assert e.jac == pytest.approx((-2, 0, 0, -2))
    cert = stability_certificate(e.jac)
    assert cert["trace"] == pytest.approx(-4) and cert["det"] == pytest.approx(4) and cert["stable"]
    assert lyapunov_K(SYM, e) == 1.0
    assert decay_rate_omega(e.jac, 1.0, 1.0) == pytest.approx(2.0)


def test_equilibrium_matches_root_finder():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = random_params(rng)
        e = equilibrium(p)
        root = fsolve(lambda y: p.rhs(*y), [e.u * 1.1, e.v * 0.9], xtol=1e-13)
        assert np.allclose(root, [e.u, e.v], atol=1e-10)
        assert max(abs(r) for r in p.rhs(e.u, e.v)) < 1e-12


def test_bound_windows():
    rng = np.random.default_rng(2)
    for _ in range(50):
        p = random_params(rng)
        e = equilibrium(p)
        if p.r_u - p.mu_u > p.mu_v:
            assert p.mu_v / p.kappa_u < e.u < (p.r_u - p.mu_u) / p.kappa_u
        if p.r_u - p.mu_u <= 0:
            assert 0 < e.u < p.mu_v / p.kappa_u


def test_no_equilibrium_when_origin_stable():
    with pytest.raises(ValueError, match="no positive equilibrium"):
        equilibrium(OdeParams(-1.0, -0.5, 1, 1, 0.5, 0.5))


def test_jacobian_against_finite_differences():
    rng = np.random.default_rng(3)
    for _ in range(10):
        p = random_params(rng)
        u, v = rng.uniform(0.1, 2, 2)
        h = 1e-6
        fu = (np.array(p.rhs(u + h, v)) - np.array(p.rhs(u - h, v))) / (2 * h)
        fv = (np.array(p.rhs(u, v + h)) - np.array(p.rhs(u, v - h))) / (2 * h)
        a, b, c, d = jacobian(p, u, v)
        assert np.allclose([a, c], fu, atol=1e-6) and np.allclose([b, d], fv, atol=1e-6)


def test_jacobian_at_origin_is_A():
    p = OdeParams(2.0, 1.0, 1, 1, 0.5, 0.3)
    assert np.allclose(np.array(jacobian(p, 0, 0)).reshape(2, 2), p.A)
    assert not stability_certificate(jacobian(p, 0, 0))["stable"]


def test_identities_and_lyapunov_weight():
    rng = np.random.default_rng(4)
    for _ in range(20):
        p = random_params(rng)
        e = equilibrium(p)
        a, d = jacobian_identities(p, e)
        assert a == pytest.approx(e.jac[0], abs=1e-10) and d == pytest.approx(e.jac[3], abs=1e-10)
        assert stability_certificate(e.jac)["stable"]
        if max(p.r_u - p.mu_u, p.r_v - p.mu_v) > 0:
            K = lyapunov_K(p, e)
            if K is None:
                # only possible when one growth excess is nonpositive and the other below its mutation rate
                assert min(p.r_u - p.mu_u, p.r_v - p.mu_v) <= 0
                assert p.r_u - p.mu_u < p.mu_v and p.r_v - p.mu_v < p.mu_u
            else:
                assert K > 0 and lyapunov_poly(p, e, K) < 0


GAP = OdeParams(-0.24833403730013476, 0.841542474348298, 1.1177144394186582, 0.49098130269631546,
                1.0346247188497315, 0.7822994588102533)


def test_no_certified_weight_when_both_cross_terms_negative():
    e = equilibrium(GAP)
    A, D = GAP.kappa_u, GAP.kappa_v
    B, C = A - GAP.mu_v / e.u, D - GAP.mu_u / e.v
    assert B < 0 and C < 0 and B * C > A * D
    assert lyapunov_K(GAP, e) is None


def test_uncertified_case_still_decreases_for_moderate_weight():
    # the quadratic-form bound fails here but the functional itself still decreases
    e = equilibrium(GAP)
    rng = np.random.default_rng(0)
    for _ in range(10):
        tr = integrate(GAP, *rng.uniform(0.01, 5, 2), 40.0)
        assert np.max(np.diff(lyapunov_value(1.0, e, tr.u, tr.v))) < 1e-12


def test_lyapunov_needs_a_growing_species():
    p = OdeParams(0.3, 0.2, 1, 1, 0.5, 0.5)
    if lambda_A(p)[0] > 0:
        with pytest.raises(ValueError):
            lyapunov_K(p, equilibrium(p))


def test_lyapunov_value_minimum():
    e = equilibrium(OdeParams(2.0, 1.0, 1.0, 1.5, 0.5, 0.4))
    assert lyapunov_value(2.0, e, e.u, e.v) == pytest.approx(0.0, abs=1e-15)
    h = 1e-6
    gu = (lyapunov_value(2.0, e, e.u + h, e.v) - lyapunov_value(2.0, e, e.u - h, e.v)) / (2 * h)
    gv = (lyapunov_value(2.0, e, e.u, e.v + h) - lyapunov_value(2.0, e, e.u, e.v - h)) / (2 * h)
    assert abs(gu) < 1e-8 and abs(gv) < 1e-8
    assert lyapunov_value(2.0, e, 0.3, 2.0) > 0
    with pytest.raises(ValueError):
        lyapunov_value(1.0, e, 0.0, 1.0)


def test_rk4_against_adaptive_integrator():
    p = OdeParams(2.0, 1.0, 1.0, 1.5, 0.5, 0.4)
    tr = integrate(p, 0.1, 0.2, 5.0, 0.01)
    ref = solve_ivp(lambda t, y: p.rhs(*y), (0, 5), [0.1, 0.2], method="DOP853", rtol=1e-12, atol=1e-14)
    assert np.allclose([tr.u[-1], tr.v[-1]], ref.y[:, -1], atol=1e-9)


def test_fixed_point_and_extinction():
    e = equilibrium(SYM)
    tr = integrate(SYM, e.u, e.v, 50.0)
    assert max(abs(tr.u - e.u).max(), abs(tr.v - e.v).max()) < 1e-10
    dead = integrate(OdeParams(-1.0, -0.5, 1, 1, 0.5, 0.5), 3.0, 1.0, 200.0)
    assert max(dead.u[-1], dead.v[-1]) < 1e-6


def test_omega_limits():
    jac = (-3.0, 0.2, 0.1, -1.0)
    assert decay_rate_omega(jac, 2.0, 2.0) == pytest.approx(2.0)
    assert decay_rate_omega(jac, 1e12, 1.0) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        decay_rate_omega((1.0, 0, 0, -0.5), 1.0, 1.0)


def test_trajectory_csv(tmp_path):
    e = equilibrium(SYM)
    tr = integrate(SYM, 0.5, 1.5, 1.0)
    tr.to_csv(tmp_path / "t.csv", 1.0, e)
    rows = np.loadtxt(tmp_path / "t.csv", delimiter=",", skiprows=1)
    assert rows.shape[1] == 4 and np.all(np.diff(rows[:, 3]) <= 1e-12)
