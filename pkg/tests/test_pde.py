import numpy as np
import pytest

from hybridspread import SimConfig, WaveError, construct_wave, min_speed_right, mutation_spec, scalar_spec, simulate
from hybridspread.operators import assemble_L
from hybridspread.pde import (SimulationError, Stepper, barrier_eta, comparison_experiment, compact_bump,
                              front_position, hair_trigger_experiment, lower_barrier_spec, lower_barrier_xi,
                              steady_level, tail_log_slope, upper_barrier, write_snapshot)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(N_x=64)
    with pytest.raises(ValueError):
        SimConfig(bc="dirichlet")
    with pytest.raises(ValueError):
        SimConfig(domain=(1.0, 0.0))
    assert SimConfig(domain=(0, 10), N_x=129).h == pytest.approx(10 / 128)


def test_heat_mode_decay():
    # u = cos(pi x / 10) on [0, 10] with Neumann ends decays like exp(-(pi/10)^2 t)
    conf = SimConfig(domain=(0.0, 10.0), N_x=513, dt=1e-3, T=1.0)
    x = conf.x
    spec = scalar_spec(1.0, 0.0)
    st = Stepper(spec, x, conf.dt)
    u = (1 + np.cos(np.pi * x / 10))[None, :]
    for _ in range(1000):
        u = st(u)
    exact = 1 + np.exp(-(np.pi / 10) ** 2) * np.cos(np.pi * x / 10)
    assert np.max(np.abs(u[0] - exact)) < 1e-4


def test_peclet_guard():
    x = np.linspace(0, 10, 200)
    with pytest.raises(SimulationError, match="Peclet"):
        Stepper(scalar_spec(0.01, 1.0, 5.0), x, 0.01)


def test_positivity_and_no_clamps(mutation):
    conf = SimConfig(domain=(0.0, 40.0), N_x=256, dt=0.05, T=5.0)
    u0 = np.tile(compact_bump(conf.x, 20.0, 2.0, 1.0), (2, 1))
    res = simulate(mutation, u0, conf)
    assert res.state.u.min() >= 0 and res.clamped == 0


def test_logistic_saturates(kpp):
    conf = SimConfig(domain=(0.0, 20.0), N_x=200, dt=0.05, T=30.0, bc="periodic")
    res = simulate(kpp, np.full((1, 200), 0.05), conf)
    assert np.allclose(res.state.u, 1.0, atol=1e-6)


def test_front_position():
    x = np.linspace(0, 10, 11)
    u = np.where(x <= 4, 1.0, 0.0)
    assert front_position(u, x, 0.5) == 4.0
    assert front_position(u, x, 0.5, "left") == 0.0
    assert front_position(np.zeros(11), x, 0.5) == -np.inf


def test_kpp_front_speed(kpp):
    conf = SimConfig(domain=(0.0, 200.0), N_x=1601, dt=0.02, T=50.0)
    res = simulate(kpp, lambda x: np.where(x < 10, 1.0, 0.0)[None, :], conf)
    # log-delay makes the measured speed slightly low
    assert 1.9 < res.right.fitted_speed < 2.0


def test_steady_level_and_eta(mutation, kpp):
    assert steady_level(kpp) == pytest.approx(1.0)
    assert barrier_eta(mutation) == pytest.approx(0.5)
    spec = mutation_spec(kappa_u=2.0, kappa_v=1.0, mu_u=0.3, mu_v=0.8)
    assert barrier_eta(spec) == pytest.approx(min(0.8 / 2.0, 0.3 / 1.0))


def test_lower_barrier_beta(mutation):
    b = lower_barrier_spec(mutation)
    # row sums of A are 2 and 1; beta = 1.1 * 2 / eta
    assert b.nonlinearity.beta == pytest.approx(1.1 * 2.0 / 0.5)


def test_eta_is_supersolution_of_barrier_system(mutation):
    b = lower_barrier_spec(mutation)
    x = np.linspace(0, 1, 16)
    f = b.reaction(x)(np.full((2, 16), barrier_eta(mutation)))
    assert np.all(f <= 0)


def test_comparison_short_run(mutation):
    conf = SimConfig(domain=(0.0, 60.0), N_x=400, dt=0.02, T=10.0)
    u0 = np.tile(np.where(np.abs(conf.x - 30) < 5, 1.2, 0.0), (2, 1))
    out = comparison_experiment(mutation, None, u0, conf)
    assert not out["aborted"] and out["max_violation"] < 1e-10 and out["barrier_max"] <= out["eta"]


def test_hair_trigger_inapplicable_without_growth():
    out = hair_trigger_experiment(scalar_spec(1.0, -0.2), 0.0, 1.0,
                                  SimConfig(domain=(-10, 10), N_x=200, T=1.0))
    assert not out["applicable"]


def test_upper_barrier_shift_identity(mutation):
    cs, _ = min_speed_right(mutation)
    c = 1.2 * cs
    lam = (c - np.sqrt(c * c - 4 * (1 + np.sqrt(0.5)))) / 2
    ub = upper_barrier(mutation, c, lam)
    x = np.linspace(-3, 3, 50)
    assert np.allclose(ub(1.0 / c, x), ub(0.0, x - 1.0), rtol=1e-12)
    with pytest.raises(ValueError):
        upper_barrier(mutation, 0.5 * cs, lam)


def test_xi_barrier_is_discrete_subsolution(mutation):
    cs, _ = min_speed_right(mutation)
    xi = lower_barrier_xi(mutation, 1.2 * cs)
    assert xi.lam < xi.mu
    x = np.arange(-20 * 128, 40 * 128 + 1) / 128
    L = assemble_L(mutation, x.size, "neumann", domain=(x[0], x[-1])).matrix
    f = lower_barrier_spec(mutation, xi.eta).reaction(x)
    X = xi(0.0, x)
    dt = 1e-5
    Xt = (xi(dt, x) - xi(-dt, x)) / (2 * dt)
    res = Xt - (L @ X.ravel()).reshape(X.shape) - f(np.maximum(X, 0))
    inside = (X > 0).all(axis=0)
    inside[:5] = inside[-5:] = False
    assert res[:, inside].max() <= 1e-9
    assert X.max() <= xi.eta
    assert np.all(X[:, x > xi.crossover()] > 0)


def test_wave_rejects_slow_speeds(mutation):
    cs, _ = min_speed_right(mutation)
    with pytest.raises(WaveError) as e:
        construct_wave(mutation, 0.9 * cs)
    assert e.value.reason == "c < c*"
    with pytest.raises(WaveError, match="too close"):
        construct_wave(mutation, 1.01 * cs)


def test_tail_log_slope():
    x = np.linspace(0, 10, 101)
    assert tail_log_slope(x, np.exp(-0.7 * x), 2, 8) == pytest.approx(0.7)
    assert np.isnan(tail_log_slope(x, np.zeros(101), 2, 8))


def test_snapshot_csv(tmp_path):
    write_snapshot(tmp_path / "s.csv", np.linspace(0, 1, 5), np.ones((2, 5)), 1.5)
    text = (tmp_path / "s.csv").read_text()
    assert text.startswith("# t: 1.5") and "u_2" in text
