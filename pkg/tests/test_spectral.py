import numpy as np
import pytest

from hybridspread import (EigenError, k_curve, k_of_lambda, lambda1_dirichlet, lambda1_infinity,
                          load_corpus, mutation_spec, principal_eigen, scalar_spec)
from hybridspread.operators import assemble_L_lambda
from hybridspread.spectral import eigen_tolerance, k_prime, minimax_lower_bound


def dense_k(spec, lam, N):
    m = assemble_L_lambda(spec, lam, N).matrix.toarray()
    return float(np.min(np.linalg.eigvals(-m).real))


@pytest.mark.parametrize("lam", [-2.0, -0.5, 0.0, 0.3, 1.7])
def test_matches_dense_eigensolver(wavy, lam):
    assert k_of_lambda(wavy, lam, 64).value == pytest.approx(dense_k(wavy, lam, 64), abs=1e-9)


@pytest.mark.parametrize("lam", [-1.0, 0.5])
def test_matches_dense_eigensolver_for_systems(lam):
    spec = load_corpus("isotropic_even").spec
    assert k_of_lambda(spec, lam, 48).value == pytest.approx(dense_k(spec, lam, 48), abs=1e-9)


@pytest.mark.parametrize("sigma,q,r", [(1.0, 0.0, 1.0), (2.0, 0.5, 0.5), (0.5, -0.3, 2.0)])
def test_constant_scalar_symbol(sigma, q, r):
    for lam in (-1.5, 0.0, 0.8):
        k = k_of_lambda(scalar_spec(sigma, r, q), lam, 32).value
        assert k == pytest.approx(-sigma * lam ** 2 + q * lam - r, abs=1e-11)


def test_constant_mutation_model(mutation):
    rho = 1 + np.sqrt(0.5)
    for lam in (0.0, 1.0, -2.0):
        assert k_of_lambda(mutation, lam, 32).value == pytest.approx(-lam ** 2 - rho, abs=1e-11)


def test_pure_diffusion_has_zero_eigenvalue():
    spec = scalar_spec(lambda x: 1 + 0.5 * np.sin(2 * np.pi * x), 0.0, lambda x: np.cos(2 * np.pi * x))
    assert abs(k_of_lambda(spec, 0.0, 64).value) < 1e-11


def test_eigenvector_positive_with_small_residual(wavy):
    ep = k_of_lambda(wavy, 0.7, 128)
    assert ep.vector.min() > 0 and ep.vector.max() == pytest.approx(1.0)
    assert ep.residual < 1e-6


def test_power_iteration_agrees(wavy):
    a = k_of_lambda(wavy, 0.4, 32).value
    b = k_of_lambda(wavy, 0.4, 32, tol=1e-12, method="power").value
    assert a == pytest.approx(b, abs=1e-8)


def test_noncooperative_rejected():
    spec = mutation_spec().replace(A=mutation_spec().A)
    op = assemble_L_lambda(spec, 0.0, 16)
    m = op.matrix.tolil()
    m[0, 16] = -1.0
    with pytest.raises(EigenError):
        principal_eigen(m.tocsr())


def test_grid_doubles_for_large_lambda(kpp):
    ep = k_of_lambda(kpp, 40.0, 16)
    assert ep.N > 16
    assert ep.value == pytest.approx(-40.0 ** 2 - 1.0, rel=1e-10)


def test_dirichlet_eigenvalue_against_sine_mode():
    R = 3.0
    ep = lambda1_dirichlet(scalar_spec(1.0, 1.0), R, 256)
    assert ep.value == pytest.approx(np.pi ** 2 / (4 * R * R) - 1.0, abs=1e-4)


def test_k_curve_concave_with_cap(wavy):
    kc = k_curve(wavy, -3, 3, 41, 64)
    assert kc.concavity_defects().max() <= 1e-10
    alpha, beta = kc.quadratic_cap()
    assert beta > 0 and np.all(alpha - beta * kc.lambdas ** 2 >= kc.values)


def test_lambda1_infinity_ordering(wavy):
    l1 = lambda1_infinity(wavy, 64)
    assert l1.lambda1_per <= l1.value
    assert np.all(np.diff(l1.dirichlet_tail) < 0)
    assert np.all(l1.dirichlet_tail >= l1.value)
    assert abs(k_prime(wavy, l1.argmax, 64)) < 1e-6


def test_lambda1_infinity_is_k0_when_even(kpp):
    l1 = lambda1_infinity(kpp, 32, tail=False)
    assert l1.value == pytest.approx(-1.0, abs=1e-10)
    assert abs(l1.argmax) < 1e-6


def test_minimax_bound(wavy):
    rng = np.random.default_rng(1)
    k = k_of_lambda(wavy, 0.5, 64)
    for _ in range(10):
        assert minimax_lower_bound(wavy, 0.5, np.exp(rng.standard_normal(64)), 64) <= k.value + 1e-10
    assert minimax_lower_bound(wavy, 0.5, k.vector, 64) == pytest.approx(k.value, abs=1e-8)


def test_tolerance_context(wavy):
    with eigen_tolerance(1e-4):
        loose = k_of_lambda(wavy, 0.5, 64)
    tight = k_of_lambda(wavy, 0.5, 64)
    assert loose.iterations <= tight.iterations
    assert loose.value == pytest.approx(tight.value, abs=1e-3)
    with pytest.raises(ValueError):
        with eigen_tolerance(0.0):
            pass


# principal eigenvalues of corpus specs, from a dense eigensolver at N = 128
DENSE_K0 = {
    "scalar_drift": -1.0024427100019748,
    "isotropic_even": -1.2505249864141978,
    "divergence_symmetric": -1.2626669017318024,
    "anisotropic_strong": -0.9999999999846487,
}


@pytest.mark.parametrize("name", sorted(DENSE_K0))
def test_corpus_k0_frozen(name):
    assert k_of_lambda(load_corpus(name).spec, 0.0, 128).value == pytest.approx(DENSE_K0[name], abs=1e-8)
