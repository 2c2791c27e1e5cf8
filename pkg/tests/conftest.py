import numpy as np
import pytest

from hybridspread import mutation_spec, scalar_spec


@pytest.fixture
def kpp():
    return scalar_spec(1.0, 1.0, kappa=1.0, label="kpp")


@pytest.fixture
def mutation():
    return mutation_spec(r_u=2.0, r_v=1.0, mu_u=0.5, mu_v=0.5, label="mutation")


@pytest.fixture
def wavy():
    """Scalar divergence-form spec with every coefficient nonconstant."""
    return scalar_spec(lambda x: 1 + 0.4 * np.sin(2 * np.pi * x),
                       lambda x: 1 + 0.5 * np.cos(2 * np.pi * x),
                       lambda x: 0.3 * np.cos(2 * np.pi * x) + 0.1, kappa=1.0, label="wavy")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if mod and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(mod.LINES):
            terminalreporter.write_line(mod.LINES[n])
