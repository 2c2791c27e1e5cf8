import numpy as np
import pytest

from hybridspread import MutationCompetition, SpecError, load_corpus, parse_spec, parse_spec_text
from hybridspread.config import corpus_names, eval_expression

KPP = """
[system]
d = 1

[coefficients]
sigma_1 = 1
a_11 = 1
"""

MUTATION = """
[system]
label = two species
d = 2
period = 2.0
form = nondivergence
samples = 64

[coefficients]
sigma_1 = 1 + 0.2*cos(pi*x)
sigma_2 = 0.5

[nonlinearity]
kind = mutation_competition
r_u = 2
r_v = 1 + 0.5*sin(pi*x)
kappa_u = 1
kappa_v = 2
mu_u = 0.5
mu_v = 0.25
"""


def test_minimal_kpp():
    spec = parse_spec_text(KPP).spec
    assert spec.d == 1 and spec.period == 1.0
    assert np.all(spec.sigma[0].samples == 1.0) and np.all(spec.A[0, 0].samples == 1.0)
    assert np.all(spec.q[0].samples == 0.0)


def test_mutation_file_has_all_fields():
    spec = parse_spec_text(MUTATION).spec
    nl = spec.nonlinearity
    assert isinstance(nl, MutationCompetition)
    x = spec.sigma[0].grid
    assert spec.period == 2.0 and spec.sigma[0].n == 64
    assert np.allclose(spec.sigma[0].samples, 1 + 0.2 * np.cos(np.pi * x))
    assert np.allclose(nl.r_v.samples, 1 + 0.5 * np.sin(np.pi * x))
    assert np.allclose(nl.kappa_v.samples, 2.0) and np.allclose(nl.mu_v.samples, 0.25)
    assert np.allclose(spec.A[0, 0].samples, 1.5) and np.allclose(spec.A[1, 0].samples, 0.5)


def test_expression_functions():
    x = np.array([0.0, 0.5, 1.0])
    assert np.allclose(eval_expression("step(x - 0.5)", x), [0, 1, 1])
    assert np.allclose(eval_expression("sqrt(4) + exp(0) - 2**3 / 4", x), 1.0)
    assert np.allclose(eval_expression("-x + e - e", x), -x)


@pytest.mark.parametrize("expr,token", [("1 + * x", "*"), ("foo(x)", "foo"), ("y + 1", "y"),
                                        ("x.real", "x.real"), ("[1, 2]", "[1, 2]"), ("__import__('os')", "__import__")])
def test_malformed_expression_names_token(expr, token):
    with pytest.raises(SpecError, match=token.replace("*", r"\*").replace("[", r"\[").replace(".", r"\.")):
        eval_expression(expr, np.zeros(3))


def test_error_reports_line_number():
    text = KPP.replace("a_11 = 1", "a_11 = 1 +")
    with pytest.raises(SpecError, match=r"<string>:7:"):
        parse_spec_text(text)


def test_nonpositive_sigma_reports_sample_point():
    text = KPP.replace("sigma_1 = 1", "sigma_1 = 0.5 - x")
    with pytest.raises(SpecError, match=r"sigma_1 must be positive.*x=0\.5"):
        parse_spec_text(text)


def test_nonfinite_expression():
    with pytest.raises(SpecError, match="not finite"):
        parse_spec_text(KPP.replace("a_11 = 1", "a_11 = 1 / x"))


def test_bad_sections():
    with pytest.raises(SpecError, match=r"\[system\]"):
        parse_spec_text("[coefficients]\nsigma_1 = 1\n")
    with pytest.raises(SpecError, match="unknown nonlinearity"):
        parse_spec_text(KPP + "[nonlinearity]\nkind = cubic\n")
    with pytest.raises(SpecError, match="derived"):
        parse_spec_text(MUTATION.replace("sigma_2 = 0.5", "sigma_2 = 0.5\na_12 = 1"))
    with pytest.raises(SpecError, match="missing"):
        parse_spec_text(MUTATION.replace("mu_v = 0.25", ""))


def test_csv_coefficient(tmp_path):
    from hybridspread import PeriodicField
    PeriodicField.from_function(lambda x: 1 + 0.5 * np.sin(2 * np.pi * x), 1.0, 32, positive=True).to_csv(
        tmp_path / "sigma.csv")
    (tmp_path / "s.ini").write_text(KPP.replace("sigma_1 = 1", "sigma_1 = csv:sigma.csv"))
    spec = parse_spec(tmp_path / "s.ini").spec
    assert spec.sigma[0].n == 32 and spec.sigma[0].samples.max() == pytest.approx(1.5)


def test_missing_file():
    with pytest.raises(SpecError, match="cannot read"):
        parse_spec("/nonexistent/spec.ini")


def test_corpus_has_required_entries():
    names = corpus_names()
    assert len(names) >= 8
    for n in names:
        assert load_corpus(n).spec.d in (1, 2)
    strong = load_corpus("anisotropic_strong")
    assert strong.eps == 0.05 and strong.p is not None
    assert strong.spec.A.mean()[0, 1] == pytest.approx(0.5 / 0.05)
