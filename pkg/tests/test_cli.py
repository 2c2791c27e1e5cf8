import json

import pytest

from hybridspread.cli import main

SPEC = """
[system]
label = kpp file
d = 1

[coefficients]
sigma_1 = 1
a_11 = 1

[nonlinearity]
kind = logistic
kappa_1 = 1

[numerics]
grid_n = 64
"""


@pytest.fixture
def spec_file(tmp_path):
    p = tmp_path / "kpp.ini"
    p.write_text(SPEC)
    return p


def read(out, name):
    return json.loads((out / f"{name}.json").read_text())


def test_speed_json(spec_file, tmp_path):
    out = tmp_path / "o"
    assert main(["speed", "--spec", str(spec_file), "--out", str(out)]) == 0
    rec = read(out, "speed")
    assert rec["status"] == "ok"
    assert rec["results"]["c_right"] == pytest.approx(2.0, rel=1e-9)
    assert rec["settings"]["grid_n"] == 64
    assert len(rec["spec"]["sha256"]) == 64
    assert [c["kind"] for c in rec["results"]["crossings"]] == ["below", "tangent", "two_roots"]
    assert (out / "speed.csv").exists()


def test_outputs_are_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["eig", "--spec", "corpus:scalar_drift", "--grid-n", "32", "--out", str(tmp_path / d)]) == 0
    for f in ("eig.json", "kcurve.csv", "dirichlet_tail.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_seventeen_digits(spec_file, tmp_path):
    main(["speed", "--spec", str(spec_file), "--out", str(tmp_path)])
    line = next(l for l in (tmp_path / "speed.json").read_text().splitlines() if '"c_right"' in l)
    digits = line.split(":")[1].strip(" ,").split("e")[0].replace(".", "").lstrip("0")
    assert len(digits) >= 16


def test_env_override(spec_file, tmp_path, monkeypatch):
    monkeypatch.setenv("HYBRIDSPREAD_GRID_N", "48")
    monkeypatch.setenv("HYBRIDSPREAD_SPEC", str(spec_file))
    assert main(["speed", "--out", str(tmp_path)]) == 0
    assert read(tmp_path, "speed")["settings"]["grid_n"] == 48
    assert main(["speed", "--grid-n", "40", "--out", str(tmp_path)]) == 0
    assert read(tmp_path, "speed")["settings"]["grid_n"] == 40


def test_wave_below_cstar_exits_2(tmp_path):
    assert main(["wave", "--spec", "corpus:mutation_constant", "--c", "1.0", "--out", str(tmp_path)]) == 2
    rec = read(tmp_path, "wave")
    assert rec["status"] == "rejected" and rec["reason"] == "c < c*"


def test_bad_spec_failure_record(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text(SPEC.replace("sigma_1 = 1", "sigma_1 = 1 +* 2"))
    assert main(["eig", "--spec", str(bad), "--out", str(tmp_path)]) == 3
    rec = read(tmp_path, "eig")
    assert rec["status"] == "error" and "*" in rec["detail"] and ":7:" in rec["detail"]


def test_invalid_overrides_rejected_before_work(spec_file, tmp_path):
    assert main(["speed", "--spec", str(spec_file), "--grid-n", "4", "--out", str(tmp_path)]) == 3
    assert main(["speed", "--out", str(tmp_path)]) == 3


def test_numerical_failure_record(tmp_path):
    spec = tmp_path / "s.ini"
    spec.write_text(SPEC)
    assert main(["ode", "--spec", str(spec), "--out", str(tmp_path)]) == 3
    assert read(tmp_path, "ode")["status"] == "error"


def test_ode_and_homogenize(tmp_path):
    assert main(["ode", "--spec", "corpus:mutation_constant", "--out", str(tmp_path)]) == 0
    r = read(tmp_path, "ode")["results"]
    assert r["regime"] == "persistence" and r["endpoint_error"] < 1e-6 and r["stability"]["stable"]
    assert main(["homogenize", "--spec", "corpus:piecewise_homog", "--grid-n", "64",
                 "--eps", "0.5,0.25", "--out", str(tmp_path)]) == 0
    h = read(tmp_path, "homogenize")["results"]
    assert h["sigma_harmonic"][0] == pytest.approx(1.6)


def test_reduce(tmp_path):
    assert main(["reduce", "--spec", "corpus:anisotropic_strong", "--grid-n", "64", "--eps", "0.2,0.1",
                 "--out", str(tmp_path)]) == 0
    r = read(tmp_path, "reduce")["results"]
    assert r["reduced"]["consistent"] and r["system_eps"]["left_faster"]
    assert (tmp_path / "reduced.csv").exists()


def test_verify_subset(tmp_path):
    assert main(["verify", "--only", "scalar_kpp", "--grid-n", "64", "--out", str(tmp_path)]) == 0
    assert read(tmp_path, "verify")["results"]["n_failed"] == 0
