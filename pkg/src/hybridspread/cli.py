"""Command-line entry point.

Every subcommand writes ``<subcommand>.json`` (and CSV tables where relevant)
into ``--out``.  Flags may also be set through environment variables
``HYBRIDSPREAD_SPEC``, ``HYBRIDSPREAD_OUT``, ``HYBRIDSPREAD_GRID_N``,
``HYBRIDSPREAD_TOL``, ``HYBRIDSPREAD_WORKERS`` and ``HYBRIDSPREAD_SEED``.
Precedence: flag, then environment, then the spec's ``[numerics]`` section.

Exit codes: 0 success, 1 computation failed or a verify check failed,
2 request rejected (for example ``wave`` below the minimal speed),
3 invalid spec file or arguments.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coeffs import MutationCompetition, check_structure, is_isotropic, mean_arithmetic, mean_harmonic
from .config import LoadedSpec, SpecError, corpus_path, parse_spec
from .homogexp import epsilon_speed_sweep, strong_coupling_sweep, anisotropy_report
from .ode import (OdeParams, decay_rate_omega, equilibrium, integrate, lambda_A, lyapunov_K,
                  stability_certificate)
from .pde import (SimConfig, WaveError, comparison_experiment, construct_wave, front_runs,
                  hair_trigger_experiment, steady_level, write_snapshot)
from .reporting import dumps, write_csv
from .spectral import eigen_tolerance, k_curve, lambda1_infinity
from .speed import (crossing_structure, homogenized_coefficients, homogenized_speed,
                    speed_report, strong_coupling_reduce)
from .suite import run_suite

ENV_PREFIX = "HYBRIDSPREAD_"
SUBCOMMANDS = ("eig", "speed", "homogenize", "ode", "simulate", "wave", "reduce", "verify")


class Rejected(Exception):
    def __init__(self, reason, detail=""):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail


@dataclass
class RunConfig:
    subcommand: str
    spec: str | None = None
    out: str = "."
    grid_n: int = 128
    tol: float = 1e-12
    workers: int = 1
    seed: int = 0
    options: dict = field(default_factory=dict)


def _env(name, cast, default):
    v = os.environ.get(ENV_PREFIX + name.upper())
    if v is None:
        return default
    try:
        return cast(v)
    except ValueError:
        raise SpecError(f"environment variable {ENV_PREFIX}{name.upper()}={v!r} is not a valid {cast.__name__}")


def _floats(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="spec file (INI); corpus:<name> selects a built-in spec")
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--grid-n", type=int, help="grid points per period (default 128)")
    common.add_argument("--tol", type=float, help="eigenvalue tolerance (default 1e-12)")
    common.add_argument("--workers", type=int, help="worker threads for sweeps (default 1)")
    common.add_argument("--seed", type=int, help="seed for randomized checks (default 0)")

    p = argparse.ArgumentParser(prog="hybridspread", parents=[common],
                                description="Spreading speeds of periodic cooperative reaction-diffusion systems.")
    sub = p.add_subparsers(dest="subcommand", required=True)

    s = sub.add_parser("eig", parents=[common], help="k-curve, principal eigenvalues, Dirichlet tail")
    s.add_argument("--lam-min", type=float, default=-3.0)
    s.add_argument("--lam-max", type=float, default=3.0)
    s.add_argument("--points", type=int, default=41)

    s = sub.add_parser("speed", parents=[common], help="minimal speeds and crossing diagnostics")
    s.add_argument("--c", type=_floats, default=None, help="comma-separated speeds to classify")

    s = sub.add_parser("homogenize", parents=[common], help="averaged coefficients and epsilon sweep")
    s.add_argument("--eps", type=_floats, default=[0.25, 0.125, 0.0625, 0.03125])

    s = sub.add_parser("ode", parents=[common], help="spatially averaged mutation ODE")
    s.add_argument("--u0", type=float, default=0.1)
    s.add_argument("--v0", type=float, default=0.2)
    s.add_argument("--t-end", type=float, default=200.0)
    s.add_argument("--dt", type=float, default=0.01)

    s = sub.add_parser("simulate", parents=[common], help="front speeds, hair trigger, comparison")
    s.add_argument("--experiment", choices=("front", "hair", "comparison", "all"), default="front")
    s.add_argument("--domain", type=_floats, default=None)
    s.add_argument("--n-x", type=int, default=None)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--t-end", type=float, default=None)

    s = sub.add_parser("wave", parents=[common], help="pulsating traveling wave by period-map iteration")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--c", type=float, default=None, help="wave speed")
    g.add_argument("--c-ratio", type=float, default=1.2, help="wave speed as a multiple of c*")
    s.add_argument("--max-iter", type=int, default=500)
    s.add_argument("--wave-tol", type=float, default=1e-6)

    s = sub.add_parser("reduce", parents=[common], help="strong-coupling scalar reduction")
    s.add_argument("--eps", type=_floats, default=[0.2, 0.1, 0.05])

    s = sub.add_parser("verify", parents=[common], help="property suite over the built-in corpus")
    s.add_argument("--only", type=lambda t: [n.strip() for n in t.split(",")], default=None)
    return p


def config_from_args(argv=None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    sc = ns.pop("subcommand")
    base = {k: ns.pop(k) for k in ("spec", "out", "grid_n", "tol", "workers", "seed")}
    cfg = RunConfig(sc)
    casts = {"spec": str, "out": str, "grid_n": int, "tol": float, "workers": int, "seed": int}
    for k, cast in casts.items():
        v = base[k] if base[k] is not None else _env(k, cast, None)
        if v is not None:
            setattr(cfg, k, v)
    cfg.options = ns
    cfg._explicit = {k for k in casts if base[k] is not None or os.environ.get(ENV_PREFIX + k.upper())}
    return cfg


def _validate(cfg: RunConfig):
    if cfg.grid_n < 16:
        raise SpecError("--grid-n must be at least 16")
    if not 0 < cfg.tol < 1:
        raise SpecError("--tol must lie in (0, 1)")
    if cfg.workers < 1:
        raise SpecError("--workers must be at least 1")
    if cfg.subcommand != "verify" and not cfg.spec:
        raise SpecError(f"{cfg.subcommand} needs --spec")


def _load(cfg: RunConfig) -> tuple[LoadedSpec, str, str]:
    _validate(cfg)
    if cfg.spec.startswith("corpus:"):
        name = cfg.spec.split(":", 1)[1]
        p = corpus_path(name)
        if not p.is_file():
            raise SpecError(f"no corpus spec named {name!r}")
        path = Path(str(p))
    else:
        path = Path(cfg.spec)
    loaded = parse_spec(path)
    explicit = getattr(cfg, "_explicit", set())
    for key in ("grid_n", "tol", "workers"):
        if key not in explicit and key in loaded.numerics:
            setattr(cfg, key, type(getattr(cfg, key))(loaded.numerics[key]))
    _validate(cfg)
    return loaded, hashlib.sha256(loaded.text.encode()).hexdigest(), path.name


# --- subcommands -------------------------------------------------------------

def cmd_eig(cfg, loaded, out):
    spec, o = loaded.spec, cfg.options
    kc = k_curve(spec, o["lam_min"], o["lam_max"], o["points"], cfg.grid_n, workers=cfg.workers)
    kc.to_csv(out / "kcurve.csv")
    l1 = lambda1_infinity(spec, cfg.grid_n)
    write_csv(out / "dirichlet_tail.csv", ["R", "lambda1_R"], zip(l1.radii, l1.dirichlet_tail))
    alpha, beta = kc.quadratic_cap()
    return {"lambda1_per": l1.lambda1_per, "lambda1_inf": l1.value, "argmax_lambda": l1.argmax,
            "dirichlet_radii": l1.radii, "dirichlet_values": l1.dirichlet_tail,
            "max_concavity_defect": float(kc.concavity_defects().max()),
            "cap_alpha": alpha, "cap_beta": beta, "max_residual": float(kc.residuals.max()),
            "structure": check_structure(spec.A), "isotropy": is_isotropic(spec) or "none"}


def cmd_speed(cfg, loaded, out):
    spec = loaded.spec
    rep = speed_report(spec, cfg.grid_n)
    res = rep.to_dict()
    write_csv(out / "speed.csv", rep.CSV_HEADER, [rep.csv_row()])
    if rep.valid:
        cs = cfg.options["c"] or [0.9 * rep.c_right, rep.c_right, 1.2 * rep.c_right]
        res["crossings"] = []
        for c in cs:
            cr = crossing_structure(spec, c, cfg.grid_n)
            res["crossings"].append({"c": c, "kind": cr.kind, "roots": cr.roots})
    return res


def cmd_homogenize(cfg, loaded, out):
    spec = loaded.spec
    sH, qH, Abar = homogenized_coefficients(spec)
    res = {"sigma_harmonic": sH, "sigma_arithmetic": [mean_arithmetic(s) for s in spec.sigma],
           "q_effective": qH, "A_mean": Abar}
    c_hom, lam = homogenized_speed(spec, return_lambda=True)
    res.update(c_hom=c_hom, lambda_hom=lam)
    tab = epsilon_speed_sweep(spec, cfg.options["eps"], cfg.grid_n, workers=cfg.workers)
    tab.to_csv(out / "eps_sweep.csv")
    res.update(eps=tab.params, c_eps=tab.values, errors=tab.errors,
               monotone_decline=tab.monotone_decline)
    return res


def _ode_params(spec) -> OdeParams:
    nl = spec.nonlinearity
    if not isinstance(nl, MutationCompetition):
        raise SpecError("ode needs a mutation_competition spec")
    return OdeParams(*(mean_arithmetic(f) for f in (nl.r_u, nl.r_v, nl.kappa_u, nl.kappa_v, nl.mu_u, nl.mu_v)))


def cmd_ode(cfg, loaded, out):
    p = _ode_params(loaded.spec)
    o = cfg.options
    l1, l2, phi = lambda_A(p)
    res = {"params": vars(p), "lambda_A": l1, "lambda_2": l2, "phi_A": phi}
    tr = integrate(p, o["u0"], o["v0"], o["t_end"], o["dt"])
    res["endpoint"] = [tr.u[-1], tr.v[-1]]
    if l1 <= 0:
        res["regime"] = "extinction"
        tr.to_csv(out / "trajectory.csv")
        return res
    eq = equilibrium(p)
    u, v = eq.u, eq.v
    resid = np.abs(p.rhs(u, v)).max()
    res.update(regime="persistence", equilibrium=[u, v], residual=float(resid),
               stability=stability_certificate(eq.jac),
               endpoint_error=float(max(abs(tr.u[-1] - u), abs(tr.v[-1] - v))))
    su, sv = (mean_harmonic(s) for s in loaded.spec.sigma)
    res["omega"] = decay_rate_omega(eq.jac, su, sv)
    K = None
    if max(p.r_u - p.mu_u, p.r_v - p.mu_v) > 0:
        K = lyapunov_K(p, eq)
        res["lyapunov_K"] = K
    tr.to_csv(out / "trajectory.csv", K, eq if K is not None else None)
    return res


def _sim_config(cfg, loaded, defaults, use_spec=True) -> SimConfig:
    o, s = cfg.options, (loaded.simulation if use_spec else {})
    dom = o.get("domain") or s.get("domain") or defaults["domain"]
    return SimConfig(domain=tuple(float(v) for v in dom),
                     N_x=int(o.get("n_x") or s.get("n_x") or defaults["N_x"]),
                     dt=float(o.get("dt") or s.get("dt") or defaults["dt"]),
                     T=float(o.get("t_end") or s.get("t_end") or defaults["T"]))


def cmd_simulate(cfg, loaded, out):
    spec = loaded.spec
    exp = cfg.options["experiment"]
    res = {}
    if exp in ("front", "all"):
        conf = _sim_config(cfg, loaded, {"domain": (0.0, 400.0), "N_x": 2048, "dt": 0.01, "T": 80.0})
        x = conf.x
        r, rl = front_runs(spec, conf)
        write_csv(out / "fronts.csv", ["t", "right", "left"],
                  zip(r.right.times, r.right.positions, rl.left.positions))
        write_snapshot(out / "final_state.csv", x, r.state.u, r.state.t)
        res["front"] = {"speed_right": r.right.fitted_speed, "speed_left": rl.left.fitted_speed,
                        "fit_residual_right": r.right.fit_residual,
                        "fit_residual_left": rl.left.fit_residual, "clamped": r.clamped + rl.clamped,
                        "config": vars(conf)}
        try:
            rep = speed_report(spec, cfg.grid_n)
            res["front"]["c_right_spectral"] = rep.c_right
            res["front"]["c_left_spectral"] = rep.c_left
        except Exception as exc:
            res["front"]["spectral_note"] = str(exc)
    if exp in ("hair", "all"):
        conf = _sim_config(cfg, loaded, {"domain": (-50.0, 50.0), "N_x": 1001, "dt": 0.01, "T": 100.0}, False)
        res["hair_trigger"] = hair_trigger_experiment(spec, 0.5 * sum(conf.domain), 2.0, conf,
                                                      N_eig=cfg.grid_n)
        res["hair_trigger"]["config"] = vars(conf)
    if exp in ("comparison", "all"):
        conf = _sim_config(cfg, loaded, {"domain": (0.0, 100.0), "N_x": 1001, "dt": 0.01, "T": 20.0}, False)
        x = conf.x
        mid = 0.5 * (x[0] + x[-1])
        u0 = np.tile(np.where(np.abs(x - mid) <= 10.0, steady_level(spec), 0.0), (spec.d, 1))
        res["comparison"] = comparison_experiment(spec, None, u0, conf)
        res["comparison"]["config"] = vars(conf)
    return res


def cmd_wave(cfg, loaded, out):
    spec = loaded.spec
    o = cfg.options
    rep_c = None
    if o["c"] is None:
        from .speed import min_speed_right
        rep_c = min_speed_right(spec, cfg.grid_n)[0]
        c = o["c_ratio"] * rep_c
    else:
        c = o["c"]
    try:
        wp = construct_wave(spec, c, tol=o["wave_tol"], max_iter=o["max_iter"], N=cfg.grid_n)
    except WaveError as exc:
        raise Rejected(exc.reason, exc.detail) from None
    wp.to_csv(out / "wave.csv")
    res = {"c": c, "iterations": wp.iterations, "sup_diff": wp.sup_diff, "converged": wp.converged,
           "wave_residual": wp.wave_residual, "tail_slope": wp.tail_slope, "lambda_1": wp.lam,
           "sandwiched": bool(np.all(wp.profile <= wp.upper + 1e-12)
                              and np.all(wp.profile >= np.maximum(wp.lower, 0) - 1e-12))}
    if rep_c is not None:
        res["c_star"] = rep_c
    return res


def cmd_reduce(cfg, loaded, out):
    if loaded.p is None:
        raise SpecError("reduce needs a [strong_coupling] section with p")
    red = strong_coupling_reduce(loaded.base, loaded.p)
    x = red.sigma[0].grid
    write_csv(out / "reduced.csv", ["x", "sigma", "q", "r_plus_q_x"],
              zip(x, red.sigma[0].samples, red.q[0].samples, red.A[0, 0].samples))
    res = {"reduced": anisotropy_report(red, cfg.grid_n)}
    rep = speed_report(loaded.spec, cfg.grid_n)
    res["system_eps"] = {"eps": loaded.eps, "c_right": rep.c_right, "c_left": rep.c_left,
                         "left_faster": bool(rep.c_left > rep.c_right)}
    tab = strong_coupling_sweep(loaded.base, loaded.p, cfg.options["eps"], np.linspace(-2, 2, 21),
                                cfg.grid_n, cfg.workers)
    tab.to_csv(out / "coupling_sweep.csv")
    res["sweep"] = {"eps": tab.params, "sup_error": tab.errors, "monotone_decline": tab.monotone_decline}
    return res


def cmd_verify(cfg, loaded, out):
    names = cfg.options.get("only")
    checks = [c.to_dict() for c in run_suite(names, cfg.grid_n, cfg.seed)]
    write_csv(out / "verify.csv", ["spec", "check", "passed", "value", "tol"],
              ([c["spec"], c["check"], int(c["passed"]), c["value"], c["tol"]] for c in checks))
    failed = [c for c in checks if not c["passed"]]
    return {"n_checks": len(checks), "n_failed": len(failed), "failed": failed, "checks": checks}


HANDLERS = {"eig": cmd_eig, "speed": cmd_speed, "homogenize": cmd_homogenize, "ode": cmd_ode,
            "simulate": cmd_simulate, "wave": cmd_wave, "reduce": cmd_reduce, "verify": cmd_verify}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    record = {"subcommand": cfg.subcommand}
    code = 0
    try:
        if cfg.subcommand == "verify" and not cfg.spec:
            _validate(cfg)
            loaded = None
            record["spec"] = {"name": "corpus"}
        else:
            loaded, digest, name = _load(cfg)
            record["spec"] = {"name": name, "label": loaded.label, "sha256": digest}
        record["settings"] = {"grid_n": cfg.grid_n, "tol": cfg.tol, "workers": cfg.workers,
                              "seed": cfg.seed, **{k: v for k, v in cfg.options.items()}}
        out.mkdir(parents=True, exist_ok=True)
        with eigen_tolerance(cfg.tol):
            record["results"] = HANDLERS[cfg.subcommand](cfg, loaded, out)
        if cfg.subcommand == "verify" and record["results"]["n_failed"]:
            record["status"] = "failed"
            code = 1
        else:
            record["status"] = "ok"
    except Rejected as exc:
        record.update(status="rejected", reason=exc.reason, detail=exc.detail)
        code = 2
    except SpecError as exc:
        record.update(status="error", reason="invalid spec", detail=str(exc))
        code = 3
    except Exception as exc:  # any numerical failure becomes a failure record
        record.update(status="error", reason=type(exc).__name__, detail=str(exc))
        code = 1
    text = dumps(record)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.subcommand}.json").write_text(text + "\n")
    except OSError as exc:
        print(f"cannot write summary: {exc}", file=sys.stderr)
    if code:
        print(dumps({k: record[k] for k in ("subcommand", "status", "reason", "detail") if k in record}),
              file=sys.stderr)
    else:
        print(f"{cfg.subcommand}: ok -> {out / (cfg.subcommand + '.json')}")
    return code


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except SpecError as exc:
        print(dumps({"status": "error", "reason": "invalid arguments", "detail": str(exc)}), file=sys.stderr)
        return 3
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
