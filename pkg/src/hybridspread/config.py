"""INI spec files: parsing, safe expression evaluation, and the built-in corpus.

Grammar (all keys optional unless noted)::

    [system]
    label = scalar KPP
    d = 1                  ; required
    period = 1.0
    form = divergence      ; or nondivergence
    samples = 128          ; points per period for expression coefficients

    [coefficients]
    sigma_1 = 1 + 0.5*sin(2*pi*x)
    q_1 = 0
    a_11 = 1               ; a_ij, omitted entries are 0
    ; any value may instead be  csv:relative/path.csv  (columns x,value)

    [nonlinearity]
    kind = linear          ; linear | logistic | competition | mutation_competition
    kappa_1 = 1            ; logistic / competition
    r_u = ... r_v = ... kappa_u = ... kappa_v = ... mu_u = ... mu_v = ...
                           ; mutation_competition (d = 2, a_ij are derived)

    [strong_coupling]      ; optional: fast exchange with proportion p
    p = 0.5 + 0.3*sin(2*pi*x)
    eps = 0.05

    [numerics]             ; optional defaults for the CLI
    grid_n = 128
    tol = 1e-12

    [simulation]           ; optional
    domain = 0, 400
    n_x = 2048
    dt = 0.01
    t_end = 80

Expressions use ``+ - * / **``, parentheses, numbers, ``x``, ``pi``, ``e`` and
the functions ``sin cos tan exp log sqrt abs tanh step`` (``step(0) = 1``).
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
from importlib import resources
from pathlib import Path

import numpy as np

from .coeffs import (Competition, Linear, MatrixField, PeriodicField, SystemSpec,
                     mutation_spec)


class SpecError(ValueError):
    pass


_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh,
    "step": lambda z: np.where(np.asarray(z) >= 0, 1.0, 0.0),
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _token_at(text, offset):
    if offset is None:
        return text
    i = max(offset - 1, 0)
    tok = text[i:].split()
    return tok[0] if tok else text[i:] or "<end of expression>"


def eval_expression(text: str, x, where: str = "") -> np.ndarray:
    """Evaluate an arithmetic expression in ``x`` without ``eval``."""
    src = text.strip()
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"{where}malformed expression {src!r} near token {_token_at(src, exc.offset)!r}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id == "x":
                return x
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise SpecError(f"{where}unknown name {node.id!r} in {src!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            if node.func.id not in _FUNCS:
                raise SpecError(f"{where}unknown function {node.func.id!r} in {src!r}")
            if len(node.args) != 1:
                raise SpecError(f"{where}function {node.func.id!r} takes one argument")
            return _FUNCS[node.func.id](ev(node.args[0]))
        tok = ast.get_source_segment(src, node) or type(node).__name__
        raise SpecError(f"{where}unsupported token {tok!r} in {src!r}")

    with np.errstate(all="ignore"):
        val = ev(tree)
    val = np.broadcast_to(np.asarray(val, dtype=float), np.shape(x)).copy()
    if not np.all(np.isfinite(val)):
        j = int(np.flatnonzero(~np.isfinite(val))[0])
        raise SpecError(f"{where}expression {src!r} is not finite at x={float(np.ravel(x)[j])!r}")
    return val


class _Source:
    """Parsed INI with key -> line-number lookup for error messages."""

    def __init__(self, text: str, path: str = "<string>"):
        self.path = path
        self.cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            self.cp.read_string(text, source=path)
        except configparser.Error as exc:
            raise SpecError(f"{path}: {exc}") from None
        self.lines = {}
        section = None
        for n, line in enumerate(text.splitlines(), 1):
            s = line.strip()
            if s.startswith("[") and s.endswith("]"):
                section = s[1:-1].strip()
            elif section and ("=" in s or ":" in s) and not s.startswith((";", "#")):
                key = s.split("=", 1)[0].split(":", 1)[0].strip().lower()
                self.lines[(section, key)] = n

    def where(self, section, key) -> str:
        n = self.lines.get((section, key))
        return f"{self.path}:{n}: " if n else f"{self.path}: [{section}] {key}: "

    def get(self, section, key, default=None):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key)
        return default


def _field(src: _Source, section, key, period, n, base_dir, positive=False, default=None):
    raw = src.get(section, key, default)
    if raw is None:
        return None
    where = src.where(section, key)
    raw = str(raw).strip()
    if raw.startswith("csv:"):
        path = Path(raw[4:].strip())
        if not path.is_absolute():
            path = Path(base_dir) / path
        try:
            f = PeriodicField.from_csv(path, None, key)
        except (OSError, ValueError) as exc:
            raise SpecError(f"{where}{exc}") from None
        if abs(f.period - period) > 1e-9 * period:
            raise SpecError(f"{where}CSV period {f.period} differs from system period {period}")
        f = PeriodicField(period, f.samples, key)
    else:
        x = np.arange(n) * (period / n)
        f = PeriodicField(period, eval_expression(raw, x, where), key)
    if positive and f.samples.min() <= 0:
        j = int(np.flatnonzero(f.samples <= 0)[0])
        raise SpecError(f"{where}{key} must be positive; value {float(f.samples[j])!r} at x={float(f.grid[j])!r}")
    return f


class LoadedSpec:
    """A parsed spec file: the system, its metadata and CLI defaults."""

    def __init__(self, spec, base, p, eps, numerics, simulation, text, path):
        self.spec = spec
        self.base = base
        self.p = p
        self.eps = eps
        self.numerics = numerics
        self.simulation = simulation
        self.text = text
        self.path = path

    @property
    def label(self):
        return self.spec.label


def parse_spec_text(text: str, path: str = "<string>", base_dir=".") -> LoadedSpec:
    src = _Source(text, path)
    if not src.cp.has_section("system"):
        raise SpecError(f"{path}: missing [system] section")
    try:
        d = int(src.get("system", "d", "1"))
        period = float(src.get("system", "period", "1.0"))
        n = int(src.get("system", "samples", "128"))
    except ValueError as exc:
        raise SpecError(f"{path}: [system] {exc}") from None
    form = src.get("system", "form", "divergence").strip()
    label = src.get("system", "label", Path(path).stem).strip()
    if d < 1:
        raise SpecError(f"{src.where('system', 'd')}d must be at least 1")
    if form not in ("divergence", "nondivergence"):
        raise SpecError(f"{src.where('system', 'form')}unknown form {form!r}")
    kind = src.get("nonlinearity", "kind", "linear").strip()
    F = lambda sec, key, **kw: _field(src, sec, key, period, n, base_dir, **kw)  # noqa: E731
    C = "coefficients"
    sig = tuple(F(C, f"sigma_{i + 1}", positive=True, default="1") for i in range(d))
    q = tuple(F(C, f"q_{i + 1}", default="0") for i in range(d))
    if kind == "mutation_competition":
        if d != 2:
            raise SpecError(f"{src.where('nonlinearity', 'kind')}mutation_competition requires d = 2")
        given = [k for k in src.cp.options(C) if k.startswith("a_")] if src.cp.has_section(C) else []
        if given:
            raise SpecError(f"{src.where(C, given[0])}a_ij are derived for mutation_competition; remove {given[0]}")
        N = "nonlinearity"
        kw = {k: F(N, k, positive=k.startswith(("kappa", "mu")))
              for k in ("r_u", "r_v", "kappa_u", "kappa_v", "mu_u", "mu_v")}
        missing = [k for k, v in kw.items() if v is None]
        if missing:
            raise SpecError(f"{path}: [nonlinearity] missing {', '.join(missing)}")
        spec = mutation_spec(sig[0], sig[1], q_u=q[0], q_v=q[1], form=form, period=period, n=n,
                             label=label, **kw)
    else:
        A = MatrixField(tuple(tuple(F(C, f"a_{i + 1}{j + 1}", default="0") for j in range(d))
                              for i in range(d)))
        if kind == "linear":
            nl = Linear()
        elif kind in ("logistic", "competition"):
            kap = tuple(F("nonlinearity", f"kappa_{i + 1}", positive=True, default="1") for i in range(d))
            nl = Competition(kap)
        else:
            raise SpecError(f"{src.where('nonlinearity', 'kind')}unknown nonlinearity kind {kind!r}")
        spec = SystemSpec(sig, q, A, form, nl, label)
    base, p, eps = spec, None, None
    if src.cp.has_section("strong_coupling"):
        if d != 2:
            raise SpecError(f"{path}: [strong_coupling] needs d = 2")
        p = F("strong_coupling", "p")
        if p is None:
            raise SpecError(f"{path}: [strong_coupling] needs p")
        if p.samples.min() <= 0 or p.samples.max() >= 1:
            raise SpecError(f"{src.where('strong_coupling', 'p')}p must lie in (0, 1)")
        eps = float(src.get("strong_coupling", "eps", "0.05"))
        from .homogexp import strong_coupling_system
        spec = strong_coupling_system(base, p, eps)
        spec = spec.replace(label=label)
    numerics = {k: _num(v) for k, v in src.cp.items("numerics")} if src.cp.has_section("numerics") else {}
    simulation = {k: _num(v) for k, v in src.cp.items("simulation")} if src.cp.has_section("simulation") else {}
    return LoadedSpec(spec, base, p, eps, numerics, simulation, text, path)


def _num(v: str):
    v = v.strip()
    if "," in v:
        return tuple(float(t) for t in v.split(","))
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def parse_spec(path) -> LoadedSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from None
    return parse_spec_text(text, str(path), path.parent)


def corpus_names() -> list:
    root = resources.files("hybridspread") / "corpus"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def corpus_path(name: str):
    return resources.files("hybridspread") / "corpus" / f"{name}.ini"


def load_corpus(name: str) -> LoadedSpec:
    p = corpus_path(name)
    return parse_spec_text(p.read_text(), f"corpus/{name}.ini", Path(str(p)).parent)
