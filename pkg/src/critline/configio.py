"""Reading and writing run configurations.

INI-style text with three sections::

    [params]
    K = 3
    R = 1.3
    theta1 = 1/2
    theta2 = 1/2

    [polynomials]
    P1 = x1mx: 0.225339, -1.01137, 0.174004, -0.100235
    P2 = monomial: 0, 1.05138, 0.284201
    Q  = onem2x: 0:0.481936, 1:0.632349, 3:-0.144698, 5:0.0304136

    [optimize]
    budget = 2000
    restarts = 8

Polynomial bases:

``monomial``  ``c0, c1, ...`` meaning ``sum c_i x^i``
``x1mx``      ``a1, a2, ...`` meaning ``x + sum a_i x (1-x)^i``
``onem2x``    ``p:c, ...`` meaning ``sum c (1-2x)^p``

Numbers may be written as fractions (``4/7``).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .functional import C12Variant, ConfigError, Formula, MollifierConfig
from .poly_core import Polynomial

BASIS_ALIASES = {
    "monomial": "monomial",
    "mono": "monomial",
    "x1mx": "x1mx",
    "x(1-x)^i": "x1mx",
    "onem2x": "onem2x",
    "(1-2x)^i": "onem2x",
}


class ParseError(ValueError):
    def __init__(self, key: str, problem: str):
        super().__init__(f"{key}: {problem}")
        self.key = key


@dataclass(frozen=True)
class OptimizeSettings:
    budget: int = 2000
    restarts: int = 8
    seed: int = 0
    r_bounds: tuple[float, float] = (0.8, 1.6)
    p1_degree: int | None = None
    pl_degrees: tuple[int, ...] | None = None
    q_odd_terms: int | None = None
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    mollifier: MollifierConfig
    bound: str = "kappa"
    optimize: OptimizeSettings = field(default_factory=OptimizeSettings)


def parse_number(text: str, key: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ParseError(key, f"not a number: {text!r}") from None


def parse_int(text: str, key: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ParseError(key, f"not an integer: {text!r}") from None


def parse_polynomial(text: str, key: str) -> Polynomial:
    if ":" not in text:
        raise ParseError(key, "expected '<basis>: <coefficients>'")
    tag, body = text.split(":", 1)
    basis = BASIS_ALIASES.get(tag.strip().lower())
    if basis is None:
        raise ParseError(key, f"unknown basis {tag.strip()!r}")
    items = [s for s in body.replace("\n", " ").split(",") if s.strip()]
    if not items:
        raise ParseError(key, "no coefficients")
    try:
        if basis == "monomial":
            return Polynomial(tuple(parse_number(s, key) for s in items))
        if basis == "x1mx":
            return Polynomial.from_x_one_minus_x([parse_number(s, key) for s in items])
        terms: dict[int, float] = {}
        for s in items:
            if ":" not in s:
                raise ParseError(key, f"expected 'power:coefficient', got {s.strip()!r}")
            p, c = s.split(":", 1)
            power = parse_int(p, key)
            if power < 0:
                raise ParseError(key, "negative power")
            terms[power] = terms.get(power, 0.0) + parse_number(c, key)
        return Polynomial.from_one_minus_2x(terms)
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(key, str(exc)) from None


def _get(sec, name: str, section: str):
    if name not in sec:
        raise ParseError(f"{section}.{name}", "missing")
    return sec[name]


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError("file", str(exc).splitlines()[0]) from None
    for s in ("params", "polynomials"):
        if not cp.has_section(s):
            raise ParseError(s, "missing section")
    params, polys = cp["params"], cp["polynomials"]

    K = parse_int(_get(params, "K", "params"), "params.K")
    R = parse_number(_get(params, "R", "params"), "params.R")
    theta1 = parse_number(_get(params, "theta1", "params"), "params.theta1")
    theta2 = parse_number(params.get("theta2", str(theta1)), "params.theta2")
    formula = params.get("formula", Formula.MAIN_TERM.value).strip()
    variant = params.get("c12_variant", C12Variant.EXP_ELL_MINUS_1.value).strip()
    bound = params.get("bound", "kappa").strip()
    if formula not in {f.value for f in Formula}:
        raise ParseError("params.formula", f"unknown formula {formula!r}")
    if variant not in {v.value for v in C12Variant}:
        raise ParseError("params.c12_variant", f"unknown variant {variant!r}")
    if bound not in ("kappa", "kappa_star"):
        raise ParseError("params.bound", f"unknown bound {bound!r}")
    if K < 2:
        raise ConfigError("params.K", "must be an integer >= 2")

    P1 = parse_polynomial(_get(polys, "P1", "polynomials"), "polynomials.P1")
    Q = parse_polynomial(_get(polys, "Q", "polynomials"), "polynomials.Q")
    Pl = []
    for ell in range(2, K + 1):
        key = f"P{ell}"
        Pl.append(parse_polynomial(polys[key], f"polynomials.{key}") if key in polys else Polynomial.zero())
    extra = sorted(k for k in polys if k not in {"P1", "Q"} | {f"P{l}" for l in range(2, K + 1)})
    if extra:
        raise ParseError(f"polynomials.{extra[0]}", f"unexpected entry for K = {K}")

    try:
        cfg = MollifierConfig(
            K=K, R=R, theta1=theta1, theta2=theta2, P1=P1, Pl=tuple(Pl), Q=Q,
            c12_variant=variant, formula=formula,
        )
    except ConfigError as exc:
        section = "polynomials" if exc.key[0] in "PQ" and exc.key != "Pl" else "params"
        raise ConfigError(f"{section}.{exc.key}", exc.constraint) from None

    opt = OptimizeSettings()
    if cp.has_section("optimize"):
        o = cp["optimize"]
        kw = {}
        for name in ("budget", "restarts", "seed", "p1_degree", "q_odd_terms", "workers"):
            if name in o:
                kw[name] = parse_int(o[name], f"optimize.{name}")
        if "pl_degrees" in o:
            kw["pl_degrees"] = tuple(
                parse_int(s, "optimize.pl_degrees") for s in o["pl_degrees"].split(",") if s.strip()
            )
        lo = parse_number(o.get("r_min", "0.8"), "optimize.r_min")
        hi = parse_number(o.get("r_max", "1.6"), "optimize.r_max")
        kw["r_bounds"] = (lo, hi)
        opt = OptimizeSettings(**kw)
        if opt.budget < 1:
            raise ConfigError("optimize.budget", "must be >= 1")
        if opt.restarts < 1:
            raise ConfigError("optimize.restarts", "must be >= 1")
        if not 0 < lo <= hi:
            raise ConfigError("optimize.r_min", "need 0 < r_min <= r_max")
        if opt.pl_degrees is not None and len(opt.pl_degrees) != K - 1:
            raise ConfigError("optimize.pl_degrees", f"need {K - 1} entries for K = {K}")
    return RunConfig(mollifier=cfg, bound=bound, optimize=opt)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError("file", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def _fmt(x: float) -> str:
    return repr(float(x))


def to_basis_x1mx(P1: Polynomial) -> list[float] | None:
    """Coefficients a_i with ``P1 = x + sum a_i x (1-x)^i``, or None if P1(1) != 1."""
    c = list(P1.coeffs) + [0.0, 0.0]
    # (P1 - x) / x, then substitute x = 1 - t
    g = c[1:]
    g[0] -= 1.0
    if abs(c[0]) > 1e-12:
        return None
    h = Polynomial(tuple(g)).compose_affine(1.0, -1.0).coeffs
    if abs(h[0]) > 1e-9:
        return None
    out = list(h[1:])
    return out or [0.0]


def to_basis_onem2x(Q: Polynomial) -> dict[int, float]:
    h = Q.compose_affine(0.5, -0.5).coeffs
    return {p: c for p, c in enumerate(h) if c != 0.0 or p == 0}


def format_config(cfg: MollifierConfig, bound: str = "kappa", optimize: OptimizeSettings | None = None) -> str:
    lines = [
        "[params]",
        f"K = {cfg.K}",
        f"R = {_fmt(cfg.R)}",
        f"theta1 = {_fmt(cfg.theta1)}",
        f"theta2 = {_fmt(cfg.theta2)}",
        f"formula = {cfg.formula.value}",
        f"c12_variant = {cfg.c12_variant.value}",
        f"bound = {bound}",
        "",
        "[polynomials]",
    ]
    a = to_basis_x1mx(cfg.P1)
    if a is None:
        lines.append("P1 = monomial: " + ", ".join(_fmt(c) for c in cfg.P1.coeffs))
    else:
        lines.append("P1 = x1mx: " + ", ".join(_fmt(c) for c in a))
    for ell in range(2, cfg.K + 1):
        lines.append(f"P{ell} = monomial: " + ", ".join(_fmt(c) for c in cfg.P(ell).coeffs))
    q = to_basis_onem2x(cfg.Q)
    lines.append("Q = onem2x: " + ", ".join(f"{p}:{_fmt(c)}" for p, c in q.items()))
    if optimize is not None:
        lines += ["", "[optimize]"]
        lines.append(f"budget = {optimize.budget}")
        lines.append(f"restarts = {optimize.restarts}")
        lines.append(f"seed = {optimize.seed}")
        lines.append(f"r_min = {_fmt(optimize.r_bounds[0])}")
        lines.append(f"r_max = {_fmt(optimize.r_bounds[1])}")
        if optimize.p1_degree is not None:
            lines.append(f"p1_degree = {optimize.p1_degree}")
        if optimize.pl_degrees is not None:
            lines.append("pl_degrees = " + ", ".join(str(d) for d in optimize.pl_degrees))
        if optimize.q_odd_terms is not None:
            lines.append(f"q_odd_terms = {optimize.q_odd_terms}")
        lines.append(f"workers = {optimize.workers}")
    return "\n".join(lines) + "\n"
