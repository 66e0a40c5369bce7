"""Command-line front end.

    critline eval --config F [--breakdown out.csv]
    critline optimize --config F --iters N --restarts M --seed S [--out best.cfg] [--trace t.csv]
    critline verify --suite S [--limit N]
    critline table --preset P

``--config`` also accepts the name of a bundled preset. Exit codes: 0 ok,
2 parse error, 3 validation error, 4 evaluation error, 5 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import nt_oracle as nt
from .configio import ParseError, RunConfig, format_config, load_config
from .functional import ConfigError, DomainError, EvaluationError, eval_kappa_star, eval_total
from .optimize import SearchSpace, optimize_kappa
from .poly_core import Polynomial
from .presets import TABLE_PRESETS, load_preset, preset_names

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_EVALUATION, EXIT_VERIFY = 0, 2, 3, 4, 5
SUITES = ("combinatorics", "vonmangoldt", "arith-factor", "summation", "residue")
TABLE_REFERENCE = {
    # base %, increment %
    "half-half": (36.58, 0.4127),
    "four-sevenths": (40.88, 0.1925),
}


def _resolve(config: str) -> RunConfig:
    path = Path(config)
    if not path.exists() and config in preset_names():
        return load_preset(config)
    return load_config(path)


def _report(run: RunConfig):
    cfg = run.mollifier
    return eval_kappa_star(cfg) if run.bound == "kappa_star" else eval_total(cfg)


def _space_for(run: RunConfig, fix_r: bool = False) -> SearchSpace:
    o = run.optimize
    kw = {}
    if o.p1_degree is not None:
        kw["p1_degree"] = o.p1_degree
    if o.pl_degrees is not None:
        kw["pl_degrees"] = o.pl_degrees
    if o.q_odd_terms is not None:
        kw["q_odd_terms"] = o.q_odd_terms
    r = run.mollifier.R
    kw["r_bounds"] = (r, r) if fix_r else o.r_bounds
    return SearchSpace.like(run.mollifier, mode=run.bound, **kw)


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text)


# -- eval ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    run = _resolve(args.config)
    rep = _report(run)
    print(f"bound = {rep.bound}")
    print(f"formula = {rep.formula.value}")
    print(f"c11 = {rep.c11:.6f}")
    print(f"c12 = {rep.c12:.6f}")
    print(f"c22 = {rep.c22:.6f}")
    print(f"c = {rep.c_total:.6f}")
    print(f"kappa = {rep.kappa:.6f}")
    if args.breakdown:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["block", "l1", "l2", "k", "value"])
        for key, val in rep.term_breakdown.items():
            block = key[0]
            if block == "c11":
                w.writerow([block, 0, 0, "", repr(float(val))])
            elif block == "c12":
                w.writerow([block, 0, key[1], "", repr(float(val))])
            else:
                w.writerow([block, key[1], key[2], key[3], repr(float(val))])
        _write_text(args.breakdown, buf.getvalue())
    return EXIT_OK


# -- optimize -----------------------------------------------------------------------


def cmd_optimize(args) -> int:
    run = _resolve(args.config)
    o = run.optimize
    budget = args.iters if args.iters is not None else o.budget
    restarts = args.restarts if args.restarts is not None else o.restarts
    seed = args.seed if args.seed is not None else o.seed
    workers = args.workers if args.workers is not None else o.workers
    if budget < 1 or restarts < 1:
        raise ConfigError("optimize.budget" if budget < 1 else "optimize.restarts", "must be >= 1")
    space = _space_for(run, fix_r=args.fix_r)
    try:
        res = optimize_kappa(space, budget=budget, restarts=restarts, seed=seed, warm_start=run.mollifier, workers=workers)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("polynomials", str(exc)) from None
    rep = eval_kappa_star(res.best_config) if run.bound == "kappa_star" else eval_total(res.best_config)
    print(f"start kappa = {res.start_kappa:.6f}")
    print(f"restarts = {res.restarts_used}")
    print(f"evaluations = {res.trace[-1].evaluations}")
    print(f"R = {res.best_config.R:.6f}")
    print(f"c = {rep.c_total:.6f}")
    print(f"kappa = {res.best_kappa:.6f}")
    if args.trace:
        _write_text(args.trace, res.trace_csv())
    if args.out:
        settings = type(o)(
            budget=budget, restarts=restarts, seed=seed, r_bounds=space.r_bounds,
            p1_degree=space.p1_degree, pl_degrees=space.pl_degrees,
            q_odd_terms=space.q_odd_terms, workers=workers,
        )
        header = f"# best {run.bound} = {res.best_kappa!r}\n"
        _write_text(args.out, header + format_config(res.best_config, run.bound, settings))
    return EXIT_OK


# -- verify -------------------------------------------------------------------------


def _suite_combinatorics(limit: int) -> list[tuple[str, float, float]]:
    table = nt.build_table(max(limit, 210), 1, 1)
    sf = [h for h in range(1, 211) if table.mu[h] != 0]
    worst = 0.0
    for h1 in sf:
        for h2 in sf:
            for l1 in range(4):
                for l2 in range(4):
                    a, b = nt.verify_combinatorial_identity(table, h1, h2, l1, l2)
                    scale = max(abs(a), abs(b))
                    if scale:
                        worst = max(worst, abs(a - b) / scale)
    return [("shared-prime decomposition, h <= 210, l <= 3 (rel)", worst, 1e-12)]


def _suite_vonmangoldt(limit: int) -> list[tuple[str, float, float]]:
    table = nt.build_table(limit, 3, 1)
    out = [("Lambda_2 = Lambda log + Lambda*Lambda", nt.verify_lambda2_identity(table, limit), 1e-9)]
    e = nt.dirichlet_convolve(table.d_k[1], table.mu.astype(np.int64))
    unit = np.zeros_like(e)
    unit[1] = 1
    out.append(("1 * mu = [n = 1]", float(np.max(np.abs(e - unit))), 0.0))
    logn = np.zeros(limit + 1)
    logn[1:] = np.log(np.arange(1, limit + 1))
    mu = table.mu.astype(float)
    for k in (1, 2, 3):
        direct = nt.dirichlet_convolve(mu, logn**k)
        out.append((f"Lambda_{k} recursion = mu * log^{k}", float(np.max(np.abs(direct - table.lambda_k[k]))), 1e-8))
    return out


def _suite_arith_factor(limit: int) -> list[tuple[str, float, float]]:
    table = nt.build_table(max(limit, 1000), 1, 1)
    worst = 0.0
    for N in (1, 10, 30, 60):
        for z in (0.5, 1.0):
            worst = max(worst, abs(nt.verify_arithmetic_factor(table, z, N) - nt.arithmetic_factor_bruteforce(table.mu, z, N)))
    out = [("sieve sum vs quadruple loop, N <= 60", worst, 1e-12)]
    s10 = abs(nt.verify_arithmetic_factor(table, 0.5, 10) - 1)
    s1000 = abs(nt.verify_arithmetic_factor(table, 0.5, 1000) - 1)
    out.append(("|S(1000)-1| - |S(10)-1| at z = 1/2", s1000 - s10, 0.0))
    out.append(("|S(100)-1| at z = 1", abs(nt.verify_arithmetic_factor(table, 1.0, 100) - 1), 0.01))
    return out


def summation_specs() -> dict[str, nt.ConvSpec]:
    return {
        "Lambda log": nt.ConvSpec("unit", lambda_log_power=1),
        "d_2": nt.ConvSpec("d_k", k=2),
        "d_2 * Lambda": nt.ConvSpec("d_k", k=2, lambda_power=1),
        "1 * Lambda log": nt.ConvSpec("one", lambda_log_power=1),
        "1 * Lambda * Lambda log": nt.ConvSpec("one", lambda_power=1, lambda_log_power=1),
        "1 * Lambda_2": nt.ConvSpec("one", lambda2_power=1),
    }


def summation_rel_err(table: nt.ArithTable, spec: nt.ConvSpec, z: float) -> float:
    x = z * z
    F = Polynomial((0.0, 1.0))
    H = Polynomial((0.0, 1.0))
    return nt.verify_summation_lemma(table, spec, z, x, 0.5 / math.log(x), F, H)[2]


def _suite_summation(limit: int) -> list[tuple[str, float, float]]:
    table = nt.build_table(limit, 2, 2)
    out = []
    for name, spec in summation_specs().items():
        lo = summation_rel_err(table, spec, 1e3)
        hi = summation_rel_err(table, spec, float(limit))
        out.append((f"{name}: rel_err(z={limit}) - rel_err(z=1000)", hi - lo, 0.0))
    return out


def _suite_residue(limit: int) -> list[tuple[str, float, float]]:
    worst = 0.0
    for beta in (-0.5, 0.0, 0.3):
        for j in (1, 2, 3):
            for q in (1.5, math.e, 10.0):
                for m in (0, 1):
                    a, b = nt.verify_residue_formula(beta, m, j, q)
                    worst = max(worst, abs(a - b))
    return [("contour vs closed form, 3x3x3 grid, m in {0,1}", worst, 1e-10)]


_SUITE_FUNCS = {
    "combinatorics": _suite_combinatorics,
    "vonmangoldt": _suite_vonmangoldt,
    "arith-factor": _suite_arith_factor,
    "summation": _suite_summation,
    "residue": _suite_residue,
}
_DEFAULT_LIMIT = {"combinatorics": 210, "vonmangoldt": 10**4, "arith-factor": 1000, "summation": 10**6, "residue": 0}


def run_suite(name: str, limit: int | None = None) -> list[tuple[str, float, float, bool]]:
    lim = limit if limit is not None else _DEFAULT_LIMIT[name]
    rows = _SUITE_FUNCS[name](lim)
    # trend rows pass when strictly negative, tolerance rows when <= tol
    out = []
    for label, value, tol in rows:
        ok = value < 0 if ("rel_err(" in label or "- |S(10)" in label) else value <= tol
        out.append((label, value, tol, ok))
    return out


def cmd_verify(args) -> int:
    names = SUITES if args.suite == "all" else (args.suite,)
    failed = False
    for name in names:
        if args.limit is not None and args.limit < 2 and name != "residue":
            raise ConfigError("limit", "must be >= 2")
        t0 = time.perf_counter()
        rows = run_suite(name, args.limit)
        dt = time.perf_counter() - t0
        print(f"[{name}] {dt:.1f}s")
        for label, value, tol, ok in rows:
            failed |= not ok
            print(f"  {'PASS' if ok else 'FAIL'}  {label}: {value:.3e} (tol {tol:.0e})")
    return EXIT_VERIFY if failed else EXIT_OK


# -- table --------------------------------------------------------------------------


def table_row(preset: str, iters: int = 1500, restarts: int = 1, free_r: bool = False, seed: int = 1) -> dict:
    base_name, full_name = TABLE_PRESETS[preset]
    base_run = load_preset(base_name)
    base = optimize_kappa(
        _space_for(base_run), budget=base_run.optimize.budget, restarts=base_run.optimize.restarts,
        seed=seed, warm_start=base_run.mollifier,
    )
    full_run = load_preset(full_name)
    full = optimize_kappa(
        _space_for(full_run, fix_r=not free_r), budget=iters, restarts=restarts, seed=seed,
        warm_start=full_run.mollifier,
    )
    return {
        "preset": preset,
        "base": 100 * base.best_kappa,
        "base_R": base.best_config.R,
        "full": 100 * full.best_kappa,
        "full_R": full.best_config.R,
        "increment": 100 * (full.best_kappa - base.best_kappa),
    }


def cmd_table(args) -> int:
    presets = list(TABLE_PRESETS) if args.preset == "all" else [args.preset]
    for p in presets:
        row = table_row(p, args.iters, args.restarts, args.free_r, args.seed)
        ref_base, ref_inc = TABLE_REFERENCE[p]
        r_note = "R free" if args.free_r else f"R = {row['full_R']:.6g}"
        print(f"[{p}]")
        print(f"  base = {row['base']:.4f}%  (P_l = 0, R = {row['base_R']:.4f})")
        print(f"  full = {row['full']:.4f}%  ({r_note})")
        print(f"  increment = {row['increment']:.4f}%")
        print(f"  reference = {ref_base:.2f}% + {ref_inc:.4f}%")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="critline", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate c and kappa for a configuration")
    e.add_argument("--config", required=True, help="config file or bundled preset name")
    e.add_argument("--breakdown", help="write per-term contributions as CSV")
    e.set_defaults(func=cmd_eval)

    o = sub.add_parser("optimize", help="maximize kappa over the search space")
    o.add_argument("--config", required=True)
    o.add_argument("--iters", type=int, help="objective evaluations per restart")
    o.add_argument("--restarts", type=int)
    o.add_argument("--seed", type=int)
    o.add_argument("--workers", type=int)
    o.add_argument("--fix-r", action="store_true", help="hold R at the configured value")
    o.add_argument("--out", help="write the best configuration here")
    o.add_argument("--trace", help="write the search trace as CSV")
    o.set_defaults(func=cmd_optimize)

    v = sub.add_parser("verify", help="run the arithmetic identity suites")
    v.add_argument("--suite", required=True, choices=SUITES + ("all",))
    v.add_argument("--limit", type=int)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("table", help="base and increment per theta choice")
    t.add_argument("--preset", required=True, choices=tuple(TABLE_PRESETS) + ("all",))
    t.add_argument("--iters", type=int, default=1500, help="evaluations for the two-piece search")
    t.add_argument("--restarts", type=int, default=1, help="restarts for the two-piece search")
    t.add_argument("--seed", type=int, default=1)
    t.add_argument("--free-r", action="store_true", help="also optimize R in the two-piece search")
    t.set_defaults(func=cmd_table)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, DomainError, nt.PreconditionError, nt.ResourceLimitError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (EvaluationError, ArithmeticError) as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION


if __name__ == "__main__":
    sys.exit(main())
