"""Derivative-free search for mollifier coefficients maximizing kappa.

The search runs in a packed coordinate vector where every point is an
admissible configuration:

* ``P1(x) = x + sum_i a_i x (1-x)^i`` so ``P1(0) = 0`` and ``P1(1) = 1``;
* ``P_ell(x) = sum_{j>=1} b_j x^j`` so ``P_ell(0) = 0``;
* ``Q(x) = q0 + sum_i q_i (1-2x)^(2i-1)`` with ``q0 = 1 - sum q_i`` so
  ``Q(0) = 1`` and ``Q(x) + Q(1-x) = 2 q0``;
* ``R`` is the last coordinate, clamped into ``r_bounds`` on unpacking.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .configio import to_basis_onem2x, to_basis_x1mx
from .functional import (
    ConfigError,
    DomainError,
    EvaluationError,
    MollifierConfig,
    eval_kappa_star,
    eval_total,
)
from .poly_core import Polynomial

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5
SIMPLEX_EDGE = 0.05
SIMPLEX_TOL = 1e-7
PERTURB_SCALE = 0.05
_FAILURES = (ConfigError, DomainError, EvaluationError, FloatingPointError, OverflowError, ValueError)


@dataclass(frozen=True)
class SearchSpace:
    p1_degree: int = 4
    pl_degrees: tuple[int, ...] = (2, 2)
    q_odd_terms: int = 3
    r_bounds: tuple[float, float] = (0.8, 1.6)
    theta1: float = 0.5
    theta2: float = 0.5
    mode: str = "kappa"
    K: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "pl_degrees", tuple(int(d) for d in self.pl_degrees))
        object.__setattr__(self, "r_bounds", (float(self.r_bounds[0]), float(self.r_bounds[1])))
        if self.mode not in ("kappa", "kappa_star"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "kappa_star":
            object.__setattr__(self, "q_odd_terms", 1)
        if self.K is None:
            object.__setattr__(self, "K", len(self.pl_degrees) + 1)
        if not 2 <= self.K <= len(self.pl_degrees) + 1:
            raise ValueError("K must satisfy 2 <= K <= len(pl_degrees) + 1")
        if self.p1_degree < 0 or self.q_odd_terms < 0 or min(self.pl_degrees, default=0) < 0:
            raise ValueError("degrees must be non-negative")
        if not 0 < self.r_bounds[0] <= self.r_bounds[1]:
            raise ValueError("r_bounds must satisfy 0 < lo <= hi")

    @property
    def dim(self) -> int:
        return self.p1_degree + sum(self.pl_degrees) + self.q_odd_terms + 1

    def coordinate_names(self) -> list[str]:
        names = [f"P1.a{i}" for i in range(1, self.p1_degree + 1)]
        for ell, d in enumerate(self.pl_degrees, start=2):
            names += [f"P{ell}.b{j}" for j in range(1, d + 1)]
        names += [f"Q.q{i}" for i in range(1, self.q_odd_terms + 1)]
        return names + ["R"]

    @classmethod
    def like(cls, cfg: MollifierConfig, mode: str = "kappa", **kw) -> "SearchSpace":
        """Space with the shapes of ``cfg`` (degrees read off its polynomials)."""
        a = to_basis_x1mx(cfg.P1) or []
        q = to_basis_onem2x(cfg.Q)
        kw.setdefault("p1_degree", len(a))
        kw.setdefault("pl_degrees", tuple(p.degree if not p.is_zero() else 0 for p in cfg.Pl))
        kw.setdefault("q_odd_terms", max([(p + 1) // 2 for p in q if p % 2] or [0]))
        return cls(theta1=cfg.theta1, theta2=cfg.theta2, mode=mode, **kw)


def unpack(space: SearchSpace, v: Sequence[float]) -> MollifierConfig:
    v = np.asarray(v, dtype=float)
    if v.shape != (space.dim,):
        raise ValueError(f"vector length {v.size} does not match space dimension {space.dim}")
    i = 0
    a = v[i : i + space.p1_degree]
    i += space.p1_degree
    P1 = Polynomial.from_x_one_minus_x(a)
    Pl = []
    for d in space.pl_degrees:
        Pl.append(Polynomial((0.0,) + tuple(v[i : i + d])))
        i += d
    q = v[i : i + space.q_odd_terms]
    i += space.q_odd_terms
    terms = {0: 1.0 - float(np.sum(q))}
    terms.update({2 * k + 1: float(c) for k, c in enumerate(q)})
    Q = Polynomial.from_one_minus_2x(terms)
    R = min(max(float(v[i]), space.r_bounds[0]), space.r_bounds[1])
    return MollifierConfig(
        K=space.K, R=R, theta1=space.theta1, theta2=space.theta2, P1=P1, Pl=tuple(Pl[: space.K - 1]), Q=Q
    )


def pack(space: SearchSpace, cfg: MollifierConfig, tol: float = 1e-9) -> np.ndarray:
    """Inverse of ``unpack``; raises ValueError if ``cfg`` is outside the space."""
    if cfg.K != space.K:
        raise ValueError(f"K = {cfg.K} does not match space K = {space.K}")
    if abs(cfg.theta1 - space.theta1) > 1e-12 or abs(cfg.theta2 - space.theta2) > 1e-12:
        raise ValueError("theta values differ from the space")
    out: list[float] = []
    a = to_basis_x1mx(cfg.P1)
    if a is None:
        raise ValueError("P1 is not of the form x + sum a_i x(1-x)^i")
    if any(abs(c) > tol for c in a[space.p1_degree :]):
        raise ValueError(f"P1 needs more than {space.p1_degree} coefficients")
    out += list(a[: space.p1_degree]) + [0.0] * (space.p1_degree - len(a))
    for ell, d in enumerate(space.pl_degrees, start=2):
        c = list(cfg.P(ell).coeffs) if ell <= cfg.K else [0.0]
        if any(abs(x) > tol for x in c[d + 1 :]):
            raise ValueError(f"P{ell} has degree above {d}")
        c = c[1 : d + 1]
        out += c + [0.0] * (d - len(c))
    q = to_basis_onem2x(cfg.Q)
    for p, c in q.items():
        if p > 0 and (p % 2 == 0 or (p + 1) // 2 > space.q_odd_terms) and abs(c) > tol:
            raise ValueError(f"Q has a (1-2x)^{p} term outside the space")
    out += [q.get(2 * k + 1, 0.0) for k in range(space.q_odd_terms)]
    out.append(cfg.R)
    return np.array(out, dtype=float)


def objective(space: SearchSpace, v: Sequence[float]) -> float:
    """kappa (or kappa*) at ``v``; any failure is -inf."""
    try:
        cfg = unpack(space, v)
        rep = eval_kappa_star(cfg) if space.mode == "kappa_star" else eval_total(cfg)
        k = rep.kappa
    except _FAILURES:
        return -math.inf
    return k if math.isfinite(k) else -math.inf


# -- Nelder-Mead ----------------------------------------------------------------


class _BudgetExhausted(Exception):
    pass


@dataclass
class NMRun:
    x: np.ndarray
    value: float
    trace: list[tuple[int, int, float]]  # (iteration, evaluations, best value)
    evaluations: int


def nelder_mead_max(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    budget: int,
    edge: float = SIMPLEX_EDGE,
    tol: float = SIMPLEX_TOL,
) -> NMRun:
    """Maximize ``f`` with at most ``budget`` evaluations.

    Standard simplex moves (reflection 1, expansion 2, contraction 0.5,
    shrink 0.5) on an axis-aligned start simplex of side ``edge``; stops when
    every vertex is within ``tol`` of the best one.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n = len(x0)
    count = 0
    best = [np.asarray(x0, dtype=float).copy(), -math.inf]

    def g(x):
        # minimize the negated objective; -inf maps to +inf
        nonlocal count
        if count >= budget:
            raise _BudgetExhausted
        count += 1
        val = f(x)
        if val > best[1]:
            best[0], best[1] = x.copy(), val
        return -val

    trace: list[tuple[int, int, float]] = []
    it = 0
    try:
        x0 = np.asarray(x0, dtype=float)
        sim = [x0]
        fs = [g(x0)]
        trace.append((0, count, best[1]))
        for i in range(n):
            x = x0.copy()
            x[i] += edge
            sim.append(x)
            fs.append(g(x))
        sim = np.array(sim)
        fs = np.array(fs)
        while True:
            order = np.argsort(fs, kind="stable")
            sim, fs = sim[order], fs[order]
            if np.max(np.linalg.norm(sim[1:] - sim[0], axis=1)) < tol:
                break
            it += 1
            c = sim[:-1].mean(axis=0)
            xr = c + REFLECT * (c - sim[-1])
            fr = g(xr)
            if fr < fs[0]:
                xe = c + EXPAND * (xr - c)
                fe = g(xe)
                if fe < fr:
                    sim[-1], fs[-1] = xe, fe
                else:
                    sim[-1], fs[-1] = xr, fr
            elif fr < fs[-2]:
                sim[-1], fs[-1] = xr, fr
            else:
                if fr < fs[-1]:
                    xc = c + CONTRACT * (xr - c)
                    fc = g(xc)
                    accept = fc <= fr
                else:
                    xc = c + CONTRACT * (sim[-1] - c)
                    fc = g(xc)
                    accept = fc < fs[-1]
                if accept:
                    sim[-1], fs[-1] = xc, fc
                else:
                    for j in range(1, n + 1):
                        sim[j] = sim[0] + SHRINK * (sim[j] - sim[0])
                        fs[j] = g(sim[j])
            trace.append((it, count, best[1]))
    except _BudgetExhausted:
        if not trace or trace[-1][1] != count:
            trace.append((it, count, best[1]))
    return NMRun(best[0], best[1], trace, count)


# -- restarts -------------------------------------------------------------------


@dataclass(frozen=True)
class TracePoint:
    restart: int
    iteration: int
    evaluations: int
    kappa: float


@dataclass
class OptimResult:
    best_config: MollifierConfig
    best_kappa: float
    trace: list[TracePoint]
    restarts_used: int
    restart_best: list[float] = field(default_factory=list)
    start_kappa: float = -math.inf

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["restart", "iteration", "evaluations", "kappa"])
        for t in self.trace:
            w.writerow([t.restart, t.iteration, t.evaluations, repr(float(t.kappa))])
        return buf.getvalue()


def conrey_start(space: SearchSpace) -> np.ndarray:
    """P1 = x, P_ell = 0, Q = 1, R at the middle of its bounds."""
    v = np.zeros(space.dim)
    v[-1] = 0.5 * (space.r_bounds[0] + space.r_bounds[1])
    return v


def published_start(space: SearchSpace) -> np.ndarray | None:
    """Packed coefficients of a bundled reference set fitting ``space``, if any."""
    from .presets import load_preset

    for name in ("thm1", "thm2", "star1", "star2"):
        run = load_preset(name)
        if run.bound != space.mode:
            continue
        cfg = run.mollifier
        if abs(cfg.theta1 - space.theta1) > 1e-12 or abs(cfg.theta2 - space.theta2) > 1e-12:
            continue
        try:
            return pack(space, cfg)
        except ValueError:
            continue
    return None


def _restart(args) -> NMRun:
    space, x0, budget = args
    return nelder_mead_max(lambda x: objective(space, x), x0, budget)


def start_points(
    space: SearchSpace, restarts: int, seed: int, warm_start: MollifierConfig | None = None
) -> list[np.ndarray]:
    starts: list[np.ndarray] = []
    if warm_start is not None:
        starts.append(pack(space, warm_start))
    else:
        pub = published_start(space)
        if pub is not None:
            starts.append(pub)
    starts.append(conrey_start(space))
    rng = np.random.default_rng(seed)
    base = starts[0]
    while len(starts) < restarts:
        starts.append(base + rng.normal(0.0, PERTURB_SCALE, space.dim))
    return starts[:restarts]


def optimize_kappa(
    space: SearchSpace,
    budget: int = 2000,
    restarts: int = 8,
    seed: int = 0,
    warm_start: MollifierConfig | None = None,
    workers: int = 1,
) -> OptimResult:
    """Nelder-Mead maximization of kappa with restarts.

    ``budget`` is the number of objective evaluations per restart. Restart 0
    starts from ``warm_start`` (or a bundled reference set matching the space),
    the next from ``P1 = x, P_ell = 0, Q = 1``, the rest from seeded
    perturbations of the first. Results are merged by (kappa, restart index),
    so the outcome does not depend on ``workers``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    starts = start_points(space, restarts, seed, warm_start)
    jobs = [(space, x0, budget) for x0 in starts]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_restart, jobs))
    else:
        runs = [_restart(j) for j in jobs]

    trace: list[TracePoint] = []
    best = -math.inf
    offset = 0
    for r, run in enumerate(runs):
        for it, ev, val in run.trace:
            best = max(best, val)
            trace.append(TracePoint(r, it, offset + ev, best))
        offset += run.evaluations
    win = max(range(len(runs)), key=lambda r: (runs[r].value, -r))
    if not math.isfinite(runs[win].value):
        raise EvaluationError("no admissible point found")
    cfg = unpack(space, runs[win].x)
    check = objective(space, runs[win].x)
    if check != runs[win].value:
        raise EvaluationError("best point does not re-evaluate to the same kappa")
    return OptimResult(
        best_config=cfg,
        best_kappa=check,
        trace=trace,
        restarts_used=len(runs),
        restart_best=[run.value for run in runs],
        start_kappa=runs[0].trace[0][2] if runs[0].trace else -math.inf,
    )


def sensitivity_table(space: SearchSpace, cfg: MollifierConfig, h: float = 1e-4) -> list[tuple[str, float]]:
    """Central-difference gradient of kappa in packed coordinates."""
    if not h > 0:
        raise ValueError("h must be positive")
    v = pack(space, cfg)
    out = []
    for i, name in enumerate(space.coordinate_names()):
        e = np.zeros_like(v)
        e[i] = h
        out.append((name, (objective(space, v + e) - objective(space, v - e)) / (2 * h)))
    return out
