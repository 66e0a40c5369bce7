"""The mollified second-moment constant c and the zero-proportion bound.

``c = c11 + 2 c12 + c22`` where c11 is the Mobius-piece self term, c12 the
cross term and c22 the prime-log self term. The bound is
``kappa = 1 - log(c) / R``.

Two evaluators are provided for c12 and c22:

``Formula.MAIN_TERM`` (default)
    Residue main term assembled pair by pair in :mod:`critline.mainterm`.
    Reproduces the published optima.
``Formula.PRINTED``
    Literal transcription of the closed forms usually quoted for this
    two-piece mollifier, evaluated exactly with jets. Kept for comparison;
    it does not reproduce the published optima (see README).

c11 is the same under both: the jet closed form below equals the Mobius
self-pair of the main term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import mainterm
from .poly_core import (
    Jet2,
    JetPoly,
    Polynomial,
    integrate_exp_poly,
    integrate_unit_square_jet,
    poly_shift_jet,
)

BOUNDARY_TOL = 1e-6
THETA1_MAX = 4.0 / 7.0
THETA2_MAX = 0.5
_EPS = 1e-12


class Formula(str, Enum):
    MAIN_TERM = "main_term"
    PRINTED = "printed"


class C12Variant(str, Enum):
    EXP_ELL = "exp_ell"
    EXP_ELL_MINUS_1 = "exp_ell_minus_1"


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending field."""

    def __init__(self, key: str, constraint: str):
        super().__init__(f"{key}: {constraint}")
        self.key = key
        self.constraint = constraint


class DomainError(ValueError):
    pass


class EvaluationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class MollifierConfig:
    """Parameters of the two-piece mollifier.

    ``Pl[i]`` is the polynomial of the prime-log piece with ``ell = i + 2``.
    """

    K: int
    R: float
    theta1: float
    theta2: float
    P1: Polynomial
    Pl: tuple[Polynomial, ...]
    Q: Polynomial
    c12_variant: C12Variant = C12Variant.EXP_ELL_MINUS_1
    formula: Formula = Formula.MAIN_TERM

    def __post_init__(self):
        object.__setattr__(self, "Pl", tuple(self.Pl))
        object.__setattr__(self, "c12_variant", C12Variant(self.c12_variant))
        object.__setattr__(self, "formula", Formula(self.formula))
        self._validate()

    def _validate(self) -> None:
        if not isinstance(self.K, (int, np.integer)) or self.K < 2:
            raise ConfigError("K", "must be an integer >= 2")
        if len(self.Pl) != self.K - 1:
            raise ConfigError("Pl", f"expected {self.K - 1} polynomials for ell = 2..{self.K}")
        if not (math.isfinite(self.R) and self.R > 0):
            raise ConfigError("R", "must be a positive finite real")
        if not (0.0 < self.theta1 <= THETA1_MAX + _EPS):
            raise ConfigError("theta1", "must lie in (0, 4/7]")
        if not (0.0 < self.theta2 <= THETA2_MAX + _EPS):
            raise ConfigError("theta2", "must lie in (0, 1/2]")
        if self.theta1 + self.theta2 > 1.0 + _EPS:
            raise ConfigError("theta1+theta2", "must be <= 1")
        if abs(self.P1(0.0)) > BOUNDARY_TOL:
            raise ConfigError("P1", "P1(0) must be 0")
        if abs(self.P1(1.0) - 1.0) > BOUNDARY_TOL:
            raise ConfigError("P1", "P1(1) must be 1")
        for i, p in enumerate(self.Pl):
            if abs(p(0.0)) > BOUNDARY_TOL:
                raise ConfigError(f"P{i + 2}", f"P{i + 2}(0) must be 0")
        if abs(self.Q(0.0) - 1.0) > BOUNDARY_TOL:
            raise ConfigError("Q", "Q(0) must be 1")
        grid = np.linspace(0.0, 1.0, 11)
        sym = self.Q(grid) + self.Q(1.0 - grid) - (self.Q(0.0) + self.Q(1.0))
        if np.max(np.abs(sym)) > BOUNDARY_TOL:
            raise ConfigError("Q", "Q(x) + Q(1-x) must be constant")

    def P(self, ell: int) -> Polynomial:
        return self.Pl[ell - 2]

    def pieces(self) -> list[mainterm.Piece]:
        out = [mainterm.Piece(0, self.P1, self.theta1)]
        for ell in range(2, self.K + 1):
            out.append(mainterm.Piece(ell, self.P(ell), self.theta2))
        return out

    def replace(self, **kw) -> "MollifierConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class FunctionalReport:
    c11: float
    c12: float
    c22: float
    c_total: float
    kappa: float
    term_breakdown: dict = field(default_factory=dict)
    bound: str = "kappa"
    formula: Formula = Formula.MAIN_TERM


# -- c11 ----------------------------------------------------------------------


def eval_c11(P1: Polynomial, Q: Polynomial, R: float, theta1: float) -> float:
    """Mobius self term.

    ``1 + (1/theta1) d^2/dxdy [exp(R theta1 (x+y)) int int exp(2Rv)
    P1(x+u) P1(y+u) Q(v + theta1 x) Q(v + theta1 y) du dv]`` at x = y = 0.
    """
    if theta1 <= 0:
        raise DomainError("theta1 must be positive")
    u_part = poly_shift_jet(P1, 0.0, 1.0, "x") * poly_shift_jet(P1, 0.0, 1.0, "y")
    v_part = poly_shift_jet(Q, 0.0, 1.0, "x", theta1) * poly_shift_jet(Q, 0.0, 1.0, "y", theta1)
    jet = Jet2.exp_linear(R * theta1, R * theta1) * integrate_unit_square_jet(u_part, v_part, 2 * R)
    return 1.0 + jet.dxdy / theta1


# -- printed closed forms -----------------------------------------------------


def _one_minus_u(power: int) -> Polynomial:
    return Polynomial((1.0, -1.0)) ** power


def _c12_printed_terms(cfg: MollifierConfig) -> dict[int, tuple[float, float, float]]:
    t1, t2, R = cfg.theta1, cfg.theta2, cfg.R
    r = t2 / t1
    shift_e = 0 if cfg.c12_variant is C12Variant.EXP_ELL else -1
    dP1_shift = cfg.P1.deriv().compose_affine(1.0 - r, r)
    q_part = poly_shift_jet(cfg.Q, 0.0, 1.0, "y", t2) * poly_shift_jet(cfg.Q, 0.0, 1.0, "x", t1)
    out = {}
    for ell in range(2, cfg.K + 1):
        P = cfg.P(ell)
        sign = -1.0 if ell % 2 else 1.0
        a = sign / math.factorial(ell - 1) * integrate_exp_poly(_one_minus_u(ell - 1) * cfg.P1 * P, 0.0)
        b = 0.0
        if t1 != t2:
            b = (
                -(t1 - t2) / t1 * sign / math.factorial(ell)
                * integrate_exp_poly(_one_minus_u(ell + shift_e) * dP1_shift * P, 0.0)
            )
        u_part = (
            JetPoly.from_poly(_one_minus_u(ell))
            * poly_shift_jet(cfg.P1, 1.0 - r, r, "x")
            * poly_shift_jet(P, 0.0, 1.0, "y")
        )
        jet = Jet2.exp_linear(R * t1, R * t2) * integrate_unit_square_jet(u_part, q_part, 2 * R)
        c = sign / math.factorial(ell) / t1 * jet.dxdy
        out[ell] = (a, b, c)
    return out


def printed_c22_weight(l1: int, l2: int, k: int) -> int:
    """``(-1)^(l1+l2-2k) C(l1,k) (l2)_k 2^(l1+l2-2k)`` with the falling factorial."""
    sign = -1 if (l1 + l2) % 2 else 1
    return sign * math.comb(l1, k) * math.perm(l2, k) * 2 ** (l1 + l2 - 2 * k)


def _c22_printed_terms(cfg: MollifierConfig) -> dict[tuple[int, int, int], float]:
    t2, R = cfg.theta2, cfg.R
    q_part = poly_shift_jet(cfg.Q, 0.0, 1.0, "x", t2) * poly_shift_jet(cfg.Q, 0.0, 1.0, "y", t2)
    out = {}
    for l1 in range(2, cfg.K + 1):
        # the integrals are symmetric under swapping the two pieces
        for l2 in range(l1, cfg.K + 1):
            A, B = cfg.P(l1), cfg.P(l2)
            n = l1 + l2
            a = integrate_exp_poly(_one_minus_u(n - 1) * A * B, 0.0) / math.factorial(n - 1)
            u_part = (
                JetPoly.from_poly(_one_minus_u(n))
                * poly_shift_jet(A, 0.0, 1.0, "x")
                * poly_shift_jet(B, 0.0, 1.0, "y")
            )
            jet = Jet2.exp_linear(R * t2, R * t2) * integrate_unit_square_jet(u_part, q_part, 2 * R)
            b = jet.dxdy / t2 / math.factorial(n)
            for k in range(min(l1, l2) + 1):
                out[(l1, l2, k)] = printed_c22_weight(l1, l2, k) * (a + b)
                out[(l2, l1, k)] = out[(l1, l2, k)]
    return dict(sorted(out.items()))


# -- main term ----------------------------------------------------------------


def _c12_main_terms(cfg: MollifierConfig) -> dict[int, float]:
    A = mainterm.Piece(0, cfg.P1, cfg.theta1)
    out = {}
    for ell in range(2, cfg.K + 1):
        P = cfg.P(ell)
        if P.is_zero():
            out[ell] = 0.0
            continue
        out[ell] = mainterm.pair_value(A, mainterm.Piece(ell, P, cfg.theta2), cfg.Q, cfg.R)
    return out


def _c22_main_terms(cfg: MollifierConfig) -> dict[tuple[int, int, int], float]:
    # the (l1, l2) and (l2, l1) pairs share theta2 and are equal, so each
    # unordered pair is integrated once
    out = {}
    for l1 in range(2, cfg.K + 1):
        for l2 in range(l1, cfg.K + 1):
            A, B = cfg.P(l1), cfg.P(l2)
            if A.is_zero() or B.is_zero():
                by_k = {k: 0.0 for k in range(min(l1, l2) + 1)}
            else:
                by_k = mainterm.pair_value_by_k(
                    mainterm.Piece(l1, A, cfg.theta2), mainterm.Piece(l2, B, cfg.theta2), cfg.Q, cfg.R
                )
            for k, v in by_k.items():
                out[(l1, l2, k)] = v
                out[(l2, l1, k)] = v
    return out


# -- public evaluators ----------------------------------------------------------


def _check_theta_order(cfg: MollifierConfig) -> None:
    if cfg.theta2 > cfg.theta1 + _EPS:
        raise DomainError("cross term requires theta1 >= theta2")


def _c12_breakdown(cfg: MollifierConfig) -> dict[int, float]:
    _check_theta_order(cfg)
    if cfg.formula is Formula.PRINTED:
        return {ell: sum(t) for ell, t in _c12_printed_terms(cfg).items()}
    return _c12_main_terms(cfg)


def _c22_breakdown(cfg: MollifierConfig) -> dict[tuple[int, int, int], float]:
    if cfg.formula is Formula.PRINTED:
        return _c22_printed_terms(cfg)
    return _c22_main_terms(cfg)


def eval_c12(cfg: MollifierConfig) -> float:
    return float(sum(_c12_breakdown(cfg).values()))


def eval_c22(cfg: MollifierConfig) -> float:
    return float(sum(_c22_breakdown(cfg).values()))


def kappa_from_c(c_total: float, R: float) -> float:
    if not c_total > 0:
        raise EvaluationError(f"c = {c_total!r} is not positive")
    return 1.0 - math.log(c_total) / R


def eval_total(cfg: MollifierConfig, bound: str = "kappa") -> FunctionalReport:
    c11 = eval_c11(cfg.P1, cfg.Q, cfg.R, cfg.theta1)
    b12 = _c12_breakdown(cfg)
    b22 = _c22_breakdown(cfg)
    c12 = float(sum(b12.values()))
    c22 = float(sum(b22.values()))
    c = c11 + 2.0 * c12 + c22
    if not math.isfinite(c):
        raise EvaluationError("c is not finite")
    breakdown: dict = {("c11",): c11}
    breakdown.update({("c12", ell): v for ell, v in b12.items()})
    breakdown.update({("c22",) + key: v for key, v in b22.items()})
    return FunctionalReport(
        c11=c11,
        c12=c12,
        c22=c22,
        c_total=c,
        kappa=kappa_from_c(c, cfg.R),
        term_breakdown=breakdown,
        bound=bound,
        formula=cfg.formula,
    )


def q_is_linear(Q: Polynomial, tol: float = 1e-12) -> bool:
    return all(abs(c) <= tol for c in Q.coeffs[2:])


def eval_kappa_star(cfg: MollifierConfig) -> FunctionalReport:
    """Same bound with Q restricted to be linear (simple zeros)."""
    if not q_is_linear(cfg.Q):
        raise DomainError("the simple-zero bound needs Q of degree <= 1")
    return eval_total(cfg, bound="kappa_star")


# -- shifted constants ------------------------------------------------------------


@dataclass(frozen=True)
class ShiftedConstants:
    c11: float
    c12: float
    c22: float


def _shifted_printed(cfg: MollifierConfig, a: float, b: float) -> ShiftedConstants:
    # a = alpha log T, b = beta log T; y_i^(-beta x) = exp(-theta_i b x)
    t1, t2 = cfg.theta1, cfg.theta2
    rate = -(a + b)
    one = JetPoly.from_poly(Polynomial.constant(1.0))
    u11 = poly_shift_jet(cfg.P1, 0.0, 1.0, "x") * poly_shift_jet(cfg.P1, 0.0, 1.0, "y")
    j11 = Jet2.exp_linear(-t1 * b, -t1 * a) * integrate_unit_square_jet(u11, one, rate)
    c11 = 1.0 + j11.dxdy / t1

    r = t2 / t1
    shift_e = 0 if cfg.c12_variant is C12Variant.EXP_ELL else -1
    dP1_shift = cfg.P1.deriv().compose_affine(1.0 - r, r)
    c12 = 0.0
    for ell in range(2, cfg.K + 1):
        P = cfg.P(ell)
        sign = -1.0 if ell % 2 else 1.0
        c12 += sign / math.factorial(ell - 1) * integrate_exp_poly(_one_minus_u(ell - 1) * cfg.P1 * P, 0.0)
        if t1 != t2:
            c12 += (
                -(t1 - t2) / t1 * sign / math.factorial(ell)
                * integrate_exp_poly(_one_minus_u(ell + shift_e) * dP1_shift * P, 0.0)
            )
        u_part = (
            JetPoly.from_poly(_one_minus_u(ell))
            * poly_shift_jet(cfg.P1, 1.0 - r, r, "x")
            * poly_shift_jet(P, 0.0, 1.0, "y")
        )
        jet = Jet2.exp_linear(-t1 * b, -t2 * a) * integrate_unit_square_jet(u_part, one, rate)
        c12 += sign / math.factorial(ell) / t1 * jet.dxdy

    c22 = 0.0
    for l1 in range(2, cfg.K + 1):
        for l2 in range(2, cfg.K + 1):
            A, B = cfg.P(l1), cfg.P(l2)
            n = l1 + l2
            w = sum(printed_c22_weight(l1, l2, k) for k in range(min(l1, l2) + 1))
            first = integrate_exp_poly(_one_minus_u(n - 1) * A * B, 0.0) / math.factorial(n - 1)
            u_part = (
                JetPoly.from_poly(_one_minus_u(n))
                * poly_shift_jet(A, 0.0, 1.0, "x")
                * poly_shift_jet(B, 0.0, 1.0, "y")
            )
            jet = Jet2.exp_linear(-t2 * b, -t2 * a) * integrate_unit_square_jet(u_part, one, rate)
            c22 += w * (first + jet.dxdy / t2 / math.factorial(n))
    return ShiftedConstants(c11, c12, c22)


def shifted_main_term(cfg: MollifierConfig, a: complex, b: complex) -> tuple[complex, complex, complex]:
    """(c11, c12, c22) of the main term at shifts ``(a, b)`` in units of 1/log T."""
    pieces = cfg.pieces()
    c11 = mainterm.pair_shifted(pieces[0], pieces[0], a, b)
    c12 = sum(mainterm.pair_shifted(pieces[0], p, a, b) for p in pieces[1:])
    c22 = sum(mainterm.pair_shifted(p, q, a, b) for p in pieces[1:] for q in pieces[1:])
    return c11, c12, c22


def eval_c_shifted(cfg: MollifierConfig, alpha: float, beta: float, log_t: float) -> ShiftedConstants:
    """Shifted constants before the Q operator.

    ``alpha`` and ``beta`` are the raw shifts; ``log_t`` sets the scale
    (``y_i = T^theta_i``). No Q appears here: the Q-weighted constants are
    recovered by ``apply_q_operator`` at ``alpha = beta = -R/log T``.
    """
    if not math.isfinite(log_t) or log_t <= 0:
        raise DomainError("log_t must be positive and finite")
    a, b = alpha * log_t, beta * log_t
    if cfg.formula is Formula.PRINTED:
        return _shifted_printed(cfg, a, b)
    c11, c12, c22 = shifted_main_term(cfg, a, b)
    return ShiftedConstants(float(c11.real), float(c12.real), float(c22.real))


def apply_q_operator(
    fn: Callable[[complex, complex], complex | Sequence[complex]],
    Q: Polynomial,
    R: float,
    radius: float = 0.5,
    nodes: int = 24,
) -> np.ndarray:
    """``Q(-d/da) Q(-d/db) fn(a, b)`` at ``a = b = -R`` by Cauchy's formula.

    Derivatives come from the trapezoidal rule on circles of ``radius``
    around ``-R``; ``fn`` must be holomorphic there. Vector-valued ``fn`` is
    handled componentwise.
    """
    phis = 2 * np.pi * np.arange(nodes) / nodes
    pts = -R + radius * np.exp(1j * phis)
    vals = np.array([[np.atleast_1d(fn(pa, pb)) for pb in pts] for pa in pts], dtype=complex)
    w = np.zeros(nodes, dtype=complex)
    for m, q in enumerate(Q.coeffs):
        w += q * (-1) ** m * math.factorial(m) * np.exp(-1j * m * phis) / radius**m / nodes
    return np.einsum("i,j,ijk->k", w, w, vals).real


def q_operator_components(cfg: MollifierConfig, radius: float = 0.5, nodes: int = 24) -> np.ndarray:
    """(c11, c12, c22) obtained by applying Q to the shifted main term."""
    return apply_q_operator(lambda a, b: shifted_main_term(cfg, a, b), cfg.Q, cfg.R, radius, nodes)


__all__ = [
    "BOUNDARY_TOL",
    "C12Variant",
    "ConfigError",
    "DomainError",
    "EvaluationError",
    "Formula",
    "FunctionalReport",
    "MollifierConfig",
    "ShiftedConstants",
    "apply_q_operator",
    "eval_c11",
    "eval_c12",
    "eval_c22",
    "eval_c_shifted",
    "eval_kappa_star",
    "eval_total",
    "kappa_from_c",
    "printed_c22_weight",
    "q_is_linear",
    "q_operator_components",
    "shifted_main_term",
]
