"""Polynomial arithmetic, first-order bivariate jets and closed-form
integrals of polynomial times exponential weights over [0, 1].

Everything the c-functional needs reduces to three moves: compose a
polynomial with an affine map in the integration variable, carry the first
order dependence on two formal variables ``x`` and ``y`` through products
(``Jet2`` / ``JetPoly``), and integrate ``exp(rate * v) * poly(v)`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_DEGREE = 64
SMALL_RATE = 1e-8


def _trim(coeffs: Iterable[float]) -> tuple[float, ...]:
    c = [float(v) for v in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c) if c else (0.0,)


@dataclass(frozen=True)
class Polynomial:
    """Dense real polynomial, ``coeffs[i]`` multiplies ``t**i``."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))
        if not all(math.isfinite(c) for c in self.coeffs):
            raise ValueError("polynomial coefficients must be finite")

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls((0.0,))

    @classmethod
    def constant(cls, c: float) -> "Polynomial":
        return cls((c,))

    @classmethod
    def identity(cls) -> "Polynomial":
        return cls((0.0, 1.0))

    @classmethod
    def from_x_one_minus_x(cls, a: Sequence[float], lead: float = 1.0) -> "Polynomial":
        """``lead*x + sum_i a[i-1] * x (1-x)**i`` for i = 1..len(a)."""
        out = cls((0.0, lead))
        base = cls((0.0, 1.0))
        one_minus = cls((1.0, -1.0))
        term = base
        for ai in a:
            term = term * one_minus
            out = out + term.scale(ai)
        return out

    @classmethod
    def from_one_minus_2x(cls, terms: Mapping[int, float]) -> "Polynomial":
        """``sum_p terms[p] * (1 - 2x)**p``."""
        out = cls.zero()
        base = cls((1.0, -2.0))
        for power, c in terms.items():
            out = out + (base ** int(power)).scale(c)
        return out

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    def __call__(self, t):
        # Horner; works elementwise on numpy arrays
        acc = 0.0 * t if isinstance(t, np.ndarray) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n)
        a[: len(self.coeffs)] += self.coeffs
        a[: len(other.coeffs)] += other.coeffs
        return Polynomial(tuple(a))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scale(-1.0)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        if self.degree + other.degree > MAX_DEGREE:
            raise ValueError(f"degree overflow (> {MAX_DEGREE})")
        return Polynomial(tuple(np.convolve(self.coeffs, other.coeffs)))

    def __pow__(self, n: int) -> "Polynomial":
        if n < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def scale(self, s: float) -> "Polynomial":
        return Polynomial(tuple(s * c for c in self.coeffs))

    def deriv(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial.zero()
        return Polynomial(tuple(i * c for i, c in enumerate(self.coeffs) if i > 0))

    def compose_affine(self, a: float, b: float) -> "Polynomial":
        """Return ``t -> self(a + b*t)`` as a polynomial in ``t``."""
        return Polynomial(tuple(_compose_affine(np.asarray(self.coeffs), a, b)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)


def poly_eval(p: Polynomial, t: float) -> float:
    return p(t)


def _compose_affine(c: np.ndarray, a: float, b: float) -> np.ndarray:
    """Coefficients of ``sum c_i (a + b t)**i`` in powers of t (Horner)."""
    out = np.zeros(1)
    lin = np.array([a, b])
    for ci in c[::-1]:
        out = np.convolve(out, lin)
        out[0] += ci
    return out[: len(c)] if len(c) else out


@dataclass(frozen=True)
class Jet2:
    """Value and first-order partials of a function of (x, y) at x = y = 0.

    ``dxdy`` is the mixed second partial. Squares of x or y are dropped: every
    quantity built here is differentiated at most once in each variable.
    """

    v: float = 0.0
    dx: float = 0.0
    dy: float = 0.0
    dxdy: float = 0.0

    @classmethod
    def const(cls, c: float) -> "Jet2":
        return cls(float(c), 0.0, 0.0, 0.0)

    @classmethod
    def exp_linear(cls, a: float, b: float) -> "Jet2":
        """Jet of ``exp(a*x + b*y)``."""
        return cls(1.0, a, b, a * b)

    def __add__(self, o: "Jet2") -> "Jet2":
        return Jet2(self.v + o.v, self.dx + o.dx, self.dy + o.dy, self.dxdy + o.dxdy)

    def __sub__(self, o: "Jet2") -> "Jet2":
        return Jet2(self.v - o.v, self.dx - o.dx, self.dy - o.dy, self.dxdy - o.dxdy)

    def __mul__(self, o) -> "Jet2":
        if not isinstance(o, Jet2):
            s = float(o)
            return Jet2(s * self.v, s * self.dx, s * self.dy, s * self.dxdy)
        return Jet2(
            self.v * o.v,
            self.v * o.dx + self.dx * o.v,
            self.v * o.dy + self.dy * o.v,
            self.v * o.dxdy + self.dx * o.dy + self.dy * o.dx + self.dxdy * o.v,
        )

    __rmul__ = __mul__

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.v, self.dx, self.dy, self.dxdy)


def _jet_conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = np.convolve
    return np.stack(
        [
            c(a[0], b[0]),
            c(a[0], b[1]) + c(a[1], b[0]),
            c(a[0], b[2]) + c(a[2], b[0]),
            c(a[0], b[3]) + c(a[1], b[2]) + c(a[2], b[1]) + c(a[3], b[0]),
        ]
    )


class JetPoly:
    """Polynomial in one integration variable with ``Jet2`` coefficients.

    Stored as a (4, n) array whose rows are the v, dx, dy and dxdy parts of
    the coefficient of ``t**i``.
    """

    __slots__ = ("rows",)

    def __init__(self, rows):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != 4:
            raise ValueError("JetPoly rows must have shape (4, n)")
        self.rows = rows

    @classmethod
    def from_jets(cls, jets: Sequence[Jet2]) -> "JetPoly":
        return cls(np.array([j.as_tuple() for j in jets], dtype=float).T)

    @classmethod
    def from_poly(cls, p: Polynomial) -> "JetPoly":
        rows = np.zeros((4, len(p.coeffs)))
        rows[0] = p.coeffs
        return cls(rows)

    @property
    def coeffs_u(self) -> list[Jet2]:
        return [Jet2(*self.rows[:, i]) for i in range(self.rows.shape[1])]

    def value_poly(self) -> Polynomial:
        return Polynomial(tuple(self.rows[0]))

    def __mul__(self, other) -> "JetPoly":
        if isinstance(other, JetPoly):
            return JetPoly(_jet_conv(self.rows, other.rows))
        if isinstance(other, Jet2):
            j = JetPoly(np.array(other.as_tuple())[:, None])
            return self * j
        return JetPoly(self.rows * float(other))

    __rmul__ = __mul__

    def __add__(self, other: "JetPoly") -> "JetPoly":
        n = max(self.rows.shape[1], other.rows.shape[1])
        out = np.zeros((4, n))
        out[:, : self.rows.shape[1]] += self.rows
        out[:, : other.rows.shape[1]] += other.rows
        return JetPoly(out)

    def integrate_unit(self) -> Jet2:
        """Integrate over t in [0, 1] (monomial moments 1/(i+1))."""
        w = 1.0 / np.arange(1, self.rows.shape[1] + 1)
        return Jet2(*(self.rows @ w))

    def integrate_exp(self, rate: float) -> Jet2:
        w = exp_moments(rate, self.rows.shape[1] - 1)
        return Jet2(*(self.rows @ w))


def poly_shift_jet(
    p: Polynomial, a: float, b: float, jet_var: str | None = None, jet_scale: float = 1.0
) -> JetPoly:
    """``p(jet_scale*jet_var + a + b*u)`` as a JetPoly in u.

    ``jet_var`` is ``"x"``, ``"y"`` or ``None``. Only the first-order term in
    the jet variable is kept.
    """
    if p.degree > MAX_DEGREE:
        raise ValueError(f"degree overflow (> {MAX_DEGREE})")
    c = np.asarray(p.coeffs)
    n = len(c)
    rows = np.zeros((4, n))
    rows[0] = _compose_affine(c, a, b)
    if jet_var is not None and n > 1:
        d = _compose_affine(np.arange(1, n) * c[1:], a, b)
        if jet_var == "x":
            rows[1, : len(d)] = jet_scale * d
        elif jet_var == "y":
            rows[2, : len(d)] = jet_scale * d
        else:
            raise ValueError(f"jet_var must be 'x', 'y' or None, got {jet_var!r}")
    return JetPoly(rows)


def exp_moments(rate: float, n: int) -> np.ndarray:
    """Moments ``I_k = int_0^1 v**k exp(rate*v) dv`` for k = 0..n.

    Upward recurrence ``I_k = (e^rate - k I_{k-1}) / rate`` is only stable
    while ``k < |rate|``; the remaining moments come from positive-term
    series. At ``|rate| < SMALL_RATE`` this is the polynomial branch
    ``1/(k+1) + rate/(k+2) + ...``.
    """
    lam = float(rate)
    out = np.empty(n + 1)
    k_fwd = 0
    if abs(lam) >= SMALL_RATE:
        e = math.exp(lam)
        prev = math.expm1(lam) / lam
        lim = min(n, int(abs(lam)))
        out[0] = prev
        k_fwd = 1
        for k in range(1, lim + 1):
            prev = (e - k * prev) / lam
            out[k] = prev
            k_fwd = k + 1
    for k in range(k_fwd, n + 1):
        out[k] = _moment_series(lam, k)
    return out


def _moment_series(lam: float, k: int) -> float:
    if lam >= 0.0:
        # sum_j lam^j / (j! (k+j+1))
        term = 1.0
        total = 1.0 / (k + 1)
        j = 0
        while True:
            j += 1
            term *= lam / j
            add = term / (k + j + 1)
            total += add
            if add <= 1e-17 * total:
                return total
    # Kummer: e^lam/(k+1) * sum_j |lam|^j / ((k+2)...(k+1+j))
    m = -lam
    term = 1.0
    total = 1.0
    j = 0
    while True:
        j += 1
        term *= m / (k + 1 + j)
        total += term
        if term <= 1e-17 * total:
            return math.exp(lam) * total / (k + 1)


def integrate_exp_poly(p: Polynomial, rate: float) -> float:
    """Exact ``int_0^1 exp(rate*v) p(v) dv``."""
    return float(np.dot(p.as_array(), exp_moments(rate, p.degree)))


def integrate_unit_square_jet(f_u: JetPoly, g_v: JetPoly, rate: float) -> Jet2:
    """``int_0^1 int_0^1 f(u) g(v) exp(rate*v) du dv`` as a Jet2.

    The integrand must factor as a u-part times a v-part; both parts carry
    their own x/y dependence and the jets multiply after integration.
    """
    return f_u.integrate_unit() * g_v.integrate_exp(rate)
