"""Sieved arithmetic functions and brute-force checks of the discrete
identities behind the mean-value computation.

Arrays are indexed by n directly; index 0 is unused and holds 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .poly_core import Polynomial, integrate_exp_poly

MAX_LIMIT = 10**8
CONTOUR_NODES = 1024


class ResourceLimitError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class ArithTable:
    limit: int
    mu: np.ndarray
    lam: np.ndarray
    lambda_k: dict[int, np.ndarray] = field(default_factory=dict)
    d_k: dict[int, np.ndarray] = field(default_factory=dict)
    primes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


def _primes_upto(n: int) -> np.ndarray:
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve)


def dirichlet_convolve(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``(f*g)(n) = sum_{d|n} f(d) g(n/d)`` for n up to ``len - 1``.

    Loops over the support of the sparser argument; integer inputs give
    integer output.
    """
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape or f.ndim != 1:
        raise ValueError("arguments must be 1-D arrays of equal length")
    if np.count_nonzero(f[1:]) > np.count_nonzero(g[1:]):
        f, g = g, f
    N = len(f) - 1
    out = np.zeros(N + 1, dtype=np.result_type(f, g))
    for d in np.flatnonzero(f[1:]) + 1:
        d = int(d)
        m = N // d
        out[d : d * m + 1 : d] += f[d] * g[1 : m + 1]
    return out


def build_table(N: int, lambda_orders: int = 3, divisor_orders: int = 3) -> ArithTable:
    """Mobius, von Mangoldt, ``Lambda_k`` (k <= lambda_orders) and ``d_k``
    (k <= divisor_orders) up to ``N``.

    ``Lambda_k`` comes from ``Lambda_{k+1} = Lambda_k log n + Lambda * Lambda_k``.
    """
    if N < 2:
        raise PreconditionError("N must be >= 2")
    if N > MAX_LIMIT:
        raise ResourceLimitError(f"N = {N} exceeds the limit {MAX_LIMIT}")
    primes = _primes_upto(N)

    mu = np.ones(N + 1, dtype=np.int8)
    mu[0] = 0
    for p in primes:
        p = int(p)
        mu[p::p] *= -1
        if p <= N // p:
            mu[p * p :: p * p] = 0

    lam = np.zeros(N + 1)
    for p in primes:
        p = int(p)
        lp = math.log(p)
        q = p
        while q <= N:
            lam[q] = lp
            q *= p

    logn = np.zeros(N + 1)
    logn[1:] = np.log(np.arange(1, N + 1))
    lambda_k = {1: lam}
    for k in range(1, lambda_orders):
        prev = lambda_k[k]
        lambda_k[k + 1] = prev * logn + dirichlet_convolve(lam, prev)

    one = np.ones(N + 1, dtype=np.int64)
    one[0] = 0
    d_k = {1: one}
    for k in range(1, divisor_orders):
        d_k[k + 1] = dirichlet_convolve(d_k[k], one)
    return ArithTable(limit=N, mu=mu, lam=lam, lambda_k=lambda_k, d_k=d_k, primes=primes)


def verify_lambda2_identity(table: ArithTable, N: int | None = None) -> float:
    """max over n <= N of ``|Lambda_2(n) - Lambda(n) log n - (Lambda*Lambda)(n)|``."""
    N = table.limit if N is None else N
    if N > table.limit:
        raise PreconditionError("N exceeds table limit")
    if 2 not in table.lambda_k:
        raise PreconditionError("table was built without Lambda_2")
    lam = table.lam[: N + 1]
    logn = np.zeros(N + 1)
    logn[1:] = np.log(np.arange(1, N + 1))
    rhs = lam * logn + dirichlet_convolve(lam, lam)
    return float(np.max(np.abs(table.lambda_k[2][: N + 1] - rhs)))


# -- prime tuples -------------------------------------------------------------------


def prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _is_squarefree(n: int) -> bool:
    return all((n // p) % p for p in prime_factors(n))


def _tuple_log_sum(primes: list[int], length: int, exclude: tuple = ()) -> float:
    pool = [p for p in primes if p not in exclude]
    return sum(math.prod(math.log(p) for p in t) for t in itertools.permutations(pool, length))


def verify_combinatorial_identity(
    table: ArithTable | None, h1: int, h2: int, l1: int, l2: int
) -> tuple[float, float]:
    """Both sides of the shared-prime decomposition.

    lhs: product over the two sides of the sums, over ordered tuples of
    distinct primes dividing ``h_i`` of length ``l_i``, of the product of
    their logs. rhs: split by the number ``k`` of primes common to both
    tuples, ``sum_k k! C(l1,k) C(l2,k)`` times the sum over distinct primes
    ``p_1..p_k | gcd``, ``q | h1``, ``r | h2`` of ``prod log^2 p prod log q
    prod log r``.
    """
    for name, h in (("h1", h1), ("h2", h2)):
        if h < 1:
            raise PreconditionError(f"{name} must be positive")
        sf = table.mu[h] != 0 if table is not None and h <= table.limit else _is_squarefree(h)
        if not sf:
            raise PreconditionError(f"{name} = {h} is not square-free")
    if l1 < 0 or l2 < 0:
        raise PreconditionError("tuple lengths must be non-negative")
    P1, P2 = prime_factors(h1), prime_factors(h2)
    common = [p for p in P1 if p in P2]
    lhs = _tuple_log_sum(P1, l1) * _tuple_log_sum(P2, l2)
    rhs = 0.0
    for k in range(min(l1, l2) + 1):
        w = math.factorial(k) * math.comb(l1, k) * math.comb(l2, k)
        s = 0.0
        for pt in itertools.permutations(common, k):
            lp = math.prod(math.log(p) ** 2 for p in pt)
            for qt in itertools.permutations([p for p in P1 if p not in pt], l1 - k):
                lq = math.prod(math.log(q) for q in qt)
                used = pt + qt
                s += lp * lq * _tuple_log_sum(P2, l2 - k, used)
        rhs += w * s
    return lhs, rhs


# -- arithmetic factor ----------------------------------------------------------------


def verify_arithmetic_factor(table: ArithTable, z: float, N: int) -> float:
    """``S(N) = sum mu(h) mu(k) (hkmn)^(-1/2-z)`` over ``h, k, m, n <= N`` with ``hm = kn``.

    With ``P = hm = kn`` the weight is ``P^(-1-2z)`` and the sum factors as
    ``sum_P P^(-1-2z) A(P)^2`` where ``A(P) = sum mu(h)`` over ``h | P`` with
    ``h <= N`` and ``P/h <= N``.
    """
    if not z > 0:
        raise PreconditionError("z must be positive")
    if N > table.limit:
        raise PreconditionError("N exceeds table limit")
    A = np.zeros(N * N + 1, dtype=np.int64)
    m = np.arange(1, N + 1)
    for h in range(1, N + 1):
        if table.mu[h]:
            A[h * m] += int(table.mu[h])
    P = np.flatnonzero(A)
    return float(np.sum(A[P].astype(float) ** 2 * P.astype(float) ** (-1.0 - 2.0 * z)))


def arithmetic_factor_bruteforce(mu: np.ndarray, z: float, N: int) -> float:
    """Direct loop over (h, k, m) with n = hm/k; for small N only."""
    total = 0.0
    for h in range(1, N + 1):
        if not mu[h]:
            continue
        for k in range(1, N + 1):
            if not mu[k]:
                continue
            for mm in range(1, N + 1):
                hm = h * mm
                if hm % k:
                    continue
                n = hm // k
                if n <= N:
                    total += int(mu[h]) * int(mu[k]) * float(h * k * mm * n) ** (-0.5 - z)
    return total


# -- summation lemmas -----------------------------------------------------------------


@dataclass(frozen=True)
class ConvSpec:
    """``lead * Lambda^{*a} * Lambda_2^{*b} * (Lambda log)^{*c}``.

    ``leading`` is ``"unit"`` (the identity [n = 1]), ``"one"`` (the
    constant 1) or ``"d_k"`` with order ``k``.
    """

    leading: str = "one"
    k: int = 1
    lambda_power: int = 0
    lambda2_power: int = 0
    lambda_log_power: int = 0

    def __post_init__(self):
        if self.leading not in ("unit", "one", "d_k"):
            raise PreconditionError(f"unknown leading factor {self.leading!r}")
        if self.lambda_log_power not in (0, 1):
            raise PreconditionError("lambda_log_power must be 0 or 1")
        if min(self.k, self.lambda_power, self.lambda2_power) < 0:
            raise PreconditionError("powers must be non-negative")

    @property
    def pole_order(self) -> int:
        lead = {"unit": 0, "one": 1, "d_k": self.k}[self.leading]
        return lead + self.lambda_power + 2 * self.lambda2_power + 2 * self.lambda_log_power

    @property
    def leading_constant(self) -> float:
        return float(2**self.lambda2_power)


def conv_array(table: ArithTable, spec: ConvSpec, N: int) -> np.ndarray:
    if spec.leading == "unit":
        f = np.zeros(N + 1)
        f[1] = 1.0
    elif spec.leading == "one":
        f = np.ones(N + 1)
        f[0] = 0.0
    else:
        if spec.k not in table.d_k:
            raise PreconditionError(f"table was built without d_{spec.k}")
        f = table.d_k[spec.k][: N + 1].astype(float)
    lam = table.lam[: N + 1]
    for _ in range(spec.lambda_power):
        f = dirichlet_convolve(f, lam)
    if spec.lambda2_power:
        if 2 not in table.lambda_k:
            raise PreconditionError("table was built without Lambda_2")
        lam2 = table.lambda_k[2][: N + 1]
        for _ in range(spec.lambda2_power):
            f = dirichlet_convolve(f, lam2)
    if spec.lambda_log_power:
        logn = np.zeros(N + 1)
        logn[1:] = np.log(np.arange(1, N + 1))
        f = dirichlet_convolve(f, lam * logn)
    return f


def summation_main_term(spec: ConvSpec, z: float, x: float, s: float, F: Polynomial, H: Polynomial) -> float:
    """``C (log z)^D / ((D-1)! z^s) int_0^1 (1-u)^(D-1) F(1-(1-u) log z/log x) H(u) z^(us) du``."""
    D = spec.pole_order
    if D < 1:
        raise PreconditionError("pole order must be >= 1")
    lz, lx = math.log(z), math.log(x)
    r = lz / lx
    integrand = (Polynomial((1.0, -1.0)) ** (D - 1)) * F.compose_affine(1.0 - r, r) * H
    return spec.leading_constant * lz**D / math.factorial(D - 1) * math.exp(-s * lz) * integrate_exp_poly(
        integrand, s * lz
    )


def verify_summation_lemma(
    table: ArithTable,
    spec: ConvSpec,
    z: float,
    x: float,
    s: float,
    F: Polynomial,
    H: Polynomial,
) -> tuple[float, float, float]:
    """(lhs, main term, relative error) for
    ``sum_{n<=z} f(n)/n^(1+s) F(log(x/n)/log x) H(log(z/n)/log z)``.
    """
    if not 3 <= z <= x:
        raise PreconditionError("need 3 <= z <= x")
    if abs(s) > 1.0 / math.log(x) + 1e-15:
        raise PreconditionError("need |s| <= 1/log x")
    N = int(math.floor(z))
    if N > table.limit:
        raise PreconditionError("z exceeds table limit")
    f = conv_array(table, spec, N)[1:]
    n = np.arange(1, N + 1, dtype=float)
    ln = np.log(n)
    weights = np.exp(-(1.0 + s) * ln) * F((math.log(x) - ln) / math.log(x)) * H((math.log(z) - ln) / math.log(z))
    lhs = float(np.dot(f, weights))
    rhs = summation_main_term(spec, z, x, s, F, H)
    return lhs, rhs, abs(lhs - rhs) / abs(rhs)


# -- residues -------------------------------------------------------------------------


def verify_residue_formula(beta: float, m: int, j: int, q: float) -> tuple[float, float]:
    """``(1/2 pi i) \\oint (beta+u)^m q^u u^-(j+1) du`` on the unit circle versus
    ``(1/j!) d^m/dy^m [e^(beta y) (y + log q)^j]`` at ``y = 0``.
    """
    if m not in (0, 1):
        raise PreconditionError("only orders m = 0 and m = 1 are supported")
    if abs(beta) >= 1:
        raise PreconditionError("need |beta| < 1 so the unit circle encloses -beta")
    if j < 0 or q < 1:
        raise PreconditionError("need j >= 0 and q >= 1")
    phi = 2 * np.pi * np.arange(CONTOUR_NODES) / CONTOUR_NODES
    u = np.exp(1j * phi)
    contour = float(np.mean((beta + u) ** m * np.exp(u * math.log(q)) * u ** (-j)).real)
    L = math.log(q)
    if m == 0:
        closed = L**j / math.factorial(j)
    else:
        closed = (beta * L**j + (j * L ** (j - 1) if j else 0.0)) / math.factorial(j)
    return contour, closed
