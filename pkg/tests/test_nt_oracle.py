import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critline.nt_oracle import (
    ConvSpec,
    PreconditionError,
    ResourceLimitError,
    arithmetic_factor_bruteforce,
    build_table,
    dirichlet_convolve,
    prime_factors,
    verify_arithmetic_factor,
    verify_combinatorial_identity,
    verify_lambda2_identity,
    verify_residue_formula,
    verify_summation_lemma,
)
from critline.poly_core import Polynomial

U = Polynomial.identity()
ONE = Polynomial.constant(1.0)


@pytest.fixture(scope="module")
def table():
    return build_table(10**4)


@pytest.fixture(scope="module")
def big_table():
    return build_table(10**5, 2, 2)


def _trial_mu(n: int) -> int:
    f = prime_factors(n)
    m = n
    for p in f:
        m //= p
    return 0 if any(m % p == 0 for p in f) else (-1) ** len(f)


# -- tables -----------------------------------------------------------------------------


def test_mobius_examples(table):
    assert (table.mu[12], table.mu[6], table.mu[30], table.mu[1]) == (0, 1, -1, 1)
    assert set(np.unique(table.mu[1:])) <= {-1, 0, 1}


def test_mobius_against_trial_division(table):
    assert all(table.mu[n] == _trial_mu(n) for n in range(1, 3000))


def test_von_mangoldt(table):
    assert table.lam[8] == pytest.approx(math.log(2), abs=1e-15)
    assert table.lam[12] == 0.0
    assert table.lambda_k[1] is table.lam
    for n in range(2, 10**4 + 1):
        f = prime_factors(n)
        expected = math.log(f[0]) if len(f) == 1 else 0.0
        assert table.lam[n] == expected


def test_lambda2_example(table):
    expected = math.log(12) ** 2 - math.log(6) ** 2 - math.log(4) ** 2 + math.log(2) ** 2
    assert table.lambda_k[2][12] == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(2 * math.log(2) * math.log(3), rel=1e-13)


def test_divisor_functions(table):
    assert np.all(table.d_k[1][1:] == 1)
    assert table.d_k[2][6] == 4
    assert table.d_k[3][12] == 18
    assert table.d_k[2].dtype.kind == "i"


def test_build_limits():
    with pytest.raises(PreconditionError):
        build_table(1)
    with pytest.raises(ResourceLimitError):
        build_table(10**8 + 1)


# -- convolution ----------------------------------------------------------------------------


def test_mobius_inversion_exact():
    t = build_table(10**5, 1, 1)
    e = dirichlet_convolve(t.d_k[1], t.mu.astype(np.int64))
    assert e[1] == 1 and not e[2:].any()


def test_lambda_self_convolution(table):
    ll = dirichlet_convolve(table.lam, table.lam)
    assert ll[12] == pytest.approx(2 * math.log(2) * math.log(3), rel=1e-14)


@settings(max_examples=30)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=40), st.lists(st.integers(-5, 5), min_size=2, max_size=40))
def test_convolution_matches_divisor_sum(f, g):
    n = min(len(f), len(g))
    f, g = np.array(f[:n]), np.array(g[:n])
    f[0] = g[0] = 0
    out = dirichlet_convolve(f, g)
    for m in range(1, n):
        assert out[m] == sum(f[d] * g[m // d] for d in range(1, m + 1) if m % d == 0)


def test_generalised_von_mangoldt_recursion(table):
    logn = np.zeros(table.limit + 1)
    logn[1:] = np.log(np.arange(1, table.limit + 1))
    for k in (1, 2, 3):
        direct = dirichlet_convolve(table.mu.astype(float), logn**k)
        assert np.max(np.abs(direct - table.lambda_k[k])) <= 1e-8


# -- identities -----------------------------------------------------------------------------


def test_lambda2_identity(table):
    assert verify_lambda2_identity(table, 10**4) <= 1e-9
    assert table.lambda_k[2][1] == 0.0


def test_lambda2_identity_requires_range(table):
    with pytest.raises(PreconditionError):
        verify_lambda2_identity(table, 10**5)


def test_combinatorial_examples(table):
    lhs, rhs = verify_combinatorial_identity(table, 6, 6, 1, 1)
    assert lhs == pytest.approx(math.log(6) ** 2, rel=1e-14)
    assert rhs == pytest.approx(lhs, rel=1e-12)
    lhs, rhs = verify_combinatorial_identity(table, 30, 6, 2, 2)
    assert rhs == pytest.approx(lhs, rel=1e-12)


def test_combinatorial_empty_tuple(table):
    lhs, rhs = verify_combinatorial_identity(table, 30, 210, 0, 2)
    single = sum(math.log(p) * math.log(q) for p in (2, 3, 5, 7) for q in (2, 3, 5, 7) if p != q)
    assert lhs == pytest.approx(single) and rhs == pytest.approx(single)


@settings(max_examples=60)
@given(st.integers(1, 210), st.integers(1, 210), st.integers(0, 3), st.integers(0, 3))
def test_combinatorial_identity_random(h1, h2, l1, l2):
    t = build_table(210, 1, 1)
    if t.mu[h1] == 0 or t.mu[h2] == 0:
        with pytest.raises(PreconditionError):
            verify_combinatorial_identity(t, h1, h2, l1, l2)
        return
    lhs, rhs = verify_combinatorial_identity(t, h1, h2, l1, l2)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


def test_combinatorial_rejects_square_factor(table):
    with pytest.raises(PreconditionError):
        verify_combinatorial_identity(table, 12, 6, 1, 1)


def test_arithmetic_factor_trivial(table):
    assert verify_arithmetic_factor(table, 0.5, 1) == 1.0


@pytest.mark.parametrize("N", [2, 7, 30, 60])
@pytest.mark.parametrize("z", [0.25, 0.5, 1.0])
def test_arithmetic_factor_vs_quadruple_loop(table, N, z):
    assert verify_arithmetic_factor(table, z, N) == pytest.approx(arithmetic_factor_bruteforce(table.mu, z, N), abs=1e-12)


def test_arithmetic_factor_converges(table):
    assert abs(verify_arithmetic_factor(table, 0.5, 1000) - 1) < abs(verify_arithmetic_factor(table, 0.5, 10) - 1)
    assert abs(verify_arithmetic_factor(table, 1.0, 100) - 1) < 0.01


def test_arithmetic_factor_requires_positive_z(table):
    with pytest.raises(PreconditionError):
        verify_arithmetic_factor(table, 0.0, 10)


# -- residues ------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "beta, m, j, q, expected",
    [(0.0, 1, 2, math.e, 1.0), (0.4, 0, 1, math.e**2, 2.0), (-0.7, 0, 1, math.e**2, 2.0)],
)
def test_residue_examples(beta, m, j, q, expected):
    a, b = verify_residue_formula(beta, m, j, q)
    assert a == pytest.approx(expected, abs=1e-12)
    assert b == pytest.approx(expected, abs=1e-12)


def test_residue_closed_form():
    L = math.log(10)
    a, b = verify_residue_formula(0.3, 1, 3, 10.0)
    assert b == pytest.approx((0.3 * L**3 + 3 * L**2) / 6, rel=1e-15)
    assert abs(a - b) <= 1e-10


@settings(max_examples=50)
@given(st.floats(-0.95, 0.95), st.integers(0, 1), st.integers(1, 6), st.floats(1.0, 50.0))
def test_residue_random(beta, m, j, q):
    a, b = verify_residue_formula(beta, m, j, q)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(b))


@pytest.mark.parametrize("args", [(0.0, 2, 1, 2.0), (1.2, 0, 1, 2.0), (0.0, 0, 1, 0.5)])
def test_residue_preconditions(args):
    with pytest.raises(PreconditionError):
        verify_residue_formula(*args)


# -- summation lemmas -------------------------------------------------------------------------


def test_conv_spec_orders():
    assert ConvSpec("unit", lambda_log_power=1).pole_order == 2
    assert ConvSpec("d_k", k=2, lambda_power=1).pole_order == 3
    assert ConvSpec("one", lambda2_power=1).pole_order == 3
    assert ConvSpec("one", lambda2_power=2).leading_constant == 4.0
    with pytest.raises(PreconditionError):
        ConvSpec("one", lambda_log_power=2)
    with pytest.raises(PreconditionError):
        ConvSpec("two")


def test_summation_preconditions(table):
    spec = ConvSpec("one")
    with pytest.raises(PreconditionError):
        verify_summation_lemma(table, spec, 2.0, 10.0, 0.0, U, U)
    with pytest.raises(PreconditionError):
        verify_summation_lemma(table, spec, 100.0, 1000.0, 1.0, U, U)
    with pytest.raises(PreconditionError):
        verify_summation_lemma(table, spec, 1e5, 1e6, 0.0, U, U)


def test_harmonic_main_term(big_table):
    # sum_{n<=z} 1/n = log z + gamma + O(1/z) with F = H = 1
    lhs, rhs, _ = verify_summation_lemma(big_table, ConvSpec("one"), 1e5, 1e5, 0.0, ONE, ONE)
    assert rhs == pytest.approx(math.log(1e5), rel=1e-14)
    assert lhs - rhs == pytest.approx(0.5772156649, abs=1e-4)


@pytest.mark.parametrize(
    "spec",
    [
        ConvSpec("unit", lambda_log_power=1),
        ConvSpec("d_k", k=2),
        ConvSpec("d_k", k=2, lambda_power=1),
        ConvSpec("one", lambda_log_power=1),
        ConvSpec("one", lambda_power=1, lambda_log_power=1),
        ConvSpec("one", lambda2_power=1),
        ConvSpec("one"),
    ],
    ids=["lambda-log", "d2", "d2-lambda", "one-lambda-log", "one-lambda-lambda-log", "one-lambda2", "one"],
)
def test_summation_error_shrinks(big_table, spec):
    def err(z):
        x = z * z
        return verify_summation_lemma(big_table, spec, z, x, 0.5 / math.log(x), U, U)[2]

    assert err(1e5) < err(1e3)


@pytest.mark.xfail(strict=True, reason="Euler constant offset keeps the error near 0.14 at z = 1e5")
def test_summation_base_case_band(big_table):
    _, _, rel = verify_summation_lemma(big_table, ConvSpec("one"), 1e5, 1e6, 0.0, U, U)
    assert rel < 0.05


@pytest.mark.xfail(strict=True, reason="lower-order terms leave a 15% gap at z = 1e5")
def test_summation_divisor_lambda_band(big_table):
    lhs, rhs, _ = verify_summation_lemma(big_table, ConvSpec("d_k", k=2, lambda_power=1), 1e5, 1e10, 0.0, ONE, ONE)
    assert rhs == pytest.approx(math.log(1e5) ** 3 / 2 / 3, rel=1e-12)
    assert abs(lhs / rhs - 1) < 0.10
