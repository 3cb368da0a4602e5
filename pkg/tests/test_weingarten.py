from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from rmtq.ensembles import RandomStream, sample_haar_unitary
from rmtq.permcore import IntegerPartition, Permutation, all_permutations, compose, integer_partitions, mobius
from rmtq.weingarten import (
    CovarianceForm,
    MonomialSpec,
    haar_monomial_integral,
    pairings,
    weingarten_table,
    wg_asymptotic,
    wg_exact,
    wg_full_cycle_closed_form,
    wick_moment,
)


def full_group_oracle(n, p):
    """Wg by inverting the p! x p! Gram matrix n^#(s^-1 t) with sympy."""
    group = list(all_permutations(p))
    G = sympy.Matrix(len(group), len(group), lambda a, b: sympy.Integer(n) ** compose(group[a].inverse(), group[b]).num_cycles)
    row = G.inv()[0, :]  # row of the identity (first in lexicographic order)
    return {group[b]: Fraction(int(sympy.numer(row[b])), int(sympy.denom(row[b]))) for b in range(len(group))}


@pytest.mark.parametrize("n,p", [(3, 3), (4, 3), (4, 4)])
def test_table_matches_full_group_inverse(n, p):
    oracle = full_group_oracle(n, p)
    table = weingarten_table(n, p)
    for sigma, value in oracle.items():
        assert table[sigma] == value


def test_small_closed_forms():
    n = 7
    assert wg_exact(n, [1, 1]) == Fraction(1, n * n - 1)
    assert wg_exact(n, [2]) == Fraction(-1, n * (n * n - 1))
    d = n * (n * n - 1) * (n * n - 4)
    assert wg_exact(n, [1, 1, 1]) == Fraction(n * n - 2, d)
    assert wg_exact(n, [2, 1]) == Fraction(-n, d)
    assert wg_exact(n, [3]) == Fraction(2, d)


def test_documented_values():
    assert wg_exact(3, [1, 1]) == Fraction(1, 8)
    assert wg_exact(4, [2]) == Fraction(-1, 60)
    assert wg_exact(5, [2]) == Fraction(-1, 120)


@pytest.mark.parametrize("p", range(1, 7))
@pytest.mark.parametrize("extra", [0, 1, 5])
def test_convolution_identity_exact(p, extra):
    table = weingarten_table(p + extra, p)
    assert all(v == 0 for v in table.convolution_defect().values())


@pytest.mark.parametrize("d", range(1, 7))
@pytest.mark.parametrize("n", [6, 7, 12])
def test_full_cycle_closed_form(d, n):
    assert wg_exact(n, [d]) == wg_full_cycle_closed_form(n, d)


def test_pseudo_inverse_regime_rejected():
    with pytest.raises(ValueError, match="pseudo-inverse"):
        wg_exact(2, [1, 1, 1])
    with pytest.raises(ValueError):
        weingarten_table(20, 9)


@pytest.mark.parametrize("lam", integer_partitions(4))
def test_asymptotic_leading_order(lam):
    n = 2000
    sigma = Permutation.from_cycle_type(lam)
    exact = float(wg_exact(n, lam))
    assert exact / wg_asymptotic(n, sigma) == pytest.approx(1.0, rel=1e-5)
    assert np.sign(exact) == np.sign(mobius(sigma))


def test_monomial_moments():
    n = 4
    u11_sq = MonomialSpec(i=(1,), j=(1,), i_conj=(1,), j_conj=(1,))
    assert haar_monomial_integral(n, u11_sq) == Fraction(1, n)
    u11_4 = MonomialSpec(i=(1, 1), j=(1, 1), i_conj=(1, 1), j_conj=(1, 1))
    assert haar_monomial_integral(n, u11_4) == Fraction(2, n * (n + 1))
    mixed = MonomialSpec(i=(1, 1), j=(1, 2), i_conj=(1, 1), j_conj=(1, 2))
    assert haar_monomial_integral(n, mixed) == Fraction(1, n * (n + 1))
    cross = MonomialSpec(i=(1, 2), j=(1, 2), i_conj=(1, 2), j_conj=(2, 1))
    assert haar_monomial_integral(n, cross) == Fraction(-1, n * (n * n - 1))


def test_unbalanced_monomial_vanishes():
    spec = MonomialSpec(i=(1, 1), j=(1, 1), i_conj=(1,), j_conj=(1,))
    assert haar_monomial_integral(3, spec) == 0
    assert haar_monomial_integral(3, MonomialSpec(i=(1,), j=(1,), i_conj=(2,), j_conj=(1,))) == 0


def test_monomial_index_validation():
    with pytest.raises(ValueError):
        haar_monomial_integral(2, MonomialSpec(i=(3,), j=(1,), i_conj=(3,), j_conj=(1,)))
    with pytest.raises(ValueError):
        MonomialSpec(i=(1, 2), j=(1,), i_conj=(1,), j_conj=(1,))


def test_monomial_monte_carlo():
    n, draws = 3, 200_000
    U = sample_haar_unitary(n, RandomStream(11, 0), size=draws)
    vals = U[:, 0, 0] * U[:, 1, 1] * np.conj(U[:, 0, 1] * U[:, 1, 0])
    spec = MonomialSpec(i=(1, 2), j=(1, 2), i_conj=(1, 2), j_conj=(2, 1))
    exact = float(haar_monomial_integral(n, spec))
    se = vals.real.std() / np.sqrt(draws)
    assert abs(vals.real.mean() - exact) < 4 * se
    u4 = np.abs(U[:, 0, 0]) ** 4
    exact4 = float(haar_monomial_integral(n, MonomialSpec((1, 1), (1, 1), (1, 1), (1, 1))))
    assert abs(u4.mean() - exact4) < 4 * u4.std() / np.sqrt(draws)


def test_pairing_counts():
    assert [len(pairings(range(2 * m))) for m in range(5)] == [1, 1, 3, 15, 105]
    assert pairings(range(3)) == []


@pytest.mark.parametrize("ell", range(1, 6))
def test_wick_standard_gaussian_double_factorial(ell):
    form = CovarianceForm(np.eye(1))
    expected = 1
    for j in range(1, 2 * ell, 2):
        expected *= j
    assert wick_moment(form, [0] * (2 * ell)) == expected


def test_wick_odd_moment_and_validation():
    form = CovarianceForm(np.array([[2.0, 0.5], [0.5, 1.0]]))
    assert wick_moment(form, [0, 1, 1]) == 0.0
    assert wick_moment(form, [0, 0, 1, 1]) == pytest.approx(2 * 1 + 2 * 0.25)
    with pytest.raises(ValueError):
        wick_moment(form, [2, 0])
    with pytest.raises(ValueError):
        CovarianceForm(np.array([[1.0, 2.0], [2.0, 1.0]]))


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=2, max_size=6).filter(lambda x: len(x) % 2 == 0))
def test_wick_matches_monte_carlo(indices):
    C = np.array([[1.0, 0.3, 0.1], [0.3, 2.0, -0.4], [0.1, -0.4, 1.5]])
    rng = np.random.default_rng(5)
    x = rng.multivariate_normal(np.zeros(3), C, size=400_000)
    prod = np.prod(x[:, indices], axis=1)
    se = prod.std() / np.sqrt(len(prod))
    assert abs(prod.mean() - wick_moment(CovarianceForm(C), indices)) < 5 * se
