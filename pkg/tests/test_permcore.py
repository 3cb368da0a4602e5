import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from rmtq.permcore import (
    IntegerPartition,
    Permutation,
    SetPartition,
    all_permutations,
    catalan,
    class_convolution_counts,
    class_size,
    compose,
    cycle_type_and_length,
    distance,
    integer_partitions,
    mobius,
    noncrossing_partitions,
)


def perms(p):
    return st.permutations(list(range(1, p + 1))).map(Permutation)


def test_s3_multiplication_table_matches_brute_force():
    # compose as plain functions on dicts
    for s, t in itertools.product(all_permutations(3), repeat=2):
        sd = {i: s(i) for i in range(1, 4)}
        td = {i: t(i) for i in range(1, 4)}
        expected = tuple(sd[td[i]] for i in range(1, 4))
        assert compose(s, t).images == expected


def test_compose_rejects_mismatched_degrees():
    with pytest.raises(ValueError):
        compose(Permutation.identity(3), Permutation.identity(4))


def test_invalid_permutation_rejected():
    with pytest.raises(ValueError):
        Permutation((1, 1, 2))


def test_cycle_type_and_length_examples():
    sigma = Permutation.from_cycles(5, (1, 3), (2, 4, 5))
    ct, length = cycle_type_and_length(sigma)
    assert ct == IntegerPartition((3, 2))
    assert length == 3
    assert cycle_type_and_length(Permutation.identity(4)) == (IntegerPartition((1, 1, 1, 1)), 0)
    assert Permutation.full_cycle(6).length == 5


def test_partition_rejects_increasing_parts():
    with pytest.raises(ValueError):
        IntegerPartition((1, 2))
    assert IntegerPartition.from_parts([1, 3, 2]).parts == (3, 2, 1)


@pytest.mark.parametrize("p", range(1, 8))
def test_class_sizes_sum_to_factorial(p):
    assert sum(class_size(lam) for lam in integer_partitions(p)) == math.factorial(p)


def test_class_size_matches_enumeration():
    counts = {}
    for s in all_permutations(5):
        counts[s.cycle_type] = counts.get(s.cycle_type, 0) + 1
    for lam, c in counts.items():
        assert class_size(lam) == c


def test_partition_counts():
    assert [len(integer_partitions(p)) for p in range(1, 9)] == [1, 2, 3, 5, 7, 11, 15, 22]
    assert integer_partitions(4)[0] == IntegerPartition((4,))
    assert integer_partitions(4)[-1] == IntegerPartition((1, 1, 1, 1))


def test_mobius_values():
    assert mobius(Permutation.identity(3)) == 1
    assert mobius(IntegerPartition((2,))) == -1
    assert mobius(IntegerPartition((3,))) == 2
    assert mobius(IntegerPartition((4,))) == -5
    assert mobius(IntegerPartition((2, 2))) == 1


@given(perms(6), perms(6), perms(6))
def test_composition_is_associative(a, b, c):
    assert compose(compose(a, b), c) == compose(a, compose(b, c))


@given(perms(7))
def test_inverse_and_length(s):
    assert compose(s, s.inverse()).is_identity()
    assert s.length == s.p - s.num_cycles
    assert s.inverse().cycle_type == s.cycle_type


@given(perms(6), perms(6), perms(6))
def test_distance_is_a_metric(a, b, c):
    assert distance(a, a) == 0
    assert distance(a, b) == distance(b, a)
    assert distance(a, c) <= distance(a, b) + distance(b, c)


def _all_set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _all_set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


@pytest.mark.parametrize("p", range(1, 8))
def test_noncrossing_count_is_catalan(p):
    assert len(noncrossing_partitions(p)) == catalan(p)


@pytest.mark.parametrize("p", range(1, 7))
def test_noncrossing_partitions_match_brute_force_filter(p):
    brute = {SetPartition(tuple(map(tuple, b))) for b in _all_set_partitions(list(range(1, p + 1)))}
    nc = {x for x in brute if x.is_noncrossing()}
    assert set(noncrossing_partitions(p)) == nc


def test_crossing_detected():
    assert not SetPartition(((1, 3), (2, 4))).is_noncrossing()
    assert SetPartition(((1, 4), (2, 3))).is_noncrossing()


def test_noncrossing_guard():
    with pytest.raises(ValueError):
        noncrossing_partitions(13)


@pytest.mark.parametrize("p", [3, 4])
def test_class_convolution_counts_against_enumeration(p):
    classes, K = class_convolution_counts(p)
    index = {c: i for i, c in enumerate(classes)}
    for a, lam in enumerate(classes):
        sigma = Permutation.from_cycle_type(lam)
        brute = {}
        for tau in all_permutations(p):
            key = (index[tau.cycle_type], compose(tau.inverse(), sigma).num_cycles)
            brute[key] = brute.get(key, 0) + 1
        for (b, c), v in brute.items():
            assert K[a, b, c] == v
        assert K[a].sum() == math.factorial(p)


@settings(max_examples=30)
@given(st.integers(1, 5).flatmap(lambda p: st.permutations(list(range(1, p + 1)))))
def test_cycles_reconstruct_permutation(images):
    s = Permutation(tuple(images))
    assert Permutation.from_cycles(s.p, *s.cycles()) == s
