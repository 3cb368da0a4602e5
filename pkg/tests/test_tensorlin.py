import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmtq.ensembles import RandomStream, sample_induced, sample_pure_uniform
from rmtq.permcore import Permutation
from rmtq.tensorlin import (
    DensityMatrix,
    PureState,
    entropy,
    max_entangled,
    partial_trace,
    partial_transpose,
    realign,
    schatten1,
    trace_sigma,
)


def random_state(d, seed):
    return sample_induced(d, d, RandomStream(seed)).data


def test_kron_index_convention():
    a = np.diag([1.0, 2.0])
    b = np.diag([10.0, 20.0, 30.0])
    m = np.kron(a, b)
    # e_i (x) f_a sits at i * k + a
    assert m[1 * 3 + 2, 1 * 3 + 2] == 2.0 * 30.0


def test_partial_trace_of_product():
    a = random_state(2, 1)
    b = random_state(3, 2)
    rho = np.kron(a, b)
    assert np.allclose(partial_trace(rho, "second", (2, 3)), a)
    assert np.allclose(partial_trace(rho, "first", (2, 3)), b)


def test_partial_trace_needs_split():
    with pytest.raises(ValueError, match="split"):
        partial_trace(np.eye(4) / 4)
    with pytest.raises(ValueError):
        partial_trace(np.eye(4) / 4, dims=(3, 2))


def test_partial_transpose_product_and_bell():
    a = random_state(2, 3)
    b = random_state(3, 4)
    assert np.allclose(partial_transpose(np.kron(a, b), "second", (2, 3)), np.kron(a, b.T))
    assert np.allclose(partial_transpose(np.kron(a, b), "first", (2, 3)), np.kron(a.T, b))
    for d in (2, 3):
        omega = max_entangled(d).density()
        ev = np.linalg.eigvalsh(partial_transpose(omega))
        assert ev.min() == pytest.approx(-1 / d)
        assert ev.max() == pytest.approx(1 / d)


def test_realign_product_is_rank_one():
    a = random_state(2, 5)
    b = random_state(3, 6)
    r = realign(np.kron(a, b), (2, 3))
    assert np.allclose(r, np.outer(a.reshape(-1), b.reshape(-1)))
    assert schatten1(r) == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b))


def test_realign_bell_trace_norm():
    d = 3
    assert schatten1(realign(max_entangled(d).density())) == pytest.approx(d)


def test_entropy_values():
    assert entropy(np.eye(4) / 4) == pytest.approx(math.log(4))
    assert entropy(np.array([1.0, 0.0])) == 0.0
    p = np.array([0.5, 0.25, 0.25])
    assert entropy(p, 2) == pytest.approx(-math.log(np.sum(p**2)))
    assert entropy(p, math.inf) == pytest.approx(math.log(2))
    assert entropy(PureState(np.array([1.0, 0.0]))) == 0.0
    with pytest.raises(ValueError):
        entropy(p, 0)


def test_entropy_clips_tiny_eigenvalues():
    assert entropy(np.array([1.0, 1e-12, -1e-12])) == 0.0
    with pytest.raises(ValueError):
        entropy(np.array([1.1, -0.1]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 1.0, 2.0, 3.0, math.inf]))
def test_entropy_bounds_and_schmidt_symmetry(seed, p):
    psi = sample_pure_uniform(6, RandomStream(seed), split=(2, 3)).density()
    a = partial_trace(psi, "second")
    b = partial_trace(psi, "first")
    assert 0 <= entropy(a, p) <= math.log(2) + 1e-12
    assert entropy(a, p) == pytest.approx(entropy(b, p), abs=1e-9)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(4) / 4, split=(3, 2))
    with pytest.raises(ValueError):
        PureState(np.array([1.0, 1.0]))


def test_trace_sigma():
    rng = np.random.default_rng(0)
    mats = [rng.standard_normal((3, 3)) for _ in range(3)]
    s = Permutation.from_cycles(3, (1, 2), (3,))
    assert trace_sigma(mats, s) == pytest.approx(np.trace(mats[0] @ mats[1]) * np.trace(mats[2]))
    full = Permutation.full_cycle(3)
    assert trace_sigma(mats, full) == pytest.approx(np.trace(mats[0] @ mats[1] @ mats[2]))
    assert trace_sigma(mats, Permutation.identity(3)) == pytest.approx(np.prod([np.trace(m) for m in mats]))
