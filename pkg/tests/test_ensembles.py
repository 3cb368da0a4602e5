import math

import numpy as np
import pytest
from scipy import integrate, stats

from rmtq.ensembles import (
    GraphStateSpec,
    MpsSpec,
    RandomStream,
    adapted_example_spec,
    as_generator,
    boundary_volume,
    induced_batch,
    sample_bures,
    sample_ginibre,
    sample_graph_state_marginal,
    sample_haar_isometry,
    sample_haar_unitary,
    sample_induced,
    sample_mps_bulk_marginal,
    sample_product_projection_sum,
    sample_pure_uniform,
    sample_random_isometry_channel,
    sample_wishart,
)
from rmtq.freeprob import EmpiricalSpectrum, MarchenkoPastur, ks_distance
from rmtq.tensorlin import entropy


def within_3se(samples, target):
    samples = np.asarray(samples)
    se = samples.std(ddof=1) / math.sqrt(samples.size)
    return abs(samples.mean() - target) <= 3 * se


def test_stream_determinism_and_independence():
    a = RandomStream(5, 1).generator().standard_normal(8)
    b = RandomStream(5, 1).generator().standard_normal(8)
    c = RandomStream(5, 2).generator().standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    assert RandomStream(5, 1).substream(3) == RandomStream(5, 1).substream(3)
    assert RandomStream(5, 1).substream(3) != RandomStream(5, 1).substream(4)
    with pytest.raises(TypeError):
        as_generator(42)


@pytest.mark.parametrize(
    "draw",
    [
        lambda rs: sample_ginibre(3, 4, rs),
        lambda rs: sample_wishart(3, 4, rs),
        lambda rs: sample_haar_unitary(4, rs),
        lambda rs: sample_pure_uniform(5, rs).amplitudes,
        lambda rs: sample_induced(3, 2, rs).data,
        lambda rs: sample_bures(3, rs).data,
        lambda rs: sample_graph_state_marginal(adapted_example_spec(2), rs).data,
        lambda rs: sample_random_isometry_channel(3, 2, 4, rs).data,
        lambda rs: sample_mps_bulk_marginal(MpsSpec(2, 3, 2, 5), rs).data,
        lambda rs: sample_product_projection_sum(3, 2, 4, rs),
    ],
)
def test_samplers_are_bitwise_reproducible(draw):
    x = draw(RandomStream(123, 9))
    y = draw(RandomStream(123, 9))
    z = draw(RandomStream(123, 10))
    assert np.array_equal(x, y)
    assert not np.array_equal(x, z)


def test_wishart_single_entry_mean():
    w = sample_wishart(1, 1, RandomStream(1), size=100_000)[:, 0, 0].real
    assert within_3se(w, 1.0)


def test_wishart_mean_trace():
    w = sample_wishart(3, 5, RandomStream(2), size=20_000)
    assert within_3se(np.trace(w, axis1=1, axis2=2).real, 15.0)


def test_wishart_trace_independent_of_normalized_matrix():
    w = sample_wishart(3, 3, RandomStream(3), size=100_000)
    tr = np.trace(w, axis1=1, axis2=2).real
    rho = w / tr[:, None, None]
    purity = np.einsum("nij,nji->n", rho, rho).real
    assert abs(np.corrcoef(tr, purity)[0, 1]) < 0.02


def test_haar_unitarity():
    U = sample_haar_unitary(32, RandomStream(4), size=100)
    defect = np.abs(U @ np.conj(np.swapaxes(U, 1, 2)) - np.eye(32)).max()
    assert defect < 1e-12


def test_haar_first_entry_moments():
    n = 5
    U = sample_haar_unitary(n, RandomStream(5), size=200_000)
    u = U[:, 0, 0]
    assert within_3se(np.abs(u) ** 2, 1 / n)
    assert within_3se(np.abs(u) ** 4, 2 / (n * (n + 1)))
    assert within_3se(u.real, 0.0) and within_3se(u.imag, 0.0)


def test_haar_left_invariance_of_phases():
    # without the phase fix the diagonal of R would bias arg(U_11)
    U = sample_haar_unitary(3, RandomStream(6), size=50_000)
    phases = np.angle(U[:, 0, 0])
    assert stats.kstest(phases, stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf).pvalue > 0.01


def test_isometry_columns():
    V = sample_haar_isometry(10, 4, RandomStream(7))
    assert np.allclose(V.conj().T @ V, np.eye(4), atol=1e-12)
    with pytest.raises(ValueError):
        sample_haar_isometry(3, 4, RandomStream(7))


def test_pure_state_moments():
    d = 4
    xs = np.array([sample_pure_uniform(d, RandomStream(8, t)).amplitudes for t in range(40_000)])
    assert np.allclose(np.linalg.norm(xs, axis=1), 1, atol=1e-12)
    assert within_3se(np.abs(xs[:, 0]) ** 2, 1 / d)
    assert within_3se(np.abs(xs[:, 0]) ** 4, 2 / (d * (d + 1)))


def test_induced_purity_small_run():
    rho = induced_batch(3, 4, 20_000, RandomStream(9))
    purity = np.einsum("nij,nji->n", rho, rho).real
    assert within_3se(purity, 7 / 13)


def test_induced_rank_and_validity():
    rho = sample_induced(5, 2, RandomStream(10))
    ev = rho.eigenvalues()
    assert np.sum(ev > 1e-10) == 2
    rho.validate()


def test_induced_concentrates_when_s_large():
    devs = [np.abs(sample_induced(4, 4000, RandomStream(11, t)).eigenvalues() - 0.25).max() for t in range(20)]
    assert np.mean(devs) < 0.1


def test_page_entropy_small_run():
    rho = induced_batch(2, 2, 40_000, RandomStream(12))
    ev = np.clip(np.linalg.eigvalsh(rho), 1e-300, None)
    h = -(ev * np.log(ev)).sum(axis=1)
    page = sum(1 / i for i in range(3, 5)) - 1 / 4
    assert page == pytest.approx(1 / 3)
    assert within_3se(h, page)


def test_bures_trivial_dimension():
    assert sample_bures(1, RandomStream(13)).data[0, 0] == pytest.approx(1.0)


def test_bures_unitary_invariance():
    V = sample_haar_unitary(3, RandomStream(14))
    plain = [sample_bures(3, RandomStream(15, t)).data[0, 0].real for t in range(3000)]
    rotated = []
    for t in range(3000):
        r = sample_bures(3, RandomStream(16, t)).data
        rotated.append((V @ r @ V.conj().T)[0, 0].real)
    assert stats.ks_2samp(plain, rotated).pvalue > 0.01
    spectra_a = np.concatenate([sample_bures(3, RandomStream(17, t)).eigenvalues() for t in range(2000)])
    spectra_b = np.concatenate([sample_bures(3, RandomStream(18, t)).eigenvalues() for t in range(2000)])
    assert stats.ks_2samp(spectra_a, spectra_b).pvalue > 0.01


def test_bures_purity_against_quadrature():
    # d = 2 eigenvalues (x, 1 - x): density ~ (x(1-x))^(-1/2) (2x - 1)^2
    def weight(x):
        return (x * (1 - x)) ** -0.5 * (2 * x - 1) ** 2

    norm = integrate.quad(weight, 0, 1)[0]
    expected = integrate.quad(lambda x: (x**2 + (1 - x) ** 2) * weight(x), 0, 1)[0] / norm
    # the Bures constant C_B = 2/pi at d = 2 normalizes this density
    assert norm * 2 / math.pi == pytest.approx(1.0, rel=1e-8)
    purity = [np.sum(sample_bures(2, RandomStream(19, t)).eigenvalues() ** 2) for t in range(40_000)]
    assert np.mean(purity) == pytest.approx(expected, rel=0.02)


def test_wishart_marchenko_pastur_small():
    d = 300
    ev = np.linalg.eigvalsh(sample_wishart(d, d, RandomStream(20))) / d
    assert ks_distance(EmpiricalSpectrum(ev), MarchenkoPastur(1.0)) < 0.04


def test_graph_state_single_edge():
    kept = GraphStateSpec(2, ((0, 1),), 3, ("S", "S"))
    rho = sample_graph_state_marginal(kept, RandomStream(21))
    assert entropy(rho) == pytest.approx(0.0, abs=1e-9)
    half = GraphStateSpec(2, ((0, 1),), 3, ("S", "T"))
    rho = sample_graph_state_marginal(half, RandomStream(22))
    assert np.allclose(rho.data, np.eye(3) / 3, atol=1e-12)
    assert entropy(rho) == pytest.approx(math.log(3))


@pytest.mark.parametrize("N", [2, 3])
def test_adapted_example_exact_area_law(N):
    spec = adapted_example_spec(N)
    assert spec.is_adapted()
    assert boundary_volume(spec) == 5
    for t in range(3):
        assert entropy(sample_graph_state_marginal(spec, RandomStream(23, t))) == pytest.approx(5 * math.log(N), abs=1e-8)


def test_boundary_volume_optimizes_over_assignments():
    # two parallel edges, one kept leg per vertex: both edges can cross
    spec = GraphStateSpec(2, ((0, 1), (0, 1)), 2, ("S", "T", "T", "S"))
    assert not spec.is_adapted()
    assert boundary_volume(spec) == 2


def test_non_adapted_area_law_leading_order():
    deficits = []
    for N in (6, 8):
        spec = GraphStateSpec(2, ((0, 1), (0, 1)), N, ("S", "T", "T", "S"))
        h = [entropy(sample_graph_state_marginal(spec, RandomStream(24, t))) for t in range(20)]
        assert max(h) <= boundary_volume(spec) * math.log(N) + 1e-9
        deficits.append(boundary_volume(spec) * math.log(N) - np.mean(h))
    # E H = |dS| log N - h + o(1): the deficit stays bounded and settles
    assert 0 < deficits[1] < 1
    assert abs(deficits[1] - deficits[0]) < 0.05


def test_graph_state_guards_and_validation():
    with pytest.raises(ValueError):
        GraphStateSpec(2, ((0, 2),), 2, ("S", "S"))
    with pytest.raises(ValueError):
        GraphStateSpec(2, ((0, 1),), 2, ("S",))
    big = GraphStateSpec(2, tuple((0, 1) for _ in range(7)), 4, ("S", "T") * 7)
    with pytest.raises(ValueError):
        sample_graph_state_marginal(big, RandomStream(0))
    wide = GraphStateSpec(2, tuple((0, 1) for _ in range(6)), 3, ("S", "T") * 6)
    assert sample_graph_state_marginal(wide, RandomStream(0)).dim == 3**6
    too_many_kept = GraphStateSpec(2, tuple((0, 1) for _ in range(5)), 4, ("S", "S") * 5)
    with pytest.raises(ValueError):
        sample_graph_state_marginal(too_many_kept, RandomStream(0))


def test_isometry_channel_trace_preserving():
    ch = sample_random_isometry_channel(3, 4, 12, RandomStream(25))
    L = ch.kraus()
    assert np.allclose(np.einsum("rai,raj->ij", L.conj(), L), np.eye(12), atol=1e-10)
    assert np.trace(ch(np.eye(12) / 12)).real == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sample_random_isometry_channel(2, 2, 5, RandomStream(25))


def test_isometry_channel_flat_outputs():
    k, n = 4, 200
    ch = sample_random_isometry_channel(n, k, n * k, RandomStream(26))
    x = np.zeros(n * k)
    x[0] = 1
    ev = np.linalg.eigvalsh(ch(np.outer(x, x)))
    assert np.abs(ev - 1 / k).max() < 0.05


def test_mps_trivial_bond_is_pure():
    rho = sample_mps_bulk_marginal(MpsSpec(2, 1, 2, 6), RandomStream(27))
    assert np.trace(rho.data).real == pytest.approx(1.0)
    assert entropy(rho) == pytest.approx(0.0, abs=1e-9)


def test_mps_marginal_flattens_with_bond_dimension():
    flat = np.eye(4) / 4
    medians = []
    for D in (2, 8, 32):
        spec = MpsSpec(2, D, 2, 10)
        dist = [
            np.abs(np.linalg.eigvalsh(sample_mps_bulk_marginal(spec, RandomStream(28, t)).data - flat)).max()
            for t in range(30)
        ]
        medians.append(np.median(dist))
    assert medians[0] > medians[1] > medians[2]


def test_mps_guards():
    with pytest.raises(ValueError):
        MpsSpec(2, 300, 2, 4)
    with pytest.raises(ValueError):
        MpsSpec(2, 4, 9, 10)
    with pytest.raises(ValueError):
        MpsSpec(2, 2, 2, 4, L=2 * np.eye(2))
    with pytest.raises(ValueError):
        MpsSpec(2, 2, 2, 4, R=np.eye(2))


def test_projection_sum_single_term():
    m = sample_product_projection_sum(3, 2, 1, RandomStream(29))
    assert np.allclose(m @ m, m, atol=1e-12)
    assert np.linalg.eigvalsh(m)[-1] == pytest.approx(1.0)


def test_projection_sum_single_leg_edge():
    m = sample_product_projection_sum(500, 1, 250, RandomStream(30))
    assert np.linalg.eigvalsh(m)[-1] == pytest.approx((1 + math.sqrt(0.5)) ** 2, rel=0.05)


def test_projection_sum_guard():
    with pytest.raises(ValueError):
        sample_product_projection_sum(17, 3, 2, RandomStream(0))
