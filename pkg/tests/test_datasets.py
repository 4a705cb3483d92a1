import numpy as np
import pytest

from svqchain.datasets import (
    TWO_PI,
    circular_concentration,
    cooccurrence,
    embed_phases,
    gen_circle,
    gen_hierarchical_phases,
    gen_object_manifold,
    make_dataset,
    phases_array,
    rayleigh_uniformity_pvalue,
)


class StubRng:
    """Uniform stub: first call returns a constant root, later calls zeros."""

    def __init__(self, root: float):
        self.root = root
        self.calls = 0

    def uniform(self, low, high, size):
        self.calls += 1
        if self.calls == 1:
            return np.full(size, self.root)
        return np.zeros(size)


@pytest.fixture(scope="module")
def big_phase_set():
    return gen_hierarchical_phases(12345, 100_000)


class TestHierarchicalPhases:
    def test_zero_splits_collapse_to_root(self):
        samples = gen_hierarchical_phases(StubRng(1.25), 3)
        for s in samples:
            np.testing.assert_array_equal(s.phases, np.full(4, 1.25))
            np.testing.assert_array_equal(s.embedded, embed_phases(np.full(4, 1.25)))

    def test_embedding_consistency(self):
        for s in gen_hierarchical_phases(9, 200):
            np.testing.assert_array_equal(s.embedded, embed_phases(np.array(s.phases)))
            pairs = s.embedded.reshape(4, 2)
            np.testing.assert_allclose(np.linalg.norm(pairs, axis=1), 1.0, atol=1e-15)

    def test_phases_in_canonical_range(self):
        phases = phases_array(gen_hierarchical_phases(2, 1000))
        assert np.all(phases >= 0.0) and np.all(phases < TWO_PI)

    def test_seed_determinism(self):
        a = gen_hierarchical_phases(77, 50)
        b = gen_hierarchical_phases(77, 50)
        for sa, sb in zip(a, b):
            assert sa.phases == sb.phases
            np.testing.assert_array_equal(sa.embedded, sb.embedded)

    def test_empty_count_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            gen_hierarchical_phases(1, 0)

    def test_uniform_marginals(self, big_phase_set):
        phases = phases_array(big_phase_set)
        for k in range(4):
            assert rayleigh_uniformity_pvalue(phases[:, k]) > 0.01

    def test_sibling_pairs_more_concentrated(self, big_phase_set):
        phases = phases_array(big_phase_set)

        def conc(i, j):
            return circular_concentration(phases[:, i] - phases[:, j])

        # leaves sharing a parent differ by one split; cousins accumulate
        # two independent split levels and spread further
        assert conc(0, 1) > conc(0, 2)
        assert conc(0, 1) > conc(1, 2)
        assert conc(2, 3) > conc(1, 2)

    def test_adjacent_difference_spans_half_circle(self, big_phase_set):
        phases = phases_array(big_phase_set)
        diff = np.mod(phases[:, 1] - phases[:, 0], TWO_PI)
        assert np.all(diff <= np.pi + 1e-12)

    def test_depth_parameter(self):
        samples = gen_hierarchical_phases(3, 10, depth=3)
        assert len(samples[0].phases) == 8
        assert samples[0].embedded.shape == (16,)


class TestCircle:
    def test_axis_points(self):
        np.testing.assert_allclose(embed_phases(np.array([0.0])), [1.0, 0.0], atol=0)
        np.testing.assert_allclose(
            embed_phases(np.array([np.pi / 2])), [0.0, 1.0], atol=1e-15
        )

    def test_unit_norm_and_latent(self):
        for s in gen_circle(4, 500):
            assert np.linalg.norm(s.data) == pytest.approx(1.0, abs=1e-15)
            np.testing.assert_allclose(
                s.data, [np.cos(s.latent[0]), np.sin(s.latent[0])], atol=0
            )

    def test_mean_vanishes_at_scale(self):
        data = np.array([s.data for s in gen_circle(31, 100_000)])
        assert np.linalg.norm(data.mean(axis=0)) < 0.02

    def test_empty_count_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            gen_circle(1, 0)


class TestObjectManifold:
    def test_direct_formula(self):
        [s] = gen_object_manifold(1.0, [0.0], [-1, 0, 1])
        np.testing.assert_allclose(
            s.data, [np.exp(-0.5), 1.0, np.exp(-0.5)], rtol=1e-15
        )

    def test_peak_at_matching_location(self):
        samples = gen_object_manifold(0.7, [2.0], list(range(-5, 6)))
        data = samples[0].data
        assert data[7] == 1.0 == data.max()  # grid location i = 2

    def test_narrow_width_has_sharper_turns(self):
        # turning angles of the 3-D projected curve as the position sweeps:
        # undersampled bumps trace a jagged curve, wide bumps a smooth one
        grid = list(range(-5, 6))
        positions = np.linspace(0.0, 4.0, 201)

        def max_turn(sigma):
            data = np.array([s.data for s in gen_object_manifold(sigma, positions, grid)])
            curve = data[:, 6:9]  # grid locations i = 1, 2, 3
            seg = np.diff(curve, axis=0)
            norms = np.linalg.norm(seg, axis=1)
            cosang = np.einsum("ij,ij->i", seg[:-1], seg[1:]) / (norms[:-1] * norms[1:])
            return np.arccos(np.clip(cosang, -1.0, 1.0)).max()

        assert max_turn(0.25) > max_turn(1.0)

    def test_invalid_width_rejected(self):
        with pytest.raises(ValueError, match="sigma"):
            gen_object_manifold(0.0, [0.0], [0, 1])
        with pytest.raises(ValueError, match="grid"):
            gen_object_manifold(1.0, [0.0], [])


class TestCooccurrence:
    def test_single_sample_lands_in_origin_bin(self):
        samples = gen_hierarchical_phases(StubRng(0.0), 1)
        hist = cooccurrence(samples, 1, 2, 8)
        assert hist.total == 1
        assert hist.bins[0, 0] == 1

    def test_swap_transposes(self):
        samples = gen_hierarchical_phases(6, 2000)
        a = cooccurrence(samples, 1, 3, 16)
        b = cooccurrence(samples, 3, 1, 16)
        np.testing.assert_array_equal(a.bins, b.bins.T)

    def test_total_count(self):
        samples = gen_hierarchical_phases(6, 321)
        assert cooccurrence(samples, 2, 4, 12).total == 321

    def test_adjacent_pair_band_occupancy(self, big_phase_set):
        # a bin can hold mass only if some difference within one bin width
        # of its diagonal offset lies in [0, pi]
        bins = 36
        h = TWO_PI / bins
        hist = cooccurrence(big_phase_set, 1, 2, bins)
        for i, j in zip(*np.nonzero(hist.bins)):
            offset = ((j - i) % bins) * h
            dist = 0.0 if offset <= np.pi else min(offset - np.pi, TWO_PI - offset)
            assert dist <= h + 1e-12

    def test_validation(self):
        samples = gen_hierarchical_phases(1, 5)
        with pytest.raises(ValueError, match="non-empty"):
            cooccurrence([], 1, 2, 8)
        with pytest.raises(ValueError, match="indices"):
            cooccurrence(samples, 0, 2, 8)
        with pytest.raises(ValueError, match="bins"):
            cooccurrence(samples, 1, 2, 1)


class TestMakeDataset:
    def test_hier_dataset_arrays(self):
        ds = make_dataset("hier-phases", 100, 5)
        assert ds.latent.shape == (100, 4)
        assert ds.data.shape == (100, 8)
        assert ds.count == 100

    def test_circle_dataset_arrays(self):
        ds = make_dataset("circle", 50, 5)
        assert ds.latent.shape == (50, 1)
        assert ds.data.shape == (50, 2)

    def test_unknown_generator(self):
        with pytest.raises(ValueError, match="unknown"):
            make_dataset("nope", 10, 1)
