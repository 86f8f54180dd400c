import math

import numpy as np
import pytest

from emodm.attention import (
    apply_attention,
    compute_attention,
    default_bins,
    mutual_information,
    nmi_matrix,
    normalized_mi,
)
from emodm.problems import Population


def brute_force_joint_counts(x, y, bins):
    """Per-sample binning oracle matching the equal-width rule."""

    def index(samples, v):
        lo, hi = min(samples), max(samples)
        if hi == lo:
            return 0
        i = int((v - lo) / (hi - lo) * bins)
        return min(i, bins - 1)

    counts = np.zeros((bins, bins), dtype=int)
    for xv, yv in zip(x, y):
        counts[index(x, xv), index(y, yv)] += 1
    return counts


def mi_from_counts(counts):
    n = counts.sum()
    total = 0.0
    px = counts.sum(axis=1) / n
    py = counts.sum(axis=0) / n
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            p = counts[i, j] / n
            if p > 0:
                total += p * math.log(p / (px[i] * py[j]))
    return total


class TestMutualInformation:
    def test_constant_sample_gives_zero(self):
        x = np.zeros(100)
        y = np.random.default_rng(0).random(100)
        assert mutual_information(x, y, 4) == 0.0

    def test_identical_uniform_samples_near_log_bins(self):
        x = np.random.default_rng(1).random(1000)
        assert mutual_information(x, x, 4) == pytest.approx(math.log(4), abs=0.05)

    def test_independent_samples_near_zero(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x, y = rng.random(1000), rng.random(1000)
            assert mutual_information(x, y, 4) < 0.05

    def test_symmetric_exactly(self):
        rng = np.random.default_rng(2)
        x, y = rng.random(200), rng.random(200)
        assert mutual_information(x, y, 8) == mutual_information(y, x, 8)

    def test_never_meaningfully_negative(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x, y = rng.random(50), rng.random(50)
            assert mutual_information(x, y, 5) >= -1e-12

    def test_matches_brute_force_binning(self):
        from emodm.attention import _bin_indices, _joint_counts

        rng = np.random.default_rng(4)
        for n in (8, 33, 64):
            for bins in (2, 3, 4):
                x, y = rng.random(n), rng.random(n)
                counts = _joint_counts(_bin_indices(x, bins), _bin_indices(y, bins), bins)
                assert np.array_equal(counts, brute_force_joint_counts(x, y, bins))
                oracle = mi_from_counts(counts)
                assert mutual_information(x, y, bins) == pytest.approx(oracle, abs=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            mutual_information([1.0], [1.0], 4)
        with pytest.raises(ValueError):
            mutual_information([1.0, 2.0], [1.0, 2.0], 1)
        with pytest.raises(ValueError):
            mutual_information([1.0, np.inf], [1.0, 2.0], 4)


class TestNormalizedMi:
    def test_self_information_is_one(self):
        x = np.random.default_rng(5).random(1000)
        assert normalized_mi(x, x, 10) == pytest.approx(1.0, abs=0.02)

    def test_constant_gives_zero(self):
        x = np.random.default_rng(6).random(100)
        assert normalized_mi(x, np.ones(100), 4) == 0.0

    def test_independent_near_zero(self):
        rng = np.random.default_rng(7)
        assert normalized_mi(rng.random(1000), rng.random(1000), 4) < 0.05

    def test_bounded_unit_interval(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            x, y = rng.random(60), rng.random(60)
            v = normalized_mi(x, y, 6)
            assert -1e-12 <= v <= 1.0 + 1e-9


class TestComputeAttention:
    def test_default_bins_rule(self):
        assert default_bins(100) == 10

    def test_uniform_weights_for_equal_information(self):
        rng = np.random.default_rng(9)
        x = rng.random((200, 4))
        pop = Population(step=0, decisions=x, objectives=rng.random((200, 2)))
        aw = compute_attention(pop)
        assert aw.w == pytest.approx(np.full(4, 0.25), abs=0.05)

    def test_softmax_hand_value(self):
        # softmax((0, ln 2)) = (1/3, 2/3)
        from emodm.attention import _softmax

        assert _softmax(np.array([0.0, math.log(2.0)])) == pytest.approx([1 / 3, 2 / 3], abs=1e-12)

    def test_weights_on_simplex(self):
        rng = np.random.default_rng(10)
        pop = Population(step=0, decisions=rng.random((100, 6)), objectives=rng.random((100, 3)))
        aw = compute_attention(pop)
        assert np.all(aw.w >= 0)
        assert aw.w.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(aw.avg_nmi >= 0) and np.all(aw.avg_nmi <= 1 + 1e-9)

    def test_constant_variable_gets_smallest_weight(self):
        rng = np.random.default_rng(11)
        x = rng.random((150, 5))
        x[:, 2] = 0.7
        y = x[:, :1] + 0.1 * rng.random((150, 1))
        pop = Population(step=0, decisions=x, objectives=y)
        aw = compute_attention(pop)
        assert aw.avg_nmi[2] == 0.0
        assert np.all(aw.w[2] <= aw.w + 1e-15)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(12)
        x = rng.random((120, 5))
        y = rng.random((120, 2))
        perm = rng.permutation(5)
        a = compute_attention(Population(step=0, decisions=x, objectives=y))
        b = compute_attention(Population(step=0, decisions=x[:, perm], objectives=y))
        assert np.allclose(b.w, a.w[perm])
        assert b.signature == a.signature


class TestApplyAttention:
    def test_uniform_scaling(self):
        pop = Population(step=0, decisions=np.ones((3, 4)), objectives=np.ones((3, 2)))
        out = apply_attention(pop, np.full(4, 0.25))
        assert np.all(out.decisions == 0.25)
        assert out.objectives is None

    def test_degenerate_single_weight(self):
        pop = Population(step=0, decisions=np.ones((2, 3)))
        out = apply_attention(pop, np.array([1.0, 0.0, 0.0]))
        assert np.array_equal(out.decisions, [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])

    def test_composition_squares_weights(self):
        rng = np.random.default_rng(13)
        pop = Population(step=0, decisions=rng.random((5, 3)))
        w = np.array([0.5, 0.3, 0.2])
        twice = apply_attention(apply_attention(pop, w), w)
        assert np.allclose(twice.decisions, pop.decisions * w**2)

    def test_rejects_wrong_length(self):
        pop = Population(step=0, decisions=np.ones((2, 3)))
        with pytest.raises(ValueError):
            apply_attention(pop, np.ones(4))
