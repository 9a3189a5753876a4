import numpy as np
import pytest
from scipy import ndimage

from neuronalg import (
    EmptyForeground,
    EmptyLabelMap,
    InvalidParameter,
    PipelineConfig,
    UnknownLabel,
    cluster_stats,
    compact_labels,
    distance_split,
    merge_small,
    plan_splits,
    split_cluster,
    split_merge_pass,
)
from neuronalg.splitmerge import SplitPlan


def random_label_map(rng, size=48, n=6, lo=6, hi=12):
    """Non-overlapping random rectangles; areas within a factor ~4."""
    labels = np.zeros((size, size), dtype=np.int32)
    lab = 0
    for _ in range(200):
        if lab >= n:
            break
        h = int(rng.integers(lo, hi + 1))
        w = int(rng.integers(lo, hi + 1))
        y = int(rng.integers(0, size - h))
        x = int(rng.integers(0, size - w))
        if labels[y : y + h, x : x + w].any():
            continue
        lab += 1
        labels[y : y + h, x : x + w] = lab
    return labels


class TestClusterStats:
    def test_areas_and_mean(self):
        labels = np.array([[1, 1, 2], [0, 2, 2]])
        stats = cluster_stats(labels)
        assert stats.areas == {1: 2, 2: 3}
        assert stats.a_avg == pytest.approx(2.5)

    def test_empty_map(self):
        with pytest.raises(EmptyLabelMap):
            cluster_stats(np.zeros((4, 4), dtype=np.int32))


class TestPlanSplits:
    def test_area_ratio_rounds_half_up(self):
        # areas 10, 10, 40: mean 20, ratio 2.0 -> k = 2
        stats = cluster_stats(
            np.repeat(np.array([[1] * 10 + [2] * 10 + [3] * 40]), 1, axis=0)
        )
        plans = plan_splits(stats, 1.5)
        assert plans == [SplitPlan(label=3, r=2.0, k=2)]

    def test_k_floor_is_two(self):
        labels = np.zeros((1, 100), dtype=np.int32)
        labels[0, :32] = 1
        labels[0, 32:50] = 2
        labels[0, 50:68] = 3
        stats = cluster_stats(labels)  # mean ~22.7, label 1 ratio ~1.41
        plans = plan_splits(stats, 1.3)
        assert plans and all(p.k >= 2 for p in plans)

    def test_split_factor_validated(self):
        stats = cluster_stats(np.ones((2, 2), dtype=np.int32))
        with pytest.raises(InvalidParameter):
            plan_splits(stats, 1.0)

    def test_no_oversized_labels(self):
        stats = cluster_stats(np.array([[1, 2], [1, 2]]))
        assert plan_splits(stats, 1.5) == []


class TestSplitCluster:
    def make_double_blob(self):
        """One label containing two bright cores separated by a dim bridge."""
        gray = np.full((20, 40), 0.2)
        gray[6:14, 4:16] = 0.9
        gray[6:14, 24:36] = 0.9
        labels = np.zeros((20, 40), dtype=np.int32)
        labels[4:16, 2:38] = 1
        return gray, labels

    def test_separates_cores_and_conserves_pixels(self):
        gray, labels = self.make_double_blob()
        out = split_cluster(gray, labels, SplitPlan(label=1, r=2.0, k=2))
        assert (out > 0).sum() == (labels > 0).sum()
        np.testing.assert_array_equal(out > 0, labels > 0)
        assert len(np.unique(out[out > 0])) == 2
        for lab in np.unique(out[out > 0]):
            _, n = ndimage.label(out == lab, structure=np.ones((3, 3)))
            assert n == 1

    def test_untouched_outside_cluster(self):
        gray, labels = self.make_double_blob()
        labels[0, 0] = 9
        out = split_cluster(gray, labels, SplitPlan(label=1, r=2.0, k=2))
        assert out[0, 0] == 9

    def test_degenerate_intensity_is_left_alone(self):
        gray = np.full((10, 10), 0.5)
        labels = np.ones((10, 10), dtype=np.int32)
        out = split_cluster(gray, labels, SplitPlan(label=1, r=3.0, k=3))
        np.testing.assert_array_equal(out, labels)

    def test_unknown_label(self):
        gray, labels = self.make_double_blob()
        with pytest.raises(UnknownLabel):
            split_cluster(gray, labels, SplitPlan(label=5, r=2.0, k=2))


class TestMergeSmall:
    def test_absorbs_into_longest_boundary_neighbor(self):
        labels = np.zeros((6, 12), dtype=np.int32)
        labels[:, :5] = 1
        labels[:, 5:10] = 2
        labels[2, 10] = 3  # tiny label touching label 2 only
        labels[2, 9] = 3
        out = merge_small(labels, cluster_stats(labels), 0.2)
        assert 3 not in out
        assert out[2, 10] == 2

    def test_isolated_small_label_dropped(self):
        labels = np.zeros((8, 8), dtype=np.int32)
        labels[1:6, 1:6] = 1
        labels[7, 7] = 2
        out = merge_small(labels, cluster_stats(labels), 0.2)
        assert out[7, 7] == 0

    def test_merge_factor_validated(self):
        stats = cluster_stats(np.ones((2, 2), dtype=np.int32))
        for bad in (0.0, 1.0, -0.5):
            with pytest.raises(InvalidParameter):
                merge_small(np.ones((2, 2), dtype=np.int32), stats, bad)


class TestCompactLabels:
    def test_renumbers_contiguously(self):
        labels = np.array([[0, 5], [9, 5]])
        out = compact_labels(labels)
        np.testing.assert_array_equal(out, [[0, 1], [2, 1]])

    def test_identity_when_compact(self):
        labels = np.array([[1, 2], [0, 1]])
        np.testing.assert_array_equal(compact_labels(labels), labels)


class TestSplitMergePass:
    def test_conserves_foreground_and_connectivity(self):
        rng = np.random.default_rng(0)
        cfg = PipelineConfig()
        for _ in range(20):
            labels = random_label_map(rng)
            gray = rng.random(labels.shape)
            out = split_merge_pass(gray, labels, cfg)
            assert (out > 0).sum() == (labels > 0).sum()
            np.testing.assert_array_equal(out > 0, labels > 0)
            for lab in np.unique(out[out > 0]):
                _, n = ndimage.label(out == lab, structure=np.ones((3, 3)))
                assert n == 1

    def test_idempotent_on_balanced_map(self):
        labels = np.zeros((20, 20), dtype=np.int32)
        labels[2:8, 2:8] = 1
        labels[12:18, 12:18] = 2
        gray = np.where(labels > 0, 0.8, 0.1)
        out = split_merge_pass(gray, labels, PipelineConfig())
        np.testing.assert_array_equal(out, labels)


class TestDistanceSplit:
    def test_two_touching_disks(self):
        yy, xx = np.mgrid[0:40, 0:70]
        mask = ((yy - 20) ** 2 + (xx - 20) ** 2 <= 144) | (
            (yy - 20) ** 2 + (xx - 42) ** 2 <= 144
        )
        labels = distance_split(mask)
        assert labels.max() == 2
        np.testing.assert_array_equal(labels > 0, mask)

    def test_single_blob_kept_whole(self):
        yy, xx = np.mgrid[0:30, 0:30]
        mask = (yy - 15) ** 2 + (xx - 15) ** 2 <= 80
        labels = distance_split(mask)
        assert labels.max() == 1

    def test_empty_mask(self):
        with pytest.raises(EmptyForeground):
            distance_split(np.zeros((5, 5), dtype=bool))
