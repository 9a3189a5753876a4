import numpy as np
import pytest

from neuronalg import (
    ChannelPolicy,
    PipelineConfig,
    confusion,
    iou,
    segment,
    segment_batch,
)
from neuronalg.image import save_gray

from synthetic import make_ellipse_image


@pytest.fixture(scope="module")
def two_disk_scene():
    rng = np.random.default_rng(5)
    yy, xx = np.mgrid[0:256, 0:256]
    gt = np.zeros((256, 256), dtype=np.int32)
    gt[(yy - 90) ** 2 + (xx - 90) ** 2 <= 30**2] = 1
    gt[(yy - 170) ** 2 + (xx - 170) ** 2 <= 26**2] = 2
    tex = rng.standard_normal((256, 256))
    gray = np.where(gt > 0, 0.85 * (1 + 0.05 * tex), 0.10 + 0.03 * tex)
    return np.clip(gray, 0, 1), gt


class TestSegment:
    def test_two_disks(self, two_disk_scene):
        gray, gt = two_disk_scene
        res = segment(gray)
        assert res.labels.shape == gray.shape
        assert res.labels.dtype == np.int32
        np.testing.assert_array_equal(res.binary, res.labels > 0)
        assert iou(confusion(res.binary, gt > 0)) >= 0.8
        assert res.labels.max() >= 2
        assert res.flags["empty_foreground"] is False

    def test_deterministic(self, two_disk_scene):
        gray, _ = two_disk_scene
        a = segment(gray)
        b = segment(gray)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_gray_input_overrides_rgb_policy(self, two_disk_scene):
        gray, gt = two_disk_scene
        cfg = PipelineConfig(channel_policy=ChannelPolicy.LUMINANCE)
        res = segment(gray, cfg)  # 2D input despite an RGB policy
        assert iou(confusion(res.binary, gt > 0)) >= 0.8

    def test_rgb_input(self, two_disk_scene):
        gray, gt = two_disk_scene
        rgb = np.stack([gray * 0.2, gray * 0.1, gray], axis=-1)
        cfg = PipelineConfig(channel_policy=ChannelPolicy.BLUE)
        res = segment(rgb, cfg)
        assert iou(confusion(res.binary, gt > 0)) >= 0.8

    def test_inverted_polarity(self, two_disk_scene):
        gray, gt = two_disk_scene
        res = segment(1.0 - gray)
        assert res.flags["inverted"] is True
        assert iou(confusion(res.binary, gt > 0)) >= 0.8

    def test_constant_image_empty_foreground(self):
        res = segment(np.full((64, 64), 0.5))
        assert res.flags["empty_foreground"] is True
        assert not res.binary.any()
        assert (res.labels == 0).all()

    def test_snapshots(self, two_disk_scene):
        gray, _ = two_disk_scene
        res = segment(gray, snapshots=True)
        expect = {
            "stage1_equalized",
            "stage1_smoothed",
            "stage2_markers",
            "stage2_watershed",
            "stage3_splitmerge",
            "stage4_contours",
            "stage5_refined",
        }
        assert expect <= set(res.snapshots)
        assert len(res.snapshots["stage4_contours"]) >= 2

    def test_ellipse_scene_instances(self):
        gray, gt = make_ellipse_image(np.random.default_rng(3))
        res = segment(gray)
        n_gt = len(np.unique(gt[gt > 0]))
        assert iou(confusion(res.binary, gt > 0)) >= 0.8
        # elongated ellipses may be over-split by the distance transform;
        # the instance count should still be the right order of magnitude
        assert n_gt // 2 <= res.labels.max() <= 2 * n_gt


class TestPipelineConfig:
    def test_dict_roundtrip(self):
        cfg = PipelineConfig(channel_policy=ChannelPolicy.BLUE, split_factor=1.7, seed=9)
        back = PipelineConfig.from_dict(cfg.to_dict())
        assert back == cfg

    def test_file_roundtrip(self, tmp_path):
        cfg = PipelineConfig(merge_factor=0.3)
        path = tmp_path / "cfg.json"
        cfg.save(path)
        assert PipelineConfig.from_file(path) == cfg

    def test_default_sigmas_follow_image_size(self):
        cfg = PipelineConfig()
        sf = (512 + 512) / 2220.0
        assert cfg.smoothing_sigmas(512, 512) == [2.0 * sf, 4.0 * sf]
        assert PipelineConfig(sigmas=[1.0, 3.0]).smoothing_sigmas(512, 512) == [1.0, 3.0]


class TestSegmentBatch:
    def test_failure_isolation(self, tmp_path, two_disk_scene):
        gray, _ = two_disk_scene
        good = tmp_path / "good.png"
        save_gray(good, gray)
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"junk")
        items = segment_batch([good, bad])
        assert items[0].error is None and items[0].result is not None
        assert items[1].error is not None and items[1].result is None
