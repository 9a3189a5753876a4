"""Six-stage segmentation pipeline.

1. intensity extraction, polarity normalization, equalization, Gaussian
   smoothing cascade
2. Otsu foreground, marker extraction, watershed flooding
3. split-merge, applied twice
4. radial contour extraction per object
5. neuronal-agent contour refinement, contour rasterization
6. per-mask Otsu trim, distance-transform split, final merge
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import splitmerge
from .agent import AgentConfig, refine_contour
from .contour import centroid, contour_to_mask, radial_contour
from .errors import DegenerateHistogram, EmptyRegion, NeuronalgError
from .image import (
    ChannelPolicy,
    ScaleFactor,
    as_gray,
    equalize,
    extract_intensity,
    gaussian_smooth,
    histogram256,
    load_image,
)
from .threshold import binarize, class_separability, otsu_level
from .watershed import (
    extract_markers,
    gradient_magnitude,
    label_components,
    meyer_flood,
)


@dataclass
class PipelineConfig:
    channel_policy: ChannelPolicy = ChannelPolicy.LUMINANCE
    sigmas: list[float] | None = None  # None: [2 sf, 4 sf] from the image size
    split_factor: float = 1.5
    merge_factor: float = 0.2
    max_recursion_depth: int = 8
    seed: int = 0
    agent: AgentConfig = field(default_factory=AgentConfig)

    def smoothing_sigmas(self, height: int, width: int) -> list[float]:
        if self.sigmas is not None:
            return list(self.sigmas)
        sf = ScaleFactor.from_shape(height, width).sf
        return [2.0 * sf, 4.0 * sf]

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["channel_policy"] = self.channel_policy.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        if "channel_policy" in data:
            data["channel_policy"] = ChannelPolicy(data["channel_policy"])
        if "agent" in data and isinstance(data["agent"], dict):
            data["agent"] = AgentConfig(**data["agent"])
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


@dataclass
class SegmentationResult:
    labels: np.ndarray
    binary: np.ndarray
    flags: dict
    snapshots: dict | None = None


def _empty_result(shape, flag: str, snapshots) -> SegmentationResult:
    return SegmentationResult(
        labels=np.zeros(shape, dtype=np.int32),
        binary=np.zeros(shape, dtype=bool),
        flags={flag: True, "non_converged_points": 0},
        snapshots=snapshots,
    )


def _normalize_polarity(gray: np.ndarray) -> tuple[np.ndarray, bool]:
    """Invert the image when the border is brighter than the interior."""
    h, w = gray.shape
    b = max(1, min(h, w) // 32)
    border_mask = np.zeros((h, w), dtype=bool)
    border_mask[:b, :] = border_mask[-b:, :] = True
    border_mask[:, :b] = border_mask[:, -b:] = True
    interior = gray[~border_mask]
    if interior.size and gray[border_mask].mean() > interior.mean():
        return 1.0 - gray, True
    return gray, False


def segment(img, cfg: PipelineConfig | None = None, snapshots: bool = False) -> SegmentationResult:
    """Run the full six-stage pipeline on one image.

    Degenerate inputs (no foreground after thresholding) return an
    all-background result with an ``empty_foreground`` flag instead of
    raising.
    """
    cfg = cfg or PipelineConfig()
    snaps: dict | None = {} if snapshots else None

    # stage 1: polarity, equalization, smoothing cascade
    arr = np.asarray(img, dtype=np.float64)
    policy = ChannelPolicy.ALREADY_GRAY if arr.ndim == 2 else cfg.channel_policy
    gray = extract_intensity(arr, policy)
    gray = np.clip(as_gray(gray), 0.0, 1.0)
    h, w = gray.shape
    gray, inverted = _normalize_polarity(gray)
    equalized = equalize(gray)
    smoothed = equalized
    for sigma in cfg.smoothing_sigmas(h, w):
        smoothed = gaussian_smooth(smoothed, sigma)
    if snaps is not None:
        snaps["stage1_equalized"] = equalized
        snaps["stage1_smoothed"] = smoothed

    # stage 2: rough watershed subdivision
    try:
        level = otsu_level(histogram256(smoothed))
    except DegenerateHistogram:
        return _empty_result((h, w), "empty_foreground", snaps)
    fg = binarize(smoothed, level)
    if not fg.any():
        return _empty_result((h, w), "empty_foreground", snaps)
    markers = extract_markers(smoothed, fg)
    labels = meyer_flood(gradient_magnitude(smoothed), markers, mask=fg)
    leftover = fg & (labels == 0)
    if leftover.any():  # foreground islands whose maxima were suppressed
        extra = label_components(leftover)
        labels = labels + np.where(extra > 0, extra + labels.max(), 0).astype(np.int32)
    labels = splitmerge.compact_labels(labels)
    if snaps is not None:
        snaps["stage2_markers"] = markers
        snaps["stage2_watershed"] = labels.copy()

    # stage 3: split-merge, twice
    for _ in range(2):
        labels = splitmerge.split_merge_pass(smoothed, labels, cfg)
    if snaps is not None:
        snaps["stage3_splitmerge"] = labels.copy()

    # stages 4-5: radial contours refined by neuronal agents
    sd = ScaleFactor.from_shape(h, w).sd
    ids = [int(i) for i in np.unique(labels) if i > 0]
    object_masks: list[np.ndarray] = []
    contours = []
    non_converged = 0
    for lab in ids:
        mask_i = labels == lab
        try:
            c = radial_contour(mask_i, centroid(mask_i))
        except EmptyRegion:
            continue
        refined, bad = refine_contour(c, equalized, mask_i, cfg=cfg.agent, sd=sd)
        non_converged += int(bad.sum())
        contours.append(refined)
        object_masks.append(contour_to_mask(refined, w, h))
    if not object_masks:
        return _empty_result((h, w), "empty_foreground", snaps)
    stage5 = np.zeros((h, w), dtype=np.int32)
    for i, m in enumerate(object_masks, start=1):
        stage5[m] = i  # overlaps resolved by paint order (deterministic)
    if snaps is not None:
        snaps["stage4_contours"] = contours
        snaps["stage5_refined"] = stage5.copy()

    # stage 6: Otsu inside each mask, then the last split-merge cycle.
    # The per-mask trim removes background captured by the contour; its
    # level is capped at the global foreground threshold so that pixels
    # already globally foreground are never trimmed (a mask with no
    # captured background would otherwise be split down the middle).
    try:
        global_level = otsu_level(histogram256(equalized))
    except DegenerateHistogram:
        global_level = 255
    final_binary = np.zeros((h, w), dtype=bool)
    for i in range(1, stage5.max() + 1):
        m = stage5 == i
        if not m.any():
            continue
        hist = np.bincount(
            np.clip(np.rint(equalized[m] * 255.0), 0, 255).astype(np.int64),
            minlength=256,
        )
        try:
            t = min(otsu_level(hist), global_level)
        except DegenerateHistogram:
            final_binary |= m
            continue
        keep = m & binarize(equalized, t)
        final_binary |= keep if keep.any() else m
    if not final_binary.any():
        return _empty_result((h, w), "empty_foreground", snaps)
    final = splitmerge.distance_split(final_binary)
    stats = splitmerge.cluster_stats(final)
    final = splitmerge.compact_labels(
        splitmerge.merge_small(final, stats, cfg.merge_factor)
    )
    return SegmentationResult(
        labels=final,
        binary=final > 0,
        flags={
            "empty_foreground": False,
            "inverted": inverted,
            "non_converged_points": non_converged,
        },
        snapshots=snaps,
    )


@dataclass
class BatchItem:
    path: str
    result: SegmentationResult | None
    error: str | None


def segment_batch(paths, cfg: PipelineConfig | None = None) -> list[BatchItem]:
    """Segment many images; one failure never aborts the batch."""
    cfg = cfg or PipelineConfig()
    out: list[BatchItem] = []
    for path in paths:
        try:
            img = load_image(Path(path))
            res = segment(img, cfg)
            out.append(BatchItem(path=str(path), result=res, error=None))
        except (NeuronalgError, OSError) as exc:
            out.append(BatchItem(path=str(path), result=None, error=str(exc)))
    return out
