"""Pixel-level evaluation metrics, dataset loaders, and the PSNR noise sweep.

Aggregation convention: dataset-level scores are the unweighted mean of
per-image scores. Every emitted report records this in its header.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from PIL import Image

from .errors import (
    DatasetFormatError,
    EmptyDataset,
    InvalidParameter,
    IoError,
    ShapeError,
)
from .image import (
    ChannelPolicy,
    add_noise_to_psnr,
    as_gray,
    extract_intensity,
    load_image,
)
from .pipeline import PipelineConfig, segment

log = logging.getLogger(__name__)

METRIC_NAMES = ("iou", "f1", "accuracy", "sensitivity", "specificity")


@dataclass(frozen=True)
class Confusion:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(pred: np.ndarray, gt: np.ndarray) -> Confusion:
    """Pixelwise true/false positive/negative counts."""
    p = np.asarray(pred, dtype=bool)
    g = np.asarray(gt, dtype=bool)
    if p.shape != g.shape:
        raise ShapeError(f"shape mismatch: {p.shape} vs {g.shape}")
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = int(np.count_nonzero(~p & ~g))
    return Confusion(tp=tp, tn=tn, fp=fp, fn=fn)


def iou(c: Confusion) -> float:
    denom = c.tp + c.fp + c.fn
    return c.tp / denom if denom else 1.0


def f1(c: Confusion) -> float:
    denom = 2 * c.tp + c.fp + c.fn
    return 2 * c.tp / denom if denom else 1.0


def accuracy(c: Confusion) -> float:
    return (c.tp + c.tn) / c.total


def sensitivity(c: Confusion) -> float:
    denom = c.tp + c.fn
    return c.tp / denom if denom else 1.0


def specificity(c: Confusion) -> float:
    denom = c.tn + c.fp
    return c.tn / denom if denom else 1.0


def all_metrics(c: Confusion) -> dict[str, float]:
    return {
        "iou": iou(c),
        "f1": f1(c),
        "accuracy": accuracy(c),
        "sensitivity": sensitivity(c),
        "specificity": specificity(c),
    }


@dataclass
class DatasetEntry:
    name: str
    image: np.ndarray
    gt_mask: np.ndarray
    gt_labels: np.ndarray
    channel_policy: ChannelPolicy = ChannelPolicy.LUMINANCE


def _parse_label_text(path: Path, height: int, width: int) -> np.ndarray:
    """Parse a text ground-truth file into a label map.

    Two layouts are accepted:
      * a whitespace-separated matrix of integer labels, one image row per
        text line, 0 meaning background;
      * sparse "x y label" triples, one pixel per line (label optional,
        defaults to 1); lines starting with '#' are skipped.
    """
    lines = [
        ln for ln in path.read_text(encoding="utf-8").splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise DatasetFormatError(f"{path}: empty ground-truth file")
    rows = [ln.split() for ln in lines]
    widths = {len(r) for r in rows}
    if len(lines) == height and widths == {width}:
        try:
            labels = np.array([[int(v) for v in r] for r in rows], dtype=np.int32)
        except ValueError as exc:
            raise DatasetFormatError(f"{path}: non-integer matrix entry") from exc
        if (labels < 0).any():
            raise DatasetFormatError(f"{path}: negative label")
        return labels
    if widths <= {2, 3}:
        labels = np.zeros((height, width), dtype=np.int32)
        for r in rows:
            try:
                x, y = int(r[0]), int(r[1])
                lab = int(r[2]) if len(r) == 3 else 1
            except ValueError as exc:
                raise DatasetFormatError(f"{path}: bad triple {r!r}") from exc
            if not (0 <= x < width and 0 <= y < height) or lab < 0:
                raise DatasetFormatError(f"{path}: out-of-range pixel {r!r}")
            labels[y, x] = lab
        return labels
    raise DatasetFormatError(f"{path}: unrecognized ground-truth layout")


_IMAGE_EXTS = (".png", ".tif", ".tiff", ".jpg", ".jpeg", ".bmp")


def _find_gt(img_path: Path, exts) -> Path | None:
    for ext in exts:
        for cand in (
            img_path.with_suffix(ext),
            img_path.parent / f"{img_path.stem}_gt{ext}",
            img_path.parent / "gt" / f"{img_path.stem}{ext}",
            img_path.parent.parent / "gt" / f"{img_path.stem}{ext}",
        ):
            if cand != img_path and cand.is_file():
                return cand
    return None


def load_dataset(root, kind: str) -> list[DatasetEntry]:
    """Load one of the three benchmark layouts.

    kinds:
      * ``neuroblastoma``: grayscale images, text ground truth
        (see ``_parse_label_text`` for the accepted formats);
      * ``nucleusseg``: RGB images (blue channel forced), mask-image GT;
      * ``isbi2009``: grayscale images, mask-image GT.

    A malformed entry is skipped and reported; it never aborts the load.
    """
    root = Path(root)
    if kind not in ("neuroblastoma", "nucleusseg", "isbi2009"):
        raise InvalidParameter(f"unknown dataset kind {kind!r}")
    if not root.is_dir():
        raise DatasetFormatError(f"dataset root {root} does not exist")
    img_dir = root / "images" if (root / "images").is_dir() else root
    paths = sorted(
        p for p in img_dir.iterdir()
        if p.suffix.lower() in _IMAGE_EXTS and p.is_file()
    )
    entries: list[DatasetEntry] = []
    for p in paths:
        try:
            img = load_image(p)
            h, w = as_gray(np.atleast_3d(img)[..., 0]).shape
            if kind == "neuroblastoma":
                gt_path = _find_gt(p, (".txt",))
                if gt_path is None:
                    raise DatasetFormatError(f"{p}: no ground-truth text file")
                gt_labels = _parse_label_text(gt_path, h, w)
                policy = ChannelPolicy.LUMINANCE
            else:
                gt_path = _find_gt(p, _IMAGE_EXTS)
                if gt_path is None:
                    raise DatasetFormatError(f"{p}: no ground-truth mask image")
                gt_img = as_gray(load_image(gt_path))
                if gt_img.shape != (h, w):
                    raise ShapeError(f"{p}: ground truth shape {gt_img.shape} != {(h, w)}")
                gt_labels = (gt_img > 0).astype(np.int32)
                policy = ChannelPolicy.BLUE if kind == "nucleusseg" else ChannelPolicy.LUMINANCE
            entries.append(
                DatasetEntry(
                    name=p.stem,
                    image=img,
                    gt_mask=gt_labels > 0,
                    gt_labels=gt_labels,
                    channel_policy=policy,
                )
            )
        except (DatasetFormatError, ShapeError, IoError, OSError) as exc:
            log.error("skipping %s: %s", p, exc)
    if not entries:
        warnings.warn(f"dataset {root} ({kind}): no usable entries", stacklevel=2)
    return entries


@dataclass
class MetricsReport:
    dataset: str
    levels: list[float]
    aggregation: str = "unweighted mean of per-image metrics"
    # per_image[level][metric] is the list of per-image scores
    per_image: dict = field(default_factory=dict)
    means: dict = field(default_factory=dict)
    entry_names: list[str] = field(default_factory=list)

    def table(self, metric: str) -> list[float]:
        """One table row: the mean score at each noise level, in order."""
        return [self.means[lv][metric] for lv in self.levels]

    def to_json_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "aggregation": self.aggregation,
            "entries": self.entry_names,
            "levels_db": self.levels,
            "tables": {
                m: {
                    "mean": self.table(m),
                    "per_image": [self.per_image[lv][m] for lv in self.levels],
                }
                for m in METRIC_NAMES
            },
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)

    def write_csv(self, out_dir) -> list[Path]:
        """One CSV per metric: a single algorithm row, one column per level."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for m in METRIC_NAMES:
            path = out_dir / f"{self.dataset}_{m}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                wr = csv.writer(fh)
                wr.writerow(["method"] + [f"psnr_{lv:g}" for lv in self.levels])
                wr.writerow(["NeuronalAlg"] + [f"{v:.6f}" for v in self.table(m)])
            written.append(path)
        return written


def _overlay(image: np.ndarray, pred: np.ndarray) -> np.ndarray:
    """Prediction boundary drawn in red over the grayscale input."""
    g = np.clip(as_gray(np.atleast_3d(image)[..., 0]), 0, 1)
    p = np.asarray(pred, dtype=bool)
    pad = np.pad(p, 1, mode="constant")
    interior = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    edge = p & ~interior
    rgb = np.stack([g, g, g], axis=-1)
    rgb[edge] = [1.0, 0.0, 0.0]
    return rgb


def save_overlay(path, image: np.ndarray, pred: np.ndarray) -> None:
    rgb = _overlay(image, pred)
    data = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(Path(path))


def noise_sweep(
    entries: list[DatasetEntry],
    levels: list[float],
    cfg: PipelineConfig | None = None,
    seed: int = 0,
    dataset: str = "dataset",
    overlay_dir=None,
) -> MetricsReport:
    """Segment every entry at every PSNR level and tabulate the five metrics.

    Noise seeds derive deterministically from (seed, level index, entry
    index), so reruns with the same seed are byte-identical.
    """
    if not entries:
        raise EmptyDataset("no dataset entries to evaluate")
    if not levels:
        raise InvalidParameter("levels must be non-empty")
    cfg = cfg or PipelineConfig()
    report = MetricsReport(
        dataset=dataset,
        levels=list(levels),
        entry_names=[e.name for e in entries],
    )
    for li, level in enumerate(levels):
        scores: dict[str, list[float]] = {m: [] for m in METRIC_NAMES}
        for ei, entry in enumerate(entries):
            if entry.image.ndim == 2:
                gray = extract_intensity(entry.image, ChannelPolicy.ALREADY_GRAY)
            else:
                gray = extract_intensity(entry.image, entry.channel_policy)
            gray = np.clip(as_gray(gray), 0.0, 1.0)
            noisy = add_noise_to_psnr(gray, level, seed=seed * 100003 + li * 1009 + ei)
            res = segment(noisy, cfg)
            c = confusion(res.binary, entry.gt_mask)
            for m, v in all_metrics(c).items():
                scores[m].append(v)
            if overlay_dir is not None:
                out = Path(overlay_dir)
                out.mkdir(parents=True, exist_ok=True)
                save_overlay(out / f"{entry.name}_psnr{level:g}.png", noisy, res.binary)
        report.per_image[level] = scores
        report.means[level] = {m: float(np.mean(v)) for m, v in scores.items()}
    return report
