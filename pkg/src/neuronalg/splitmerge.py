"""Area-statistics split and merge passes plus the distance-transform split."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyForeground, EmptyLabelMap, InvalidParameter, UnknownLabel
from .image import as_gray, quantize256
from .threshold import otsu_level
from .watershed import EIGHT, label_components, meyer_flood

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterStats:
    areas: dict[int, int]
    a_avg: float


@dataclass(frozen=True)
class SplitPlan:
    label: int
    r: float
    k: int


def cluster_stats(lm: np.ndarray) -> ClusterStats:
    """Per-label pixel counts and their arithmetic mean."""
    labels = np.asarray(lm)
    counts = np.bincount(labels.ravel())
    ids = np.nonzero(counts)[0]
    ids = ids[ids > 0]
    if ids.size == 0:
        raise EmptyLabelMap("label map has no labels")
    areas = {int(i): int(counts[i]) for i in ids}
    return ClusterStats(areas=areas, a_avg=sum(areas.values()) / len(areas))


def plan_splits(stats: ClusterStats, split_factor: float) -> list[SplitPlan]:
    """One split plan per label whose area exceeds split_factor x the mean.

    The subcluster count is the area ratio rounded half-up, floored at 2.
    """
    if split_factor <= 1:
        raise InvalidParameter("split_factor must be > 1")
    plans = []
    for label in sorted(stats.areas):
        area = stats.areas[label]
        if area > split_factor * stats.a_avg:
            r = area / stats.a_avg
            k = max(2, int(np.floor(r + 0.5)))
            plans.append(SplitPlan(label=label, r=r, k=k))
    return plans


def _boundary_lengths(
    labels: np.ndarray, target: np.ndarray, eight: bool = False
) -> dict[int, int]:
    """Shared boundary length between `target` pixels and each other label."""
    lengths: dict[int, int] = {}
    h, w = labels.shape
    ys, xs = np.nonzero(target)
    if eight:
        offsets = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    else:
        offsets = [(-1, 0), (0, -1), (0, 1), (1, 0)]
    for y, x in zip(ys, xs):
        for dy, dx in offsets:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w:
                lab = int(labels[ny, nx])
                if lab > 0 and not target[ny, nx]:
                    lengths[lab] = lengths.get(lab, 0) + 1
    return lengths


def _absorb_fragments(labels: np.ndarray, region: np.ndarray) -> None:
    """Make every label inside `region` one 8-connected component.

    Fragments beyond each label's largest component are absorbed into the
    adjacent region label sharing the longest boundary.
    """
    while True:
        moved = False
        for lab in np.unique(labels[region]):
            if lab <= 0:
                continue
            part = (labels == lab) & region
            comps, n = ndimage.label(part, structure=EIGHT)
            if n <= 1:
                continue
            sizes = ndimage.sum_labels(np.ones_like(comps), comps, index=range(1, n + 1))
            keep = int(np.argmax(sizes)) + 1
            for ci in range(1, n + 1):
                if ci == keep:
                    continue
                frag = comps == ci
                neigh = _boundary_lengths(labels, frag, eight=True)
                neigh.pop(int(lab), None)
                if neigh:
                    best = max(sorted(neigh), key=lambda b: neigh[b])
                    labels[frag] = best
                    moved = True
        if not moved:
            return


def split_cluster(
    img: np.ndarray, lm: np.ndarray, plan: SplitPlan, max_depth: int = 8
) -> np.ndarray:
    """Split one cluster into 2..k connected sublabels via recursive Otsu.

    The largest current fragment is bisected on its restricted intensity
    histogram; low-side pixels join the nearest bright core. The split
    stops early when a fragment becomes intensity-degenerate. Pixels
    outside the cluster are untouched.
    """
    gray = as_gray(img)
    labels = np.asarray(lm).astype(np.int32).copy()
    region = labels == plan.label
    if not region.any():
        raise UnknownLabel(f"label {plan.label} not in map")
    q = quantize256(gray)

    pieces: list[np.ndarray] = [region]
    for _ in range(max_depth):
        if len(pieces) >= plan.k:
            break
        order = np.argsort([-p.sum() for p in pieces], kind="stable")
        piece = pieces[int(order[0])]
        hist = np.bincount(q[piece], minlength=256)
        if np.count_nonzero(hist) < 2:
            log.debug("split of label %d stopped: degenerate histogram", plan.label)
            break
        level = otsu_level(hist)
        fg = piece & (q > level)
        cores, n_cores = ndimage.label(fg, structure=EIGHT)
        if n_cores == 0:
            break
        # attach every dim pixel of the piece to the nearest bright core
        _, (iy, ix) = ndimage.distance_transform_edt(~fg, return_indices=True)
        assigned = np.where(piece, cores[iy, ix], 0)
        sub = [(assigned == ci) for ci in range(1, n_cores + 1)]
        if n_cores == 1:
            break  # single core: no separation gained
        pieces.pop(int(order[0]))
        pieces.extend(sub)

    if len(pieces) <= 1:
        return labels

    # cap at k: fold the smallest pieces into their largest sibling
    pieces.sort(key=lambda p: -int(p.sum()))
    while len(pieces) > plan.k:
        extra = pieces.pop()
        pieces[0] = pieces[0] | extra

    next_label = int(labels.max()) + 1
    for i, piece in enumerate(pieces):
        if i == 0:
            labels[piece] = plan.label
        else:
            labels[piece] = next_label
            next_label += 1
    _absorb_fragments(labels, region)
    return labels


def merge_small(lm: np.ndarray, stats: ClusterStats, merge_factor: float) -> np.ndarray:
    """Absorb labels smaller than merge_factor x the mean area.

    Each undersized label joins the adjacent label sharing the longest
    boundary; undersized labels with no labeled neighbor are dropped to
    background.
    """
    if not (0 < merge_factor < 1):
        raise InvalidParameter("merge_factor must be in (0, 1)")
    labels = np.asarray(lm).astype(np.int32).copy()
    cutoff = merge_factor * stats.a_avg
    small = sorted(
        (lab for lab, area in stats.areas.items() if area < cutoff),
        key=lambda lab: (stats.areas[lab], lab),
    )
    for lab in small:
        part = labels == lab
        if not part.any():
            continue
        neigh = _boundary_lengths(labels, part)
        if neigh:
            best = max(sorted(neigh), key=lambda b: neigh[b])
            labels[part] = best
        else:
            labels[part] = 0
    return labels


def compact_labels(lm: np.ndarray) -> np.ndarray:
    """Renumber labels into the contiguous set {1..K}, order-preserving."""
    labels = np.asarray(lm)
    ids = np.unique(labels)
    ids = ids[ids > 0]
    lut = np.zeros(int(labels.max(initial=0)) + 1, dtype=np.int32)
    lut[ids] = np.arange(1, ids.size + 1, dtype=np.int32)
    return lut[labels]


def split_merge_pass(img: np.ndarray, lm: np.ndarray, cfg) -> np.ndarray:
    """One split pass over all oversized clusters followed by one merge pass."""
    labels = np.asarray(lm).astype(np.int32)
    stats = cluster_stats(labels)
    max_depth = getattr(cfg, "max_recursion_depth", 8)
    for plan in plan_splits(stats, cfg.split_factor):
        labels = split_cluster(img, labels, plan, max_depth=max_depth)
    stats = cluster_stats(labels)
    labels = merge_small(labels, stats, cfg.merge_factor)
    return compact_labels(labels)


def _distance_markers(dist: np.ndarray, domain: np.ndarray) -> np.ndarray:
    """Suppressed regional maxima of a distance map, 8-connected labels."""
    local_max = dist >= ndimage.maximum_filter(dist, size=3, mode="constant")
    peaks = local_max & (dist >= 0.3 * dist.max()) & domain
    return label_components(peaks)


def distance_split(mask: np.ndarray) -> np.ndarray:
    """Partition a mask into instances seeded at distance-transform maxima."""
    fg = np.asarray(mask, dtype=bool)
    if not fg.any():
        raise EmptyForeground("mask is empty")
    dist = ndimage.distance_transform_edt(fg)
    markers = _distance_markers(dist, fg)
    labels = meyer_flood(-dist, markers, mask=fg)
    # components whose maxima were globally suppressed keep their own label
    missing = fg & (labels == 0)
    if missing.any():
        extra = label_components(missing)
        labels = labels + np.where(extra > 0, extra + labels.max(), 0).astype(np.int32)
    return compact_labels(labels)
