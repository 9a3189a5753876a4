"""Marker extraction and Meyer's priority-flood watershed."""

from __future__ import annotations

import heapq

import numpy as np
from scipy import ndimage

from .errors import EmptyForeground, EmptyMarkers, ShapeError
from .image import as_gray

EIGHT = np.ones((3, 3), dtype=int)


def gradient_magnitude(img: np.ndarray) -> np.ndarray:
    """Sobel gradient magnitude with clamp-to-edge borders."""
    arr = as_gray(img)
    gx = ndimage.sobel(arr, axis=1, mode="nearest")
    gy = ndimage.sobel(arr, axis=0, mode="nearest")
    return np.hypot(gx, gy)


def label_components(mask: np.ndarray) -> np.ndarray:
    """8-connected component labeling of a binary mask."""
    labels, _ = ndimage.label(np.asarray(mask, dtype=bool), structure=EIGHT)
    return labels.astype(np.int32)


def extract_markers(smoothed: np.ndarray, foreground: np.ndarray) -> np.ndarray:
    """Markers = 8-connected regional maxima of the foreground distance map.

    Maxima below 0.3 x the global maximum distance are suppressed.
    """
    fg = np.asarray(foreground, dtype=bool)
    arr = as_gray(smoothed)
    if arr.shape != fg.shape:
        raise ShapeError(f"shape mismatch: {arr.shape} vs {fg.shape}")
    if not fg.any():
        raise EmptyForeground("foreground mask is empty")
    dist = ndimage.distance_transform_edt(fg)
    dmax = dist.max()
    local_max = dist >= ndimage.maximum_filter(dist, size=3, mode="constant")
    peaks = local_max & (dist >= 0.3 * dmax) & fg
    return label_components(peaks)


def meyer_flood(
    grad: np.ndarray,
    markers: np.ndarray,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient-priority flooding from markers (Meyer's watershed).

    Marker pixels keep their labels. Pixels are popped in order of
    ascending gradient with FIFO tie-break (row-major insertion order);
    a popped pixel takes the label of its labeled 4-neighbors if they all
    agree, otherwise it is a watershed-line pixel, resolved in a final
    pass to the adjacent basin whose seed pixel has the lowest gradient.
    If ``mask`` is given, flooding never leaves it.
    """
    g = as_gray(grad)
    mk = np.asarray(markers)
    if g.shape != mk.shape:
        raise ShapeError(f"shape mismatch: {g.shape} vs {mk.shape}")
    if not (mk > 0).any():
        raise EmptyMarkers("marker map has no nonzero labels")
    h, w = g.shape
    if mask is None:
        allowed = np.ones((h, w), dtype=bool)
    else:
        allowed = np.asarray(mask, dtype=bool)
        if allowed.shape != g.shape:
            raise ShapeError("mask shape mismatch")

    labels = np.where(allowed, mk, 0).astype(np.int32)
    queued = labels > 0
    heap: list[tuple[float, int, int, int]] = []
    counter = 0
    flat_g = g

    def push_neighbors(y: int, x: int) -> None:
        nonlocal counter
        for ny, nx in ((y - 1, x), (y, x - 1), (y, x + 1), (y + 1, x)):
            if 0 <= ny < h and 0 <= nx < w and allowed[ny, nx] and not queued[ny, nx]:
                queued[ny, nx] = True
                heapq.heappush(heap, (flat_g[ny, nx], counter, ny, nx))
                counter += 1

    for y, x in zip(*np.nonzero(labels)):
        push_neighbors(int(y), int(x))

    ridge: list[tuple[int, int]] = []
    while heap:
        _, _, y, x = heapq.heappop(heap)
        neigh = set()
        for ny, nx in ((y - 1, x), (y, x - 1), (y, x + 1), (y + 1, x)):
            if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] > 0:
                neigh.add(int(labels[ny, nx]))
        if len(neigh) == 1:
            labels[y, x] = neigh.pop()
        else:
            # disagreeing basins: watershed-line pixel, settled afterwards
            ridge.append((y, x))
        push_neighbors(y, x)

    # the paper keeps basins as filled regions; assign line pixels to the
    # neighboring basin of lowest gradient (row-major tie-break)
    while ridge:
        deferred: list[tuple[int, int]] = []
        progressed = False
        for y, x in ridge:
            best = None
            for ny, nx in ((y - 1, x), (y, x - 1), (y, x + 1), (y + 1, x)):
                if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] > 0:
                    key = (flat_g[ny, nx], ny, nx)
                    if best is None or key < best[0]:
                        best = (key, int(labels[ny, nx]))
            if best is not None:
                labels[y, x] = best[1]
                progressed = True
            else:
                deferred.append((y, x))
        if not progressed:
            break
        ridge = deferred
    return labels
