"""Radial 30-bin contour extraction and polygon rasterization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRegion

N_BINS = 30
BIN_ANGLES = 2.0 * np.pi * (np.arange(N_BINS) + 0.5) / N_BINS


@dataclass
class RadialContour:
    """30 polar boundary samples (fixed angle grid) around an object center.

    center is (x, y) in real pixel coordinates; radii[b] pairs with the
    fixed angle BIN_ANGLES[b].
    """

    center: tuple[float, float]
    radii: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS))

    def points(self) -> np.ndarray:
        """Cartesian (x, y) vertices of the 30-gon."""
        xs = self.center[0] + self.radii * np.cos(BIN_ANGLES)
        ys = self.center[1] + self.radii * np.sin(BIN_ANGLES)
        return np.stack([xs, ys], axis=1)


def centroid(mask: np.ndarray) -> tuple[float, float]:
    """Arithmetic mean (x, y) of the foreground pixel coordinates."""
    fg = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(fg)
    if ys.size == 0:
        raise EmptyRegion("mask has no foreground pixels")
    return float(xs.mean()), float(ys.mean())


def _boundary_pixels(fg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Foreground pixels 4-adjacent to background (image border counts)."""
    pad = np.pad(fg, 1, mode="constant")
    interior = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    return np.nonzero(fg & ~interior)


def radial_contour(mask: np.ndarray, center: tuple[float, float]) -> RadialContour:
    """Mean boundary radius per angular bin; empty bins are interpolated.

    Boundary pixels are binned by their angle from the center; a bin's
    radius is the mean center distance of its pixels. Bins with no pixels
    are filled by circular linear interpolation between occupied bins.
    """
    fg = np.asarray(mask, dtype=bool)
    ys, xs = _boundary_pixels(fg)
    if ys.size == 0:
        raise EmptyRegion("mask has no foreground pixels")
    cx, cy = center
    dx = xs - cx
    dy = ys - cy
    angles = np.mod(np.arctan2(dy, dx), 2.0 * np.pi)
    bins = np.minimum((angles * N_BINS / (2.0 * np.pi)).astype(int), N_BINS - 1)
    dist = np.hypot(dx, dy)
    radii = np.full(N_BINS, np.nan)
    for b in range(N_BINS):
        sel = bins == b
        if sel.any():
            radii[b] = dist[sel].mean()
    occupied = np.nonzero(~np.isnan(radii))[0]
    if occupied.size == 0:
        raise EmptyRegion("no occupied radial bins")
    if occupied.size < N_BINS:
        radii = _interpolate_circular(radii, occupied)
    return RadialContour(center=(cx, cy), radii=radii)


def _interpolate_circular(radii: np.ndarray, occupied: np.ndarray) -> np.ndarray:
    out = radii.copy()
    if occupied.size == 1:
        out[:] = radii[occupied[0]]
        return out
    for b in range(N_BINS):
        if not np.isnan(out[b]):
            continue
        # nearest occupied bins on either side, circularly
        before = occupied[occupied < b]
        after = occupied[occupied > b]
        left = before[-1] if before.size else occupied[-1] - N_BINS
        right = after[0] if after.size else occupied[0] + N_BINS
        rl = radii[left % N_BINS]
        rr = radii[right % N_BINS]
        t = (b - left) / (right - left)
        out[b] = rl + t * (rr - rl)
    return out


def contour_to_mask(c: RadialContour, width: int, height: int) -> np.ndarray:
    """Rasterize the closed 30-gon by even-odd scanline fill.

    Vertices are clamped into the image. A degenerate (zero-area) contour
    marks the single pixel nearest the center.
    """
    pts = c.points()
    pts[:, 0] = np.clip(pts[:, 0], 0, width - 1)
    pts[:, 1] = np.clip(pts[:, 1], 0, height - 1)
    mask = np.zeros((height, width), dtype=bool)
    x0 = pts[:, 0]
    y0 = pts[:, 1]
    x1 = np.roll(x0, -1)
    y1 = np.roll(y0, -1)
    ymin = max(0, int(np.floor(y0.min())))
    ymax = min(height - 1, int(np.ceil(y0.max())))
    for y in range(ymin, ymax + 1):
        # even-odd crossings of the horizontal line through the pixel row
        cond = (y0 <= y) != (y1 <= y)
        if not cond.any():
            continue
        t = (y - y0[cond]) / (y1[cond] - y0[cond])
        xs = np.sort(x0[cond] + t * (x1[cond] - x0[cond]))
        for i in range(0, xs.size - 1, 2):
            lo = int(np.ceil(xs[i] - 1e-9))
            hi = int(np.floor(xs[i + 1] + 1e-9))
            if hi >= lo:
                mask[y, max(0, lo) : min(width, hi + 1)] = True
    if not mask.any():
        px = int(np.clip(round(c.center[0]), 0, width - 1))
        py = int(np.clip(round(c.center[1]), 0, height - 1))
        mask[py, px] = True
    return mask
