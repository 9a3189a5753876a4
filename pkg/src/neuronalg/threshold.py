"""Otsu histogram thresholding and binarization."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateHistogram
from .image import as_gray, quantize256


def otsu_level(hist: np.ndarray) -> int:
    """Threshold level in 0..255 maximizing between-class variance.

    Among equal maxima the smallest level is returned so results are
    identical across platforms.
    """
    counts = np.asarray(hist, dtype=np.float64)
    if counts.shape != (256,):
        raise DegenerateHistogram(f"expected 256 bins, got shape {counts.shape}")
    if np.count_nonzero(counts) < 2:
        raise DegenerateHistogram("histogram needs at least two occupied bins")
    total = counts.sum()
    levels = np.arange(256, dtype=np.float64)
    # class 0 = levels <= t, class 1 = levels > t
    w0 = np.cumsum(counts)
    sum0 = np.cumsum(counts * levels)
    w1 = total - w0
    mu0 = np.divide(sum0, w0, out=np.zeros(256), where=w0 > 0)
    mu1 = np.divide(sum0[-1] - sum0, w1, out=np.zeros(256), where=w1 > 0)
    var_between = w0 * w1 * (mu0 - mu1) ** 2
    var_between[w1 == 0] = -np.inf  # no split beyond the last occupied bin
    return int(np.argmax(var_between))


def class_separability(hist: np.ndarray, level: int) -> float:
    """Otsu's effectiveness measure: between-class / total variance in [0, 1].

    Values near 1 indicate a clearly bimodal histogram; low values mean the
    split at `level` separates nothing meaningful.
    """
    counts = np.asarray(hist, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    levels = np.arange(256, dtype=np.float64)
    mu = float((p * levels).sum())
    var_total = float((p * (levels - mu) ** 2).sum())
    if var_total == 0.0:
        return 0.0
    w0 = float(p[: level + 1].sum())
    w1 = 1.0 - w0
    if w0 == 0.0 or w1 == 0.0:
        return 0.0
    mu0 = float((p[: level + 1] * levels[: level + 1]).sum()) / w0
    mu1 = float((p[level + 1 :] * levels[level + 1 :]).sum()) / w1
    return w0 * w1 * (mu0 - mu1) ** 2 / var_total


def binarize(img: np.ndarray, level: int) -> np.ndarray:
    """Foreground = pixels whose 256-level quantization strictly exceeds level."""
    return quantize256(as_gray(img)) > level
