"""Core raster types and intensity operations.

All images are numpy arrays with float64 intensities in [0, 1]:

* gray image  -- shape (H, W)
* RGB image   -- shape (H, W, 3)
* binary mask -- shape (H, W), dtype bool
* label map   -- shape (H, W), dtype int32, 0 = background

8-bit and 16-bit files are rescaled to [0, 1] on load.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import (
    CalibrationError,
    InvalidParameter,
    InvalidPolicy,
    IoError,
    ShapeError,
)

PSNR_CAP = 100.0

# Rec.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


class ChannelPolicy(enum.Enum):
    LUMINANCE = "luminance"
    RED = "red"
    GREEN = "green"
    BLUE = "blue"
    ALREADY_GRAY = "already_gray"


@dataclass(frozen=True)
class ScaleFactor:
    """Size-derived scale used by the stimulation fields.

    sf is (height + width) / 2220 and sd is the even integer nearest to
    10 * sf (ties rounded up), never below 2.
    """

    sf: float
    sd: int

    @classmethod
    def from_shape(cls, height: int, width: int) -> "ScaleFactor":
        sf = (height + width) / 2220.0
        # nearest even integer to 10*sf; at ties (odd integers) round up
        sd = 2 * math.floor(10.0 * sf / 2.0 + 0.5)
        sd = max(2, sd)
        return cls(sf=sf, sd=sd)


def as_gray(img) -> np.ndarray:
    """Validate and return a 2D float gray image."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"expected non-empty 2D gray image, got shape {arr.shape}")
    return arr


def extract_intensity(img, policy: ChannelPolicy) -> np.ndarray:
    """Project an RGB or gray image to a single intensity channel."""
    arr = np.asarray(img, dtype=np.float64)
    if policy is ChannelPolicy.ALREADY_GRAY:
        if arr.ndim != 2:
            raise InvalidPolicy("ALREADY_GRAY requires a 2D gray image")
        return arr.copy()
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidPolicy(f"policy {policy.value} requires an RGB image")
    if policy is ChannelPolicy.RED:
        return arr[:, :, 0].copy()
    if policy is ChannelPolicy.GREEN:
        return arr[:, :, 1].copy()
    if policy is ChannelPolicy.BLUE:
        return arr[:, :, 2].copy()
    return arr @ _LUMA


def quantize256(img: np.ndarray) -> np.ndarray:
    """Map [0,1] intensities onto integer levels 0..255 by rounding."""
    return np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.int64)


def histogram256(img: np.ndarray) -> np.ndarray:
    """256-bin histogram of the quantized image."""
    return np.bincount(quantize256(img).ravel(), minlength=256)


def equalize(img: np.ndarray) -> np.ndarray:
    """Global 256-level histogram equalization with a monotone mapping."""
    arr = as_gray(img)
    levels = quantize256(arr)
    hist = np.bincount(levels.ravel(), minlength=256)
    occupied = np.nonzero(hist)[0]
    if occupied.size <= 1:
        return arr.copy()
    cdf = np.cumsum(hist)
    cdf_min = cdf[occupied[0]]
    total = cdf[-1]
    lut = np.rint(255.0 * (cdf - cdf_min) / (total - cdf_min)) / 255.0
    return lut[levels]


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, int(math.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian convolution with clamp-to-edge padding."""
    if sigma < 0:
        raise InvalidParameter(f"sigma must be >= 0, got {sigma}")
    arr = as_gray(img)
    if sigma == 0:
        return arr.copy()
    k = _gaussian_kernel(sigma)
    out = ndimage.correlate1d(arr, k, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, k, axis=1, mode="nearest")
    return out


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB with peak 1.0, capped at 100."""
    ref = as_gray(reference)
    tst = as_gray(test)
    if ref.shape != tst.shape:
        raise ShapeError(f"shape mismatch: {ref.shape} vs {tst.shape}")
    mse = float(np.mean((ref - tst) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def add_noise_to_psnr(img: np.ndarray, target: float, seed: int) -> np.ndarray:
    """Add zero-mean Gaussian noise calibrated to a target PSNR.

    The unit noise field is drawn once from the seed and only its scale is
    adjusted, so identical (img, target, seed) triples are bit-identical.
    A target of 100 dB returns the input unchanged.
    """
    arr = as_gray(img)
    if not (0.0 < target <= PSNR_CAP):
        raise InvalidParameter(f"target PSNR must be in (0, 100], got {target}")
    if target == PSNR_CAP:
        return arr.copy()
    rng = np.random.default_rng(seed)
    unit = rng.standard_normal(arr.shape)

    def measured(sigma: float) -> float:
        return psnr(arr, np.clip(arr + sigma * unit, 0.0, 1.0))

    # without clamping, sigma0 hits the target exactly; clamping only
    # raises PSNR, so the root lies in [sigma0, +inf)
    sigma0 = math.sqrt(10.0 ** (-target / 10.0))
    lo, hi = sigma0 / 16.0, sigma0
    for _ in range(50):
        if measured(hi) <= target:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise CalibrationError(f"no bracketing noise scale for {target} dB")
    sigma = hi
    for _ in range(50):
        sigma = 0.5 * (lo + hi)
        got = measured(sigma)
        if abs(got - target) <= 0.1:
            return np.clip(arr + sigma * unit, 0.0, 1.0)
        if got > target:
            lo = sigma
        else:
            hi = sigma
    raise CalibrationError(f"calibration did not converge for {target} dB")


def load_image(path) -> np.ndarray:
    """Load a PNG/JPEG/TIFF raster as float in [0,1] (gray 2D or RGB 3D)."""
    try:
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64)
                return arr / 65535.0
            if im.mode in ("RGB", "RGBA", "P"):
                arr = np.asarray(im.convert("RGB"), dtype=np.float64)
                return arr / 255.0
            arr = np.asarray(im.convert("L"), dtype=np.float64)
            return arr / 255.0
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot read image {path}: {exc}") from exc


def save_gray(path, img: np.ndarray) -> None:
    """Write a [0,1] gray image as 8-bit PNG."""
    data = quantize256(as_gray(img)).astype(np.uint8)
    Image.fromarray(data, mode="L").save(Path(path))


def save_labels(path, labels: np.ndarray) -> None:
    """Write a label map as 16-bit grayscale PNG (pixel value = label id)."""
    arr = np.asarray(labels)
    if arr.max(initial=0) > 65535:
        raise InvalidParameter("more than 65535 labels cannot be stored as 16-bit PNG")
    Image.fromarray(arr.astype(np.uint16)).save(Path(path))


def save_mask(path, mask: np.ndarray) -> None:
    """Write a binary mask as 8-bit PNG (255 = foreground)."""
    data = (np.asarray(mask, dtype=bool) * np.uint8(255))
    Image.fromarray(data, mode="L").save(Path(path))
