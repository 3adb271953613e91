"""L1, PSNR and SSIM between textures, optionally restricted to a mask.

Images are compared as floats in [0, 1]; PSNR uses a peak of 1.0 (the same
as 255 for 8-bit data). SSIM follows the usual parameterization: Rec.601
luma, 11x11 Gaussian window with sigma 1.5, K1 = 0.01, K2 = 0.03, L = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from .transfer import Texture

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
REC601 = (0.299, 0.587, 0.114)

# Optional perceptual metrics (e.g. LPIPS) keyed by report field name.
PERCEPTUAL_METRICS: dict[str, Callable] = {}


def register_metric(name: str, fn: Callable) -> None:
    """Add a metric ``fn(a, b, mask) -> float`` to every :func:`evaluate` report."""
    PERCEPTUAL_METRICS[name] = fn


def as_float(img) -> np.ndarray:
    if isinstance(img, Texture):
        return img.to_float()
    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        return arr / 255.0
    return arr.astype(np.float64, copy=False)


def _pair(a, b, mask):
    a, b = as_float(a), as_float(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[..., None], b[..., None]
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != a.shape[:2]:
            raise ValueError(f"mask shape {mask.shape} does not match image {a.shape[:2]}")
        if not mask.any():
            raise ValueError("mask is empty")
    return a, b, mask


def l1_distance(a, b, mask=None) -> float:
    a, b, mask = _pair(a, b, mask)
    diff = np.abs(a - b)
    if mask is not None:
        diff = diff[mask]
    return float(diff.mean())


def mse(a, b, mask=None) -> float:
    a, b, mask = _pair(a, b, mask)
    sq = (a - b) ** 2
    if mask is not None:
        sq = sq[mask]
    return float(sq.mean())


def psnr(a, b, mask=None) -> float:
    """10 log10(1 / MSE) in dB; ``inf`` for identical inputs."""
    err = mse(a, b, mask)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


def luma(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[..., 0]
    r, g, b = (img[..., k] for k in range(3))
    return REC601[0] * r + REC601[1] * g + REC601[2] * b


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian taps; the 2-D window is their outer product."""
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(img, taps):
    # Separable correlation, cropped to positions where the window fits.
    half = len(taps) // 2
    out = ndimage.correlate1d(img, taps, axis=0, mode="constant")
    out = ndimage.correlate1d(out, taps, axis=1, mode="constant")
    return out[half:-half or None, half:-half or None]


def ssim_map(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Local SSIM of two luma images at every window-complete center."""
    taps = gaussian_window()
    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2
    mu_x = _filter_valid(x, taps)
    mu_y = _filter_valid(y, taps)
    var_x = _filter_valid(x * x, taps) - mu_x * mu_x
    var_y = _filter_valid(y * y, taps) - mu_y * mu_y
    cov = _filter_valid(x * y, taps) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return num / den


def window_mask(mask: np.ndarray, size: int = SSIM_WINDOW) -> np.ndarray:
    """Centers (in valid-crop coordinates) whose whole window lies in ``mask``."""
    half = size // 2
    inside = ndimage.minimum_filter(mask.astype(np.uint8), size=size, mode="constant", cval=0)
    return inside[half:-half or None, half:-half or None].astype(bool)


def ssim(a, b, mask=None) -> float:
    a, b, mask = _pair(a, b, mask)
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    local = ssim_map(luma(a), luma(b))
    if mask is not None:
        keep = window_mask(mask)
        if not keep.any():
            raise ValueError("no SSIM window fits entirely inside the mask")
        local = local[keep]
    return float(local.mean())


@dataclass
class MetricsReport:
    l1: float
    ssim: float
    psnr: float
    mask_coverage: float = 1.0
    timings: dict = field(default_factory=dict)
    lpips: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.l1 >= 0.0):
            raise ValueError("l1 must be >= 0")
        if not (self.psnr >= 0.0):
            raise ValueError("psnr must be >= 0 or inf")
        if not (0.0 <= self.mask_coverage <= 1.0):
            raise ValueError("mask_coverage must lie in [0, 1]")

    def to_json(self) -> dict:
        doc = {
            "l1": self.l1,
            "ssim": self.ssim,
            "psnr": json_number(self.psnr),
            "mask_coverage": self.mask_coverage,
            "lpips": self.lpips,
        }
        doc.update(self.extra)
        if self.timings:
            doc["timings"] = dict(self.timings)
        return doc


def json_number(x: float):
    """JSON has no infinity; +inf is written as the string "inf"."""
    if math.isinf(x) and x > 0:
        return "inf"
    return x


def evaluate(a, b, mask=None, timings=None) -> MetricsReport:
    extra = {}
    lpips = None
    for name, fn in PERCEPTUAL_METRICS.items():
        value = float(fn(a, b, mask))
        if name == "lpips":
            lpips = value
        else:
            extra[name] = value
    coverage = 1.0 if mask is None else float(np.asarray(mask, dtype=bool).mean())
    return MetricsReport(
        l1=l1_distance(a, b, mask),
        ssim=ssim(a, b, mask),
        psnr=psnr(a, b, mask),
        mask_coverage=coverage,
        timings=dict(timings or {}),
        lpips=lpips,
        extra=extra,
    )
