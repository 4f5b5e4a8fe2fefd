"""Image quality metrics for super-resolution evaluation.

Images are float64 arrays in [0, 1], shaped ``(c, h, w)`` or
``(b, c, h, w)``.  Both metrics support cropping a border (scale-sized by
convention, to discard boundary effects) and evaluating on the luma
channel instead of RGB.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError
from .loss import rgb_to_y

PSNR_CAP = 99.0

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_C1 = 1e-4
_SSIM_C2 = 9e-4


def _ssim_kernel() -> np.ndarray:
    half = (_SSIM_WINDOW - 1) / 2.0
    t = np.arange(_SSIM_WINDOW) - half
    g = np.exp(-(t[:, None] ** 2 + t[None, :] ** 2) / (2.0 * _SSIM_SIGMA ** 2))
    return g / g.sum()


_KERNEL = _ssim_kernel()


def _prepare(x, y, crop: int, on_y: bool) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.ndim == 3:
        x = x[None]
        y = y[None]
    if x.ndim != 4:
        raise ShapeError(f"expected (c, h, w) or (b, c, h, w), got {x.shape}")
    if on_y:
        x = rgb_to_y(x)
        y = rgb_to_y(y)
    if crop < 0:
        raise ShapeError(f"crop must be >= 0, got {crop}")
    if crop:
        if 2 * crop >= min(x.shape[2], x.shape[3]):
            raise ShapeError(
                f"crop {crop} leaves no pixels in a {x.shape[2]}x{x.shape[3]} image"
            )
        x = x[:, :, crop:-crop, crop:-crop]
        y = y[:, :, crop:-crop, crop:-crop]
    return x, y


def psnr(x, y, crop: int = 0, on_y: bool = False) -> float:
    """Peak signal-to-noise ratio in dB against a unit peak, capped at 99.

    Identical inputs report exactly the cap rather than infinity.
    """
    x, y = _prepare(x, y, crop, on_y)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def ssim(x, y, crop: int = 0, on_y: bool = False) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows.

    Uses the standard Gaussian window (sigma 1.5) and stability constants
    1e-4 and 9e-4 for a unit dynamic range.  No padding: only windows fully
    inside the image contribute.  Multi-channel inputs are averaged over
    channels.
    """
    x, y = _prepare(x, y, crop, on_y)
    b, c, h, w = x.shape
    if h < _SSIM_WINDOW or w < _SSIM_WINDOW:
        raise ShapeError(
            f"image {h}x{w} is smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} window"
        )
    vals = []
    for bi in range(b):
        for ci in range(c):
            vals.append(_ssim_plane(x[bi, ci], y[bi, ci]))
    return float(np.mean(vals))


def _local_mean(plane: np.ndarray) -> np.ndarray:
    windows = sliding_window_view(plane, (_SSIM_WINDOW, _SSIM_WINDOW))
    return np.einsum("ijuv,uv->ij", windows, _KERNEL)


def _ssim_plane(x: np.ndarray, y: np.ndarray) -> float:
    mu_x = _local_mean(x)
    mu_y = _local_mean(y)
    xx = _local_mean(x * x) - mu_x * mu_x
    yy = _local_mean(y * y) - mu_y * mu_y
    xy = _local_mean(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + _SSIM_C1) * (2.0 * xy + _SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + _SSIM_C1) * (xx + yy + _SSIM_C2)
    return float(np.mean(num / den))


@dataclass
class MetricReport:
    """Per-image and aggregate scores for one evaluation run."""

    names: list = field(default_factory=list)
    psnr_values: list = field(default_factory=list)
    ssim_values: list = field(default_factory=list)
    crop: int = 0
    on_y: bool = False

    def add(self, name: str, psnr_value: float, ssim_value: float):
        self.names.append(name)
        self.psnr_values.append(float(psnr_value))
        self.ssim_values.append(float(ssim_value))

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.psnr_values)) if self.psnr_values else float("nan")

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim_values)) if self.ssim_values else float("nan")

    def to_dict(self) -> dict:
        return {
            "crop": self.crop,
            "on_y": self.on_y,
            "images": [
                {"name": n, "psnr": p, "ssim": s}
                for n, p, s in zip(self.names, self.psnr_values, self.ssim_values)
            ],
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
        }
