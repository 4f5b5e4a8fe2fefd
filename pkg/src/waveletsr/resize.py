"""Separable bicubic resampling with optional antialiasing.

Uses the Keys kernel (a = -0.5) with the half-pixel centre convention:
output sample ``i`` maps to input coordinate ``(i + 0.5) * in/out - 0.5``.
When shrinking with ``antialias`` the kernel is stretched by the scale
factor so it acts as a low-pass prefilter.  Edges replicate the border
sample and each output weight row is renormalized to sum to one, so
constant images are preserved exactly.
"""

import numpy as np

from .errors import ShapeError

_A = -0.5


def _cubic(t: np.ndarray) -> np.ndarray:
    t = np.abs(t)
    t2 = t * t
    t3 = t2 * t
    near = (_A + 2.0) * t3 - (_A + 3.0) * t2 + 1.0
    far = _A * t3 - 5.0 * _A * t2 + 8.0 * _A * t - 4.0 * _A
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _axis_weights(n_in: int, n_out: int, antialias: bool):
    """Sample indices and normalized weights for one resampled axis."""
    ratio = n_in / n_out
    stretch = max(ratio, 1.0) if antialias and ratio > 1.0 else 1.0
    support = 2.0 * stretch
    centers = (np.arange(n_out) + 0.5) * ratio - 0.5
    lo = np.floor(centers - support).astype(np.int64) + 1
    taps = int(np.ceil(2.0 * support)) + 1
    idx = lo[:, None] + np.arange(taps)[None, :]
    weights = _cubic((centers[:, None] - idx) / stretch)
    weights = weights / weights.sum(axis=1, keepdims=True)
    return idx.clip(0, n_in - 1), weights


def _resample_axis(img: np.ndarray, axis: int, n_out: int,
                   antialias: bool) -> np.ndarray:
    idx, weights = _axis_weights(img.shape[axis], n_out, antialias)
    moved = np.moveaxis(img, axis, -1)
    gathered = moved[..., idx]
    out = np.einsum("...ot,ot->...o", gathered, weights)
    return np.moveaxis(out, -1, axis)


def resize_bicubic(image, out_h: int, out_w: int,
                   antialias: bool = True) -> np.ndarray:
    """Resample ``(c, h, w)`` float data to ``(c, out_h, out_w)``."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ShapeError(f"expected (c, h, w) image data, got {image.shape}")
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"output size {out_h}x{out_w} must be positive")
    out = _resample_axis(image, 1, out_h, antialias)
    return _resample_axis(out, 2, out_w, antialias)


def degrade(image, scale: int) -> np.ndarray:
    """Antialiased bicubic downscale by an integer factor.

    The input height and width must be divisible by ``scale`` so the
    low-resolution image pairs exactly with the original.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ShapeError(f"expected (c, h, w) image data, got {image.shape}")
    if scale < 1:
        raise ShapeError(f"scale must be >= 1, got {scale}")
    c, h, w = image.shape
    if h % scale or w % scale:
        raise ShapeError(
            f"image {h}x{w} is not divisible by scale {scale}; crop it first"
        )
    return resize_bicubic(image, h // scale, w // scale, antialias=True)


def upscale_bicubic(image, scale: int) -> np.ndarray:
    """Plain bicubic upscale; the usual non-learned baseline."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ShapeError(f"expected (c, h, w) image data, got {image.shape}")
    if scale < 1:
        raise ShapeError(f"scale must be >= 1, got {scale}")
    c, h, w = image.shape
    return resize_bicubic(image, h * scale, w * scale, antialias=False)
