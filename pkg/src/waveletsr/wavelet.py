"""Stationary (undecimated, a trous) 2-D wavelet transform.

Every level produces four full-resolution subbands by separable periodic
filtering; level ``l`` uses the base filters dilated by inserting
``2**(l-1) - 1`` zeros between taps, and level ``l+1`` decomposes the
level-``l`` low-pass plane.  Periodic extension makes the transform exactly
shift-equivariant and perfectly invertible, and with orthonormal filters
one level is a tight frame with constant 4, so the adjoint doubles as the
inverse up to that scale factor.

Analysis uses true convolution (kernel flipped relative to
cross-correlation); synthesis and the adjoint use correlation with the
same decomposition filters, which coincides with convolution by the
time-reversed reconstruction filters at the alignment that cancels the
analysis delay.

Subband labels read "XY" with X the filter applied along the height axis
and Y along the width axis, e.g. LH = low-pass over rows, high-pass over
columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import ConfigError, DataFormatError, ShapeError

SUPPORTED_FILTERS = ("haar", "sym2", "sym4", "sym8", "sym19")

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class FilterBank:
    """Analysis/synthesis filter quadruple of an orthonormal wavelet."""

    name: str
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray

    def __len__(self):
        return len(self.dec_lo)


@dataclass
class SubbandPyramid:
    """Ordered SWT subbands, deepest LL first, all at source resolution.

    ``subbands`` holds ``[LL_L, LH_L, HL_L, HH_L, ..., LH_1, HL_1, HH_1]``
    for an L-level decomposition: 3L + 1 planes in total.
    """

    levels: int
    filter_name: str
    subbands: list[np.ndarray]

    def __len__(self):
        return len(self.subbands)

    @property
    def labels(self) -> list[str]:
        return subband_labels(self.levels)


def subband_labels(levels: int) -> list[str]:
    """Names matching the pyramid order, e.g. LL2, LH2, ..., HH1."""
    if levels == 1:
        return ["LL", "LH", "HL", "HH"]
    out = [f"LL{levels}"]
    for lev in range(levels, 0, -1):
        out += [f"LH{lev}", f"HL{lev}", f"HH{lev}"]
    return out


@lru_cache(maxsize=None)
def _load_dec_lo(name: str) -> tuple[float, ...]:
    try:
        text = (resources.files("waveletsr") / "filters" / f"{name}.txt").read_text()
    except FileNotFoundError as exc:
        raise DataFormatError(f"missing coefficient table for {name!r}") from exc
    values = tuple(float(line) for line in text.split())
    if not values:
        raise DataFormatError(f"empty coefficient table for {name!r}")
    return values


def make_filter(name: str) -> FilterBank:
    """Load a filter bank by name and validate its defining identities.

    The shipped tables store only the low-pass analysis filter; the
    high-pass is derived by the quadrature-mirror relation
    ``dec_hi[k] = (-1)**k * dec_lo[L-1-k]`` and the reconstruction pair by
    time reversal.
    """
    if name not in SUPPORTED_FILTERS:
        raise ConfigError(
            f"unknown filter {name!r}; supported filters: {', '.join(SUPPORTED_FILTERS)}"
        )
    dec_lo = np.array(_load_dec_lo(name), dtype=np.float64)
    L = dec_lo.size
    if L % 2 != 0:
        raise DataFormatError(f"{name}: filter length {L} is odd")
    if abs(dec_lo.sum() - _SQRT2) > 1e-10:
        raise DataFormatError(f"{name}: coefficient sum {dec_lo.sum()!r} != sqrt(2)")
    if abs((dec_lo * dec_lo).sum() - 1.0) > 1e-10:
        raise DataFormatError(f"{name}: squared sum {(dec_lo**2).sum()!r} != 1")
    for m in range(1, L // 2):
        if abs(np.dot(dec_lo[: L - 2 * m], dec_lo[2 * m:])) > 1e-10:
            raise DataFormatError(f"{name}: double-shift orthogonality fails at lag {2 * m}")
    signs = (-1.0) ** np.arange(L)
    dec_hi = signs * dec_lo[::-1]
    return FilterBank(
        name=name,
        dec_lo=dec_lo,
        dec_hi=dec_hi,
        rec_lo=dec_lo[::-1].copy(),
        rec_hi=dec_hi[::-1].copy(),
    )


# ---- periodic separable filtering -------------------------------------------


def _filter_axis(x: np.ndarray, taps: np.ndarray, dilation: int, axis: int,
                 adjoint: bool) -> np.ndarray:
    """Circular filtering along one axis with an a-trous-dilated filter.

    Forward (``adjoint=False``) computes true convolution
    ``y[n] = sum_k f[k] x[(n - k*d) mod N]``; the adjoint flips the index
    sign, which is circular correlation by the same taps.
    """
    out = np.zeros_like(x)
    sign = -1 if adjoint else 1
    n = x.shape[axis]
    for k, c in enumerate(taps):
        out += c * np.roll(x, sign * (k * dilation) % n, axis=axis)
    return out


def _normalize_image(image) -> tuple[np.ndarray, bool]:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr[None, None], True
    if arr.ndim == 4:
        if arr.shape[1] != 1:
            raise ShapeError(
                f"expected a 1-channel image, got {arr.shape[1]} channels; "
                "extract the luma channel first"
            )
        return arr, False
    raise ShapeError(f"expected (h, w) or (b, 1, h, w), got shape {arr.shape}")


def _analyze(plane: np.ndarray, fb: FilterBank, dilation: int):
    lo_h = _filter_axis(plane, fb.dec_lo, dilation, -2, adjoint=False)
    hi_h = _filter_axis(plane, fb.dec_hi, dilation, -2, adjoint=False)
    ll = _filter_axis(lo_h, fb.dec_lo, dilation, -1, adjoint=False)
    lh = _filter_axis(lo_h, fb.dec_hi, dilation, -1, adjoint=False)
    hl = _filter_axis(hi_h, fb.dec_lo, dilation, -1, adjoint=False)
    hh = _filter_axis(hi_h, fb.dec_hi, dilation, -1, adjoint=False)
    return ll, lh, hl, hh


def _synthesize(ll, lh, hl, hh, fb: FilterBank, dilation: int) -> np.ndarray:
    acc = _filter_axis(_filter_axis(ll, fb.dec_lo, dilation, -1, adjoint=True),
                       fb.dec_lo, dilation, -2, adjoint=True)
    acc += _filter_axis(_filter_axis(lh, fb.dec_hi, dilation, -1, adjoint=True),
                        fb.dec_lo, dilation, -2, adjoint=True)
    acc += _filter_axis(_filter_axis(hl, fb.dec_lo, dilation, -1, adjoint=True),
                        fb.dec_hi, dilation, -2, adjoint=True)
    acc += _filter_axis(_filter_axis(hh, fb.dec_hi, dilation, -1, adjoint=True),
                        fb.dec_hi, dilation, -2, adjoint=True)
    return acc


def swt_forward(image, fb: FilterBank, levels: int) -> SubbandPyramid:
    """Decompose a 1-channel image into 3*levels + 1 full-size subbands."""
    if levels < 1:
        raise ConfigError(f"levels must be >= 1, got {levels}")
    arr, _ = _normalize_image(image)
    ll = arr
    details: list[list[np.ndarray]] = []
    for lev in range(1, levels + 1):
        ll, lh, hl, hh = _analyze(ll, fb, 2 ** (lev - 1))
        details.append([lh, hl, hh])
    subbands = [ll]
    for lev in range(levels - 1, -1, -1):
        subbands.extend(details[lev])
    return SubbandPyramid(levels=levels, filter_name=fb.name, subbands=subbands)


def _check_pyramid(pyramid: SubbandPyramid) -> None:
    expected = 3 * pyramid.levels + 1
    if len(pyramid.subbands) != expected:
        raise ShapeError(
            f"{pyramid.levels}-level pyramid must hold {expected} subbands, "
            f"got {len(pyramid.subbands)}"
        )
    shape = pyramid.subbands[0].shape
    for i, band in enumerate(pyramid.subbands):
        if band.shape != shape:
            raise ShapeError(f"subband {i} shape {band.shape} != {shape}")


def _resynthesize(pyramid: SubbandPyramid, fb: FilterBank, scale_per_level: float) -> np.ndarray:
    _check_pyramid(pyramid)
    ll = np.asarray(pyramid.subbands[0], dtype=np.float64)
    idx = 1
    for lev in range(pyramid.levels, 0, -1):
        lh, hl, hh = (np.asarray(pyramid.subbands[idx + i], dtype=np.float64) for i in range(3))
        idx += 3
        ll = scale_per_level * _synthesize(ll, lh, hl, hh, fb, 2 ** (lev - 1))
    return ll


def swt_inverse(pyramid: SubbandPyramid, fb: FilterBank) -> np.ndarray:
    """Reconstruct the image; exact inverse of :func:`swt_forward`.

    One level applies a quarter of the synthesis filtering (the transform
    is a tight frame with redundancy 4); deeper levels recurse from the
    deepest LL plane.
    """
    return _resynthesize(pyramid, fb, 0.25)


def swt_adjoint(pyramid: SubbandPyramid, fb: FilterBank) -> np.ndarray:
    """Apply the transpose of the analysis operator to a pyramid.

    Satisfies ``<swt_forward(x), p> = <x, swt_adjoint(p)>``; this carries
    subband-domain cotangents back to pixel space.
    """
    return _resynthesize(pyramid, fb, 1.0)
