"""Reconstruction losses built on subband decompositions.

The training objective combines a pixel-space L1 term with a weighted L1
penalty on the stationary wavelet subbands of the luma channel.  Both the
loss value and its (sub)gradient are computed analytically: the subband
transform is linear, so the chain rule reduces to sign maps pushed through
the transform adjoint.  ``sign(0)`` is taken to be 0 throughout.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .wavelet import (SUPPORTED_FILTERS, SubbandPyramid, make_filter,
                      swt_adjoint, swt_forward)

# ITU-R BT.601 luma weights for 8-bit studio range, scaled to [0, 1] inputs.
_Y_WEIGHTS = np.array([65.481, 128.553, 24.966]) / 255.0
_Y_OFFSET = 16.0 / 255.0


def rgb_to_y(image: np.ndarray) -> np.ndarray:
    """Convert a batch of RGB images to the BT.601 luma channel.

    Expects ``(batch, 3, height, width)`` with values nominally in [0, 1];
    inputs are clipped to that range first.  Returns
    ``(batch, 1, height, width)`` with values in [16/255, 235/255].
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 4 or image.shape[1] != 3:
        raise ShapeError(
            f"expected an RGB batch shaped (b, 3, h, w), got {image.shape}"
        )
    clipped = np.clip(image, 0.0, 1.0)
    y = np.einsum("bchw,c->bhw", clipped, _Y_WEIGHTS) + _Y_OFFSET
    return y[:, None, :, :]


def _rgb_to_y_vjp(image: np.ndarray, grad_y: np.ndarray) -> np.ndarray:
    """Pull a luma-space gradient back to RGB space.

    The clip to [0, 1] zeroes the gradient wherever the input sits outside
    the open interval; at exactly 0 or 1 the subgradient 0 is used.
    """
    inside = (image > 0.0) & (image < 1.0)
    grad = grad_y[:, 0, :, :][:, None, :, :] * _Y_WEIGHTS[None, :, None, None]
    return grad * inside


@dataclass(frozen=True)
class LossConfig:
    """Weights and transform settings for the combined objective.

    ``lambdas`` holds one weight per subband, ordered to match the
    decomposition output (deepest lowpass first, then detail triples from
    the deepest level up).  ``use_y`` selects whether the subband term sees
    the luma channel (default) or each RGB channel independently.
    """

    filter_name: str = "sym19"
    levels: int = 1
    lambdas: tuple = field(default_factory=lambda: (0.05, 0.05, 0.05, 0.05))
    use_y: bool = True

    def __post_init__(self):
        if self.filter_name not in SUPPORTED_FILTERS:
            raise ConfigError(
                f"unknown filter {self.filter_name!r}; "
                f"supported: {', '.join(SUPPORTED_FILTERS)}"
            )
        if self.levels < 1:
            raise ConfigError(f"levels must be >= 1, got {self.levels}")
        expected = 3 * self.levels + 1
        lambdas = tuple(float(v) for v in self.lambdas)
        if len(lambdas) != expected:
            raise ConfigError(
                f"need {expected} subband weights for {self.levels} level(s), "
                f"got {len(lambdas)}"
            )
        if any(v < 0 for v in lambdas):
            raise ConfigError("subband weights must be non-negative")
        object.__setattr__(self, "lambdas", lambdas)

    def to_dict(self) -> dict:
        return {
            "filter": self.filter_name,
            "levels": self.levels,
            "lambda": list(self.lambdas),
            "use_y": self.use_y,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "LossConfig":
        known = {"filter", "levels", "lambda", "use_y"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(
                f"unknown loss config keys: {', '.join(sorted(extra))}; "
                f"known keys: {', '.join(sorted(known))}"
            )
        kwargs = {}
        if "filter" in raw:
            kwargs["filter_name"] = raw["filter"]
        if "levels" in raw:
            kwargs["levels"] = int(raw["levels"])
        if "lambda" in raw:
            kwargs["lambdas"] = tuple(raw["lambda"])
        if "use_y" in raw:
            kwargs["use_y"] = bool(raw["use_y"])
        return cls(**kwargs)


def uniform_config(filter_name: str = "sym19", levels: int = 1,
                   weight: float = 0.05, use_y: bool = True) -> LossConfig:
    """All subbands weighted equally (the default training setting)."""
    return LossConfig(filter_name, levels,
                      tuple([weight] * (3 * levels + 1)), use_y)


def lowhigh_emphasis_config(filter_name: str = "sym19",
                            use_y: bool = True) -> LossConfig:
    """Single-level preset favouring the lowpass and diagonal subbands."""
    return LossConfig(filter_name, 1, (0.05, 0.01, 0.01, 0.05), use_y)


def _check_pair(x: np.ndarray, y: np.ndarray):
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.ndim != 4:
        raise ShapeError(f"expected (b, c, h, w) batches, got {x.shape}")


def l1_rgb(x: np.ndarray, y: np.ndarray) -> float:
    """Mean absolute error over every element of the batch."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_pair(x, y)
    return float(np.mean(np.abs(x - y)))


def _subband_planes(x: np.ndarray, config: LossConfig) -> np.ndarray:
    """Reduce the batch to the planes the subband term decomposes."""
    if config.use_y:
        return rgb_to_y(x)
    b, c, h, w = x.shape
    return np.asarray(x, dtype=np.float64).reshape(b * c, 1, h, w)


def subband_losses(x: np.ndarray, y: np.ndarray,
                   config: LossConfig) -> list:
    """Per-subband mean absolute differences, in pyramid order."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_pair(x, y)
    fb = make_filter(config.filter_name)
    px = swt_forward(_subband_planes(x, config), fb, config.levels)
    py = swt_forward(_subband_planes(y, config), fb, config.levels)
    return [float(np.mean(np.abs(a - b)))
            for a, b in zip(px.subbands, py.subbands)]


def swt_loss(x: np.ndarray, y: np.ndarray, config: LossConfig) -> float:
    """Weighted L1 distance between subband pyramids.

    Each subband contributes its mean absolute difference scaled by the
    matching weight; the mean runs over batch and pixels, so the batch
    expectation is built in.  All-zero weights short-circuit to 0.
    """
    if not any(config.lambdas):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        _check_pair(x, y)
        return 0.0
    per_band = subband_losses(x, y, config)
    return float(sum(lam * v for lam, v in zip(config.lambdas, per_band)))


def total_loss(x: np.ndarray, y: np.ndarray, config: LossConfig) -> float:
    """Pixel L1 plus the weighted subband term."""
    return l1_rgb(x, y) + swt_loss(x, y, config)


def total_loss_grad(x: np.ndarray, y: np.ndarray,
                    config: LossConfig) -> np.ndarray:
    """Analytic (sub)gradient of ``total_loss`` with respect to ``x``.

    The pixel term contributes ``sign(x - y) / x.size``.  The subband term
    pushes per-band sign maps (scaled by weight over band size) through the
    transform adjoint and, when operating on luma, through the conversion
    Jacobian.  Identical inputs produce an exactly zero gradient.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_pair(x, y)
    grad = np.sign(x - y) / x.size
    if not any(config.lambdas):
        return grad

    fb = make_filter(config.filter_name)
    px = swt_forward(_subband_planes(x, config), fb, config.levels)
    py = swt_forward(_subband_planes(y, config), fb, config.levels)
    cotangent = SubbandPyramid(
        levels=config.levels,
        filter_name=fb.name,
        subbands=[
            lam * np.sign(a - b) / a.size
            for lam, a, b in zip(config.lambdas, px.subbands, py.subbands)
        ],
    )
    back = swt_adjoint(cotangent, fb)
    if config.use_y:
        grad = grad + _rgb_to_y_vjp(x, back)
    else:
        grad = grad + back.reshape(x.shape)
    return grad
