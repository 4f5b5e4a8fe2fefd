"""Synthetic image sets and training-batch assembly.

The stripe set is a family of oriented sinusoidal gratings: high-frequency
structure that survives bicubic degradation poorly, which makes it a quick
probe for detail-oriented training objectives.  Batch assembly crops
aligned low/high-resolution patch pairs and applies seeded flip/rotation
augmentation.
"""

import numpy as np

from .errors import ShapeError
from .resize import degrade

# mild per-channel gains keep the gratings colourful but luma-dominated
_CHANNEL_GAIN = np.array([0.95, 1.0, 0.85])


def stripe_image(size: int, angle: float, frequency: float,
                 phase: float = 0.0) -> np.ndarray:
    """One RGB grating: ``0.5 + 0.4 sin(2 pi f (x cos a + y sin a) + p)``."""
    if size < 1:
        raise ShapeError(f"size must be >= 1, got {size}")
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    t = xx * np.cos(angle) + yy * np.sin(angle)
    wave = 0.5 + 0.4 * np.sin(2.0 * np.pi * frequency * t + phase)
    img = wave[None, :, :] * _CHANNEL_GAIN[:, None, None]
    return np.clip(img, 0.0, 1.0)


def stripe_set(n_images: int, size: int, seed: int = 0) -> list:
    """Deterministic list of gratings covering orientations and frequencies."""
    if n_images < 1:
        raise ShapeError(f"n_images must be >= 1, got {n_images}")
    rng = np.random.default_rng(seed)
    images = []
    for i in range(n_images):
        angle = np.pi * i / n_images
        frequency = rng.uniform(0.15, 0.45)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        images.append(stripe_image(size, angle, frequency, phase))
    return images


def degrade_set(images, scale: int) -> list:
    return [degrade(img, scale) for img in images]


def random_crop_pair(lr: np.ndarray, hr: np.ndarray, lr_patch: int,
                     scale: int, rng) -> tuple:
    """Aligned random crop: ``lr_patch`` square from LR, scaled from HR."""
    c, lh, lw = lr.shape
    if hr.shape[1] != lh * scale or hr.shape[2] != lw * scale:
        raise ShapeError(
            f"pair mismatch: lr {lr.shape} vs hr {hr.shape} at scale {scale}"
        )
    if lr_patch > lh or lr_patch > lw:
        raise ShapeError(
            f"patch {lr_patch} exceeds low-resolution size {lh}x{lw}"
        )
    top = int(rng.integers(0, lh - lr_patch + 1))
    left = int(rng.integers(0, lw - lr_patch + 1))
    lr_crop = lr[:, top:top + lr_patch, left:left + lr_patch]
    hr_crop = hr[:, top * scale:(top + lr_patch) * scale,
                 left * scale:(left + lr_patch) * scale]
    return lr_crop, hr_crop


def augment_pair(lr: np.ndarray, hr: np.ndarray, rng) -> tuple:
    """Random horizontal/vertical flip and quarter-turn, same for both."""
    if rng.integers(0, 2):
        lr = lr[:, :, ::-1]
        hr = hr[:, :, ::-1]
    if rng.integers(0, 2):
        lr = lr[:, ::-1, :]
        hr = hr[:, ::-1, :]
    k = int(rng.integers(0, 4))
    if k:
        lr = np.rot90(lr, k, axes=(1, 2))
        hr = np.rot90(hr, k, axes=(1, 2))
    return np.ascontiguousarray(lr), np.ascontiguousarray(hr)


def sample_batch(pairs, batch: int, lr_patch: int, scale: int, rng,
                 augment: bool = True) -> tuple:
    """Stack ``batch`` random augmented crops from a list of (lr, hr) pairs."""
    if not pairs:
        raise ShapeError("no training pairs supplied")
    lrs, hrs = [], []
    for _ in range(batch):
        lr, hr = pairs[int(rng.integers(0, len(pairs)))]
        lr, hr = random_crop_pair(lr, hr, lr_patch, scale, rng)
        if augment:
            lr, hr = augment_pair(lr, hr, rng)
        lrs.append(lr)
        hrs.append(hr)
    return np.stack(lrs), np.stack(hrs)
