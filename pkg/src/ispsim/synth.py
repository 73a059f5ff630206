"""Deterministic synthetic test scenes.

The package ships no photographs; these generators make smooth RGB scenes
(linear gradients, Gaussian blobs, blurred patch charts) used by the test
suite and handy for trying the CLI. Values stay inside [lo, hi] to keep
clear of the clamping boundaries.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .image import RgbImage


def _rescale(data: np.ndarray, lo: float, hi: float) -> np.ndarray:
    dmin, dmax = float(np.min(data)), float(np.max(data))
    if dmax == dmin:
        return np.full_like(data, 0.5 * (lo + hi))
    return lo + (hi - lo) * (data - dmin) / (dmax - dmin)


def gradient_image(
    height: int, width: int, angle: float = 0.0, lo: float = 0.05, hi: float = 0.95
) -> RgbImage:
    """Linear ramp along `angle` radians, with offset phases per channel."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    t = np.cos(angle) * xx / max(width - 1, 1) + np.sin(angle) * yy / max(height - 1, 1)
    data = np.stack(
        [_rescale(t, lo, hi), _rescale(0.5 * t + 0.25, lo, hi), _rescale(1.0 - t, lo, hi)],
        axis=2,
    )
    return RgbImage(data)


def gaussian_blobs(
    height: int,
    width: int,
    count: int = 4,
    seed: int = 0,
    lo: float = 0.05,
    hi: float = 0.95,
) -> RgbImage:
    """Sum of smooth Gaussian bumps with per-channel amplitudes."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    data = np.zeros((height, width, 3))
    for _ in range(count):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        sigma = rng.uniform(0.15, 0.35) * min(height, width)
        bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
        data += bump[:, :, None] * rng.uniform(0.2, 1.0, size=3)
    return RgbImage(_rescale(data, lo, hi))


def patch_chart(
    height: int,
    width: int,
    rows: int = 4,
    cols: int = 6,
    seed: int = 0,
    blur_sigma: float = 2.5,
    lo: float = 0.05,
    hi: float = 0.95,
) -> RgbImage:
    """Color-checker style grid of patches, Gaussian-blurred so the scene
    stays smooth at patch boundaries."""
    rng = np.random.default_rng(seed)
    patches = rng.uniform(0.0, 1.0, size=(rows, cols, 3))
    ys = np.minimum(np.arange(height) * rows // height, rows - 1)
    xs = np.minimum(np.arange(width) * cols // width, cols - 1)
    data = patches[ys[:, None], xs[None, :]]
    if blur_sigma > 0:
        data = gaussian_filter(data, sigma=(blur_sigma, blur_sigma, 0), mode="nearest")
    return RgbImage(_rescale(data, lo, hi))


def make_test_scenes(count: int, height: int = 64, width: int = 64, seed: int = 0):
    """A deterministic mix of gradients, blobs and blurred charts."""
    scenes = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            scenes.append(gradient_image(height, width, angle=0.35 * i))
        elif kind == 1:
            scenes.append(gaussian_blobs(height, width, count=3 + i % 3, seed=seed + i))
        else:
            scenes.append(patch_chart(height, width, seed=seed + i))
    return scenes
