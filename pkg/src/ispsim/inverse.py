"""Reverse pipeline: undo quantization scale, gamma, gamut and color;
remosaic to Bayer; inject sensor noise; requantize.

Applied in the fixed order inv_gamma, inv_gamut, inv_color, remosaic,
noise, requantize (the exact reverse of the forward ISP order), this
approximates the RAW image a sensor would have produced for a given
processed RGB image.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from .config import InverseConfig
from .errors import ConfigError
from .image import BayerPattern, RawImage, RgbImage
from .profile import CameraProfile
from .quantizer import make_quantizer, quantize_array


def gamma_expand(img: RgbImage, scale: float, exponent: float) -> RgbImage:
    """Invert v -> A v**gamma: v -> clamp((v / A)**(1 / gamma))."""
    if scale <= 0:
        raise ValueError(f"gamma scale must be > 0, got {scale}")
    if not 0.0 < exponent <= 1.0:
        raise ValueError(f"gamma exponent must be in (0, 1], got {exponent}")
    out = np.power(np.clip(img.data / scale, 0.0, 1.0), 1.0 / exponent)
    return RgbImage(np.clip(out, 0.0, 1.0))


def inverse_gamut(img: RgbImage, strength: float) -> RgbImage:
    """Invert v -> v (1 - s v) / (1 - s) on [0, 1] via the quadratic formula."""
    if not 0.0 <= strength < 1.0:
        raise ValueError(f"gamut strength must be in [0, 1), got {strength}")
    if strength == 0.0:
        return img
    v = img.data
    disc = np.maximum(1.0 - 4.0 * strength * (1.0 - strength) * v, 0.0)
    out = (1.0 - np.sqrt(disc)) / (2.0 * strength)
    return RgbImage(np.clip(out, 0.0, 1.0))


def inverse_color_transform(img: RgbImage, matrix: np.ndarray) -> RgbImage:
    """Apply p -> clamp(M^-1 p) to every pixel."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"color matrix must be 3x3, got {m.shape}")
    if abs(np.linalg.det(m)) < 1e-12:
        raise ValueError("color matrix is singular")
    out = img.data @ np.linalg.inv(m).T
    return RgbImage(np.clip(out, 0.0, 1.0))


def remosaic(img: RgbImage, pattern: BayerPattern) -> RawImage:
    """Keep only the channel each Bayer site selects, producing a
    continuous-valued mosaic."""
    if img.height % 2 or img.width % 2:
        raise ValueError(
            f"remosaic needs even dimensions, got {img.height}x{img.width}"
        )
    cmap = pattern.channel_map(img.height, img.width)
    data = np.take_along_axis(img.data, cmap[:, :, None], axis=2)[:, :, 0]
    return RawImage(data, pattern=pattern, continuous=True)


def _noise_field(shape: tuple, seed: int) -> np.ndarray:
    """Standard-normal draws as a pure function of (seed, flat pixel index).

    A counter-based Philox stream keyed by the seed yields one 64-bit word
    per index; each word maps through the normal quantile function. Results
    are independent of evaluation order or thread count.
    """
    n = int(np.prod(shape))
    rng = np.random.Generator(np.random.Philox(key=seed))
    words = rng.integers(0, 2**64, size=n, dtype=np.uint64)
    uniforms = (words.astype(np.float64) + 0.5) * 2.0**-64
    return ndtri(uniforms).reshape(shape)


def inject_noise(raw: RawImage, a: float, b: float, seed: int) -> RawImage:
    """Add clamped, signal-dependent Gaussian noise with variance a*v + b.

    The same seed always reproduces the same output bitwise.
    """
    if a < 0 or b < 0:
        raise ValueError("noise coefficients must be non-negative")
    if a == 0 and b == 0:
        return raw
    data = noisy_samples(raw.data, a, b, seed)
    return RawImage(
        data, pattern=raw.pattern, bit_depth=raw.bit_depth, continuous=True
    )


def noisy_samples(values: np.ndarray, a: float, b: float, seed: int) -> np.ndarray:
    """Core of inject_noise, usable on any intensity array."""
    sigma = np.sqrt(a * values + b)
    return np.clip(values + sigma * _noise_field(values.shape, seed), 0.0, 1.0)


def requantize(raw: RawImage, target_bits: int) -> RawImage:
    """Snap samples to 2**target_bits uniform levels over [0, 1]."""
    spec = make_quantizer("linear", target_bits)
    return RawImage(
        quantize_array(raw.data, spec),
        pattern=raw.pattern,
        bit_depth=target_bits,
        continuous=False,
    )


def apply_inverse_stages(
    img: RgbImage, profile: CameraProfile, config: InverseConfig
):
    """Apply enabled inverse stages in fixed order.

    Returns a RawImage when remosaic is enabled, otherwise an RgbImage
    (noise and requantize then act per RGB sample).
    """
    current: RgbImage | RawImage = img
    if config.has("inv_gamma"):
        current = gamma_expand(current, profile.gamma_scale, profile.gamma_exponent)
    if config.has("inv_gamut"):
        current = inverse_gamut(current, profile.gamut_strength)
    if config.has("inv_color"):
        current = inverse_color_transform(current, profile.color_matrix)
    if config.has("remosaic"):
        current = remosaic(current, profile.pattern)
    if config.has("noise"):
        seed = config.seed if config.seed is not None else 0
        if isinstance(current, RawImage):
            current = inject_noise(current, profile.noise_a, profile.noise_b, seed)
        else:
            current = RgbImage(
                noisy_samples(current.data, profile.noise_a, profile.noise_b, seed)
            )
    if config.has("requantize"):
        if config.target_bits > profile.native_bit_depth:
            raise ConfigError(
                f"requantize target ({config.target_bits} bits) exceeds the "
                f"profile's native depth ({profile.native_bit_depth} bits)"
            )
        if isinstance(current, RawImage):
            current = requantize(current, config.target_bits)
        else:
            spec = make_quantizer("linear", config.target_bits)
            current = RgbImage(quantize_array(current.data, spec))
    return current


def run_inverse(
    img: RgbImage, profile: CameraProfile, config: InverseConfig
) -> RawImage:
    """Convert a processed RGB image into an approximate RAW image.

    Requesting a RawImage requires the remosaic stage; use
    apply_inverse_stages for RGB-form partial pipelines.
    """
    if not config.has("remosaic"):
        raise ConfigError(
            "run_inverse produces a RawImage, which requires the remosaic stage; "
            "use apply_inverse_stages for RGB-form pipelines"
        )
    result = apply_inverse_stages(img, profile, config)
    assert isinstance(result, RawImage)
    return result
