"""Forward ISP stages: denoise, demosaic, color transform, gamut map,
gamma compression, quantization.

Stages run in a fixed canonical order; any subset may be enabled. Every
stage maps [0, 1] samples to [0, 1] samples and is a pure function.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import correlate2d

from .config import ISP_STAGE_ORDER, PipelineConfig, StageDescriptor
from .errors import ConfigError
from .image import BayerPattern, RawImage, RgbImage
from .profile import CameraProfile
from .quantizer import QuantizerSpec, make_quantizer, quantize_array

# Offsets scanned for nearest-neighbor demosaicing, nearest distance class
# first, lexicographic (row, col) within a class to fix tie-breaking.
_NN_OFFSETS = (
    (0, 0),
    (-1, 0), (0, -1), (0, 1), (1, 0),
    (-1, -1), (-1, 1), (1, -1), (1, 1),
)

DEMOSAIC_METHODS = ("bilinear", "nearest_neighbor", "subsample")


def _patch_kernel(patch: int) -> np.ndarray:
    """Normalized Gaussian weights over a patch, sigma = patch_radius / 2."""
    f = patch // 2
    if f == 0:
        return np.ones((1, 1))
    ax = np.arange(-f, f + 1, dtype=np.float64)
    sigma = f / 2.0
    g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma**2))
    return g / g.sum()


def nlm_filter(data: np.ndarray, strength: float, patch: int, window: int) -> np.ndarray:
    """Non-local-means on an (H, W, C) array.

    The distance between two pixels is the Gaussian-weighted mean, over
    patch offsets and channels, of squared sample differences; patches
    replicate out-of-image samples. Each output pixel is the
    exp(-d2 / strength**2)-weighted average over its search window, with
    the window clipped to the image.
    """
    if strength < 0:
        raise ValueError(f"strength must be >= 0, got {strength}")
    if patch % 2 == 0 or window % 2 == 0:
        raise ValueError(f"patch and window must be odd, got {patch}, {window}")
    height, width = data.shape[:2]
    if not patch <= window <= min(height, width):
        raise ValueError(
            f"need patch <= window <= min(H, W), got {patch}, {window}, "
            f"min dim {min(height, width)}"
        )
    if strength == 0:
        return data.copy()

    f, r = patch // 2, window // 2
    pad = f + r
    padded = np.pad(data, ((pad, pad), (pad, pad), (0, 0)), mode="edge")
    kernel = _patch_kernel(patch)
    inv_h2 = 1.0 / (strength * strength)

    num = np.zeros_like(data)
    den = np.zeros((height, width))
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            # squared differences on the patch-support slab around the image
            a = padded[pad - f : pad + height + f, pad - f : pad + width + f]
            b = padded[
                pad - f + dy : pad + height + f + dy,
                pad - f + dx : pad + width + f + dx,
            ]
            sqdiff = np.mean((a - b) ** 2, axis=2)
            d2 = correlate2d(sqdiff, kernel, mode="valid")
            w = np.exp(-d2 * inv_h2)
            y0, y1 = max(0, -dy), height - max(0, dy)
            x0, x1 = max(0, -dx), width - max(0, dx)
            wv = w[y0:y1, x0:x1]
            num[y0:y1, x0:x1] += wv[..., None] * data[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
            den[y0:y1, x0:x1] += wv
    return num / den[..., None]


def denoise(img: RgbImage, strength: float, patch: int = 3, window: int = 7) -> RgbImage:
    """Non-local-means denoising; strength 0 returns the input unchanged."""
    out = nlm_filter(img.data, strength, patch, window)
    return RgbImage(np.clip(out, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Demosaicing
# ---------------------------------------------------------------------------

def _padded_channel_map(pattern: BayerPattern, height: int, width: int) -> np.ndarray:
    """Channel indices for a mosaic padded by one pixel on each side."""
    rows = (np.arange(-1, height + 1)[:, None]) % 2
    cols = (np.arange(-1, width + 1)[None, :]) % 2
    return pattern.tile[rows, cols]


_RING_OFFSETS = (
    (-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1),
)


def _demosaic_bilinear(raw: RawImage) -> np.ndarray:
    """Fill each missing channel with the mean of its nearest same-channel
    neighbors; a one-pixel phase-preserving border replicates the nearest
    same-channel samples.

    On a Bayer grid the nearest same-channel sites of a missing channel are
    exactly that channel's sites in the 8-neighbor ring, so one masked ring
    sum per channel covers the cross, pair and diagonal cases.
    """
    height, width = raw.height, raw.width
    padded = np.pad(raw.data, 1, mode="reflect")
    cmap = _padded_channel_map(raw.pattern, height, width)
    core = np.s_[1 : height + 1, 1 : width + 1]
    out = np.empty((height, width, 3))
    for c in range(3):
        mask = (cmap == c).astype(np.float64)
        sites = padded * mask
        num = np.zeros((height, width))
        den = np.zeros((height, width))
        for dy, dx in _RING_OFFSETS:
            shifted = np.s_[1 + dy : height + 1 + dy, 1 + dx : width + 1 + dx]
            num += sites[shifted]
            den += mask[shifted]
        own = mask[core] > 0
        out[:, :, c] = np.where(own, padded[core], num / np.where(own, 1.0, den))
    return out


def _demosaic_nearest(raw: RawImage) -> np.ndarray:
    """Copy each missing channel from the nearest same-channel site; ties
    break toward the smaller row, then the smaller column."""
    height, width = raw.height, raw.width
    cmap = raw.pattern.channel_map(height, width)
    out = np.empty((height, width, 3))
    for c in range(3):
        assigned = np.zeros((height, width), dtype=bool)
        plane = np.zeros((height, width))
        for dy, dx in _NN_OFFSETS:
            y0, y1 = max(0, -dy), height - max(0, dy)
            x0, x1 = max(0, -dx), width - max(0, dx)
            src = np.s_[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
            dst = np.s_[y0:y1, x0:x1]
            take = (cmap[src] == c) & ~assigned[dst]
            plane[dst] = np.where(take, raw.data[src], plane[dst])
            assigned[dst] |= take
        out[:, :, c] = plane
    return out


def _demosaic_subsample(raw: RawImage) -> np.ndarray:
    """Collapse each 2x2 Bayer tile into one RGB pixel, dropping the green
    that shares a row with blue."""
    tile = raw.pattern.tile
    r_pos = raw.pattern.site_of(0)[0]
    b_pos = raw.pattern.site_of(2)[0]
    g_pos = next(p for p in raw.pattern.site_of(1) if p[0] != b_pos[0])
    out = np.empty((raw.height // 2, raw.width // 2, 3))
    for c, (pr, pc) in ((0, r_pos), (1, g_pos), (2, b_pos)):
        out[:, :, c] = raw.data[pr::2, pc::2]
    return out


def demosaic(raw: RawImage, method: str = "bilinear") -> RgbImage:
    """Reconstruct RGB from a Bayer mosaic.

    bilinear and nearest_neighbor preserve dimensions; subsample halves
    each dimension.
    """
    if method == "bilinear":
        data = _demosaic_bilinear(raw)
    elif method == "nearest_neighbor":
        data = _demosaic_nearest(raw)
    elif method == "subsample":
        data = _demosaic_subsample(raw)
    else:
        raise ValueError(
            f"unknown demosaic method {method!r}; choose from {DEMOSAIC_METHODS}"
        )
    return RgbImage(np.clip(data, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Per-pixel color stages
# ---------------------------------------------------------------------------

def color_transform(img: RgbImage, matrix: np.ndarray) -> RgbImage:
    """Apply p -> clamp(M p) to every pixel."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError("color matrix must be a finite 3x3 matrix")
    out = img.data @ m.T
    return RgbImage(np.clip(out, 0.0, 1.0))


def gamut_map(img: RgbImage, strength: float) -> RgbImage:
    """Soft gamut compression v -> v (1 - s v) / (1 - s), fixing 0 and 1.

    Strictly increasing on [0, 1] for s <= 0.5; s in [0.5, 1) still admits
    a closed-form inverse but folds the top of the range.
    """
    if not 0.0 <= strength < 1.0:
        raise ValueError(f"gamut strength must be in [0, 1), got {strength}")
    v = img.data
    out = v * (1.0 - strength * v) / (1.0 - strength)
    return RgbImage(np.clip(out, 0.0, 1.0))


def gamma_compress(img: RgbImage, scale: float, exponent: float) -> RgbImage:
    """Tone-map each channel with v -> clamp(A v**gamma)."""
    if scale <= 0:
        raise ValueError(f"gamma scale must be > 0, got {scale}")
    if not 0.0 < exponent <= 1.0:
        raise ValueError(f"gamma exponent must be in (0, 1], got {exponent}")
    out = scale * np.power(img.data, exponent)
    return RgbImage(np.clip(out, 0.0, 1.0))


def quantize_image(img, spec: QuantizerSpec):
    """Snap every sample of an RgbImage or RawImage to its reconstruction
    level; a RawImage takes the quantizer's bit count."""
    if isinstance(img, RgbImage):
        return RgbImage(quantize_array(img.data, spec))
    if isinstance(img, RawImage):
        return RawImage(
            quantize_array(img.data, spec),
            pattern=img.pattern,
            bit_depth=spec.bits,
            continuous=False,
        )
    raise TypeError(f"expected RgbImage or RawImage, got {type(img).__name__}")


# ---------------------------------------------------------------------------
# Pipeline runner
# ---------------------------------------------------------------------------

def _replicate_mosaic(raw: RawImage) -> RgbImage:
    """Mosaic passthrough used when demosaicing is disabled: the single
    channel is replicated so per-pixel RGB stages remain defined."""
    return RgbImage(np.repeat(raw.data[:, :, None], 3, axis=2))


def _apply_rgb_stage(img: RgbImage, stage: StageDescriptor, profile: CameraProfile) -> RgbImage:
    if stage.stage == "denoise":
        return denoise(
            img,
            stage.options["strength"],
            stage.options["patch"],
            stage.options["window"],
        )
    if stage.stage == "color":
        return color_transform(img, profile.color_matrix)
    if stage.stage == "gamut":
        return gamut_map(img, profile.gamut_strength)
    if stage.stage == "gamma":
        return gamma_compress(img, profile.gamma_scale, profile.gamma_exponent)
    if stage.stage == "quantize":
        opts = stage.options
        spec = make_quantizer(opts["scheme"], opts["bits"], opts["floor"])
        return quantize_image(img, spec)
    raise ConfigError(f"stage {stage.stage!r} cannot run on RGB data")


def run_forward(raw: RawImage, profile: CameraProfile, config: PipelineConfig) -> RgbImage:
    """Run the enabled ISP stages in canonical order on a mosaic.

    Disabled stages are skipped. If demosaicing is disabled the mosaic is
    replicated to three channels before any RGB stage (and for the final
    output), so an empty config is a channel-replication passthrough.
    """
    stages = config.require_subsequence(ISP_STAGE_ORDER, context="forward ISP")
    by_name = {s.stage: s for s in stages}

    current_raw: RawImage | None = raw
    rgb: RgbImage | None = None

    if "denoise" in by_name:
        opts = by_name["denoise"].options
        filtered = nlm_filter(
            raw.data[:, :, None], opts["strength"], opts["patch"], opts["window"]
        )[:, :, 0]
        current_raw = RawImage(
            np.clip(filtered, 0.0, 1.0),
            pattern=raw.pattern,
            bit_depth=raw.bit_depth,
            continuous=True,
        )

    if "demosaic" in by_name:
        rgb = demosaic(current_raw, by_name["demosaic"].options["method"])
    else:
        rgb = _replicate_mosaic(current_raw)

    for name in ("color", "gamut", "gamma", "quantize"):
        if name in by_name:
            rgb = _apply_rgb_stage(rgb, by_name[name], profile)
    return rgb


def run_forward_on_rgb(
    img: RgbImage, profile: CameraProfile, config: PipelineConfig
) -> RgbImage:
    """Run forward ISP stages on data that never was a mosaic (used when the
    inverse pipeline kept RGB form). Demosaicing is not applicable here."""
    stages = config.require_subsequence(ISP_STAGE_ORDER, context="forward ISP")
    for stage in stages:
        if stage.stage == "demosaic":
            raise ConfigError(
                "demosaic stage requires mosaiced input; enable remosaic in the "
                "inverse pipeline or drop demosaic"
            )
        img = _apply_rgb_stage(img, stage, profile)
    return img
