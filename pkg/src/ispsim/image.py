"""Image containers, Bayer geometry, file I/O and quality metrics.

All pixel data is kept as normalized float64 intensity in [0, 1]. Integer
codes only exist at file boundaries (PPM/PGM containers) and inside
quantizer outputs.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ImageError

# Channel indices used throughout: 0 = R, 1 = G, 2 = B
_CHANNEL_OF_LETTER = {"R": 0, "G": 1, "B": 2}


class BayerPattern(Enum):
    """2x2 color-filter tile, read row-major from the image origin."""

    RGGB = "RGGB"
    BGGR = "BGGR"
    GRBG = "GRBG"
    GBRG = "GBRG"

    @property
    def tile(self) -> np.ndarray:
        """2x2 array of channel indices (0=R, 1=G, 2=B)."""
        letters = self.value
        return np.array(
            [
                [_CHANNEL_OF_LETTER[letters[0]], _CHANNEL_OF_LETTER[letters[1]]],
                [_CHANNEL_OF_LETTER[letters[2]], _CHANNEL_OF_LETTER[letters[3]]],
            ],
            dtype=np.int64,
        )

    def channel_at(self, row: int, col: int) -> int:
        """Channel index sensed at absolute position (row, col)."""
        return int(self.tile[row % 2, col % 2])

    def channel_map(self, height: int, width: int) -> np.ndarray:
        """(height, width) array of per-site channel indices."""
        rows = np.arange(height)[:, None] % 2
        cols = np.arange(width)[None, :] % 2
        return self.tile[rows, cols]

    def site_of(self, channel: int) -> list[tuple[int, int]]:
        """Tile offsets (row, col) whose filter passes `channel`."""
        return [
            (r, c) for r in range(2) for c in range(2) if self.tile[r, c] == channel
        ]


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Demosaiced image: row-major (height, width, 3) intensities in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ImageError(f"RGB data must be (H, W, 3), got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ImageError("zero-sized image")
        if np.min(arr) < 0.0 or np.max(arr) > 1.0:
            raise ImageError("RGB intensities must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class RawImage:
    """Single-channel mosaiced image with its color-filter layout.

    `continuous` marks pre-quantization data whose values are not yet
    confined to the 2**bit_depth reconstruction levels.
    """

    data: np.ndarray
    pattern: BayerPattern = BayerPattern.RGGB
    bit_depth: int = 12
    continuous: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ImageError(f"raw data must be (H, W), got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ImageError("zero-sized image")
        if arr.shape[0] % 2 != 0 or arr.shape[1] % 2 != 0:
            raise ImageError(
                f"raw dimensions must be even (full Bayer periods), got {arr.shape}"
            )
        if not 1 <= self.bit_depth <= 16:
            raise ImageError(f"bit_depth must be in 1..16, got {self.bit_depth}")
        if np.min(arr) < 0.0 or np.max(arr) > 1.0:
            raise ImageError("raw intensities must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class QualityReport:
    """Reconstruction-quality summary against a reference image.

    psnr uses peak intensity 1.0 and is math.inf for identical inputs.
    avg_pixel_error is the mean absolute difference over all channel samples.
    """

    psnr: float
    avg_pixel_error: float
    mse: float


def psnr(a: RgbImage, b: RgbImage) -> QualityReport:
    """Compare two images of equal dimensions.

    mse is the mean squared channel difference, psnr = 10*log10(1/mse)
    (peak 1.0), with an infinite sentinel when the images are identical.
    """
    if a.data.shape != b.data.shape:
        raise ImageError(
            f"dimension mismatch: {a.data.shape} vs {b.data.shape}"
        )
    diff = a.data - b.data
    mse = float(np.mean(diff * diff))
    ape = float(np.mean(np.abs(diff)))
    value = math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse)
    return QualityReport(psnr=value, avg_pixel_error=ape, mse=mse)


# ---------------------------------------------------------------------------
# RGB file I/O: PPM (P6) is the native format, PNG is supported via Pillow.
# ---------------------------------------------------------------------------

_PNM_HEADER = re.compile(rb"^(P[56])\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s")


def _read_pnm(path: Path) -> tuple[str, int, int, int, np.ndarray]:
    blob = path.read_bytes()
    m = _PNM_HEADER.match(blob)
    if m is None:
        raise ImageError(f"{path}: not a binary PPM/PGM file")
    magic = m.group(1).decode()
    width, height, maxval = int(m.group(2)), int(m.group(3)), int(m.group(4))
    if width == 0 or height == 0:
        raise ImageError(f"{path}: zero-sized image")
    if maxval < 1 or maxval > 65535:
        raise ImageError(f"{path}: unsupported maxval {maxval}")
    channels = 3 if magic == "P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    body = blob[m.end():]
    if len(body) < count * dtype.itemsize:
        raise ImageError(f"{path}: truncated pixel data")
    samples = np.frombuffer(body, dtype=dtype, count=count)
    return magic, width, height, maxval, samples.astype(np.int64)


def _write_pnm(path: Path, magic: str, maxval: int, codes: np.ndarray) -> None:
    height, width = codes.shape[:2]
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"{magic}\n{width} {height}\n{maxval}\n".encode()
    path.write_bytes(header + codes.astype(dtype).tobytes())


def load_rgb(path) -> RgbImage:
    """Load an 8-bit or 16-bit lossless RGB raster (PPM mandatory, PNG optional).

    An integer sample s with container maximum M maps to s / M.
    """
    path = Path(path)
    if not path.exists():
        raise ImageError(f"{path}: no such file")
    suffix = path.suffix.lower()
    if suffix in (".ppm", ".pnm"):
        magic, width, height, maxval, samples = _read_pnm(path)
        if magic != "P6":
            raise ImageError(f"{path}: expected P6 color file, got {magic}")
        data = samples.reshape(height, width, 3) / float(maxval)
        return RgbImage(data)
    if suffix == ".png":
        try:
            from PIL import Image
        except ImportError as exc:  # pragma: no cover
            raise ImageError("PNG support requires Pillow") from exc
        with Image.open(path) as im:
            if im.mode not in ("RGB", "L", "I;16"):
                im = im.convert("RGB")
            arr = np.asarray(im)
        maxval = 65535 if arr.dtype == np.uint16 else 255
        if arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], 3, axis=2)
        return RgbImage(arr[:, :, :3].astype(np.float64) / maxval)
    raise ImageError(f"{path}: unsupported format {suffix!r} (use .ppm or .png)")


def save_rgb(img: RgbImage, path, bit_depth: int = 8) -> None:
    """Write an RgbImage as binary PPM (P6) or PNG; samples are round(v * maxval)."""
    path = Path(path)
    if bit_depth not in (8, 16):
        raise ImageError(f"RGB containers are 8- or 16-bit, got {bit_depth}")
    maxval = (1 << bit_depth) - 1
    codes = np.rint(img.data * maxval).astype(np.int64)
    suffix = path.suffix.lower()
    if suffix in (".ppm", ".pnm"):
        _write_pnm(path, "P6", maxval, codes)
        return
    if suffix == ".png":
        from PIL import Image

        dtype = np.uint16 if bit_depth == 16 else np.uint8
        Image.fromarray(codes.astype(dtype), mode="RGB").save(path)
        return
    raise ImageError(f"{path}: unsupported format {suffix!r} (use .ppm or .png)")


# ---------------------------------------------------------------------------
# RAW container: 16-bit big-endian PGM (P5) + JSON sidecar header.
# ---------------------------------------------------------------------------

def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json")


def raw_scale(raw: RawImage) -> int:
    """Integer full-scale used to store this image's codes.

    Quantized images store codes on their own 2**bit_depth - 1 scale so the
    file round-trip is exact; continuous images use the full 16-bit container
    scale to minimize rounding.
    """
    return 65535 if raw.continuous else (1 << raw.bit_depth) - 1


def save_raw(raw: RawImage, path) -> None:
    """Write a RawImage as 16-bit big-endian PGM plus a JSON sidecar.

    The sidecar records pattern, bit_depth and the continuous flag; codes in
    the PGM are round(v * raw_scale(raw)).
    """
    path = Path(path)
    scale = raw_scale(raw)
    codes = np.rint(raw.data * scale).astype(np.int64)
    _write_pnm(path, "P5", 65535, codes)
    header = {
        "pattern": raw.pattern.value,
        "bit_depth": raw.bit_depth,
        "continuous": raw.continuous,
    }
    _sidecar_path(path).write_text(json.dumps(header) + "\n")


def load_raw(path) -> RawImage:
    """Load a RawImage saved by save_raw, inverting it exactly on stored codes."""
    path = Path(path)
    sidecar = _sidecar_path(path)
    if not path.exists():
        raise ImageError(f"{path}: no such file")
    if not sidecar.exists():
        raise ImageError(f"{path}: missing sidecar header {sidecar.name}")
    try:
        header = json.loads(sidecar.read_text())
        pattern = BayerPattern(header["pattern"])
        bit_depth = int(header["bit_depth"])
        continuous = bool(header["continuous"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ImageError(f"{sidecar}: malformed sidecar header: {exc}") from exc
    magic, width, height, maxval, samples = _read_pnm(path)
    if magic != "P5":
        raise ImageError(f"{path}: expected P5 grayscale file, got {magic}")
    scale = 65535 if continuous else (1 << bit_depth) - 1
    codes = samples.reshape(height, width)
    if np.max(codes) > scale:
        raise ImageError(
            f"{path}: stored code {np.max(codes)} exceeds {bit_depth}-bit scale"
        )
    return RawImage(
        codes / float(scale),
        pattern=pattern,
        bit_depth=bit_depth,
        continuous=continuous,
    )
