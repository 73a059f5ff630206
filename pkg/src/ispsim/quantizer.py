"""Scalar quantizer construction and application.

A quantizer is 2**bits reconstruction levels plus 2**bits - 1 decision
thresholds. Thresholds sit at the midpoints between adjacent levels in the
scheme's own metric: arithmetic for linear, geometric for logarithmic,
CDF-space for data-driven quantile schemes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import QuantizerError

DEFAULT_LOG_FLOOR = 2.0 ** -12  # one native 12-bit LSB

SCHEMES = ("linear", "logarithmic", "cdf", "lloyd_max", "custom")


@dataclass(frozen=True, eq=False)
class QuantizerSpec:
    """Reconstruction levels, decision boundaries and scheme provenance."""

    bits: int
    levels: np.ndarray
    boundaries: np.ndarray
    scheme: str
    floor: float | None = None

    def __post_init__(self):
        if not 1 <= self.bits <= 16:
            raise QuantizerError(f"bits must be in 1..16, got {self.bits}")
        if self.scheme not in SCHEMES:
            raise QuantizerError(f"unknown scheme {self.scheme!r}")
        levels = np.asarray(self.levels, dtype=np.float64)
        bounds = np.asarray(self.boundaries, dtype=np.float64)
        n = 1 << self.bits
        if levels.shape != (n,):
            raise QuantizerError(f"expected {n} levels, got {levels.shape}")
        if bounds.shape != (n - 1,):
            raise QuantizerError(f"expected {n - 1} boundaries, got {bounds.shape}")
        if np.any(np.diff(levels) <= 0):
            raise QuantizerError("levels must be strictly increasing")
        if np.min(levels) < 0.0 or np.max(levels) > 1.0:
            raise QuantizerError("levels must lie in [0, 1]")
        if np.any(bounds <= levels[:-1]) or np.any(bounds >= levels[1:]):
            raise QuantizerError("boundaries must interleave levels")
        if self.floor is not None and not 0.0 < self.floor < 1.0:
            raise QuantizerError(f"floor must be in (0, 1), got {self.floor}")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "boundaries", bounds)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantizerSpec):
            return NotImplemented
        return (
            self.bits == other.bits
            and self.scheme == other.scheme
            and self.floor == other.floor
            and np.array_equal(self.levels, other.levels)
            and np.array_equal(self.boundaries, other.boundaries)
        )


def make_quantizer(
    scheme: str, bits: int, floor: float = DEFAULT_LOG_FLOOR
) -> QuantizerSpec:
    """Build a formula-defined quantizer.

    linear:       levels k / (2**bits - 1), arithmetic-midpoint thresholds.
    logarithmic:  levels floor**(1 - k / (2**bits - 1)), log-uniform from
                  floor up to 1, geometric-midpoint thresholds.
    """
    if not 1 <= bits <= 16:
        raise QuantizerError(f"bits must be in 1..16, got {bits}")
    n = 1 << bits
    k = np.arange(n, dtype=np.float64)
    if scheme == "linear":
        levels = k / (n - 1)
        bounds = 0.5 * (levels[:-1] + levels[1:])
        return QuantizerSpec(bits, levels, bounds, "linear")
    if scheme == "logarithmic":
        if not 0.0 < floor < 1.0:
            raise QuantizerError(
                f"logarithmic scheme needs a floor in (0, 1), got {floor}"
            )
        levels = floor ** (1.0 - k / (n - 1))
        bounds = np.sqrt(levels[:-1] * levels[1:])
        return QuantizerSpec(bits, levels, bounds, "logarithmic", floor=floor)
    raise QuantizerError(
        f"make_quantizer builds 'linear' or 'logarithmic'; "
        f"{scheme!r} quantizers are data-driven"
    )


def quantize_codes(values: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    """Vectorized code assignment; values on a threshold take the lower code."""
    return np.searchsorted(spec.boundaries, values, side="left")


def quantize_value(v: float, spec: QuantizerSpec) -> tuple[int, float]:
    """Quantize one intensity in [0, 1] to (code, reconstruction level).

    Values below a log-domain floor map to code 0.
    """
    if not 0.0 <= v <= 1.0:
        raise QuantizerError(f"value {v} outside [0, 1]")
    code = int(quantize_codes(np.asarray(v), spec))
    return code, float(spec.levels[code])


def quantize_array(values: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    """Map every sample to its reconstruction level."""
    return spec.levels[quantize_codes(values, spec)]


# ---------------------------------------------------------------------------
# Level files: one level per line, header line `# scheme bits floor`.
# ---------------------------------------------------------------------------

def write_levels(spec: QuantizerSpec, path) -> None:
    floor = spec.floor if spec.floor is not None else 0.0
    lines = [f"# {spec.scheme} {spec.bits} {floor!r}"]
    lines += [repr(float(v)) for v in spec.levels]
    Path(path).write_text("\n".join(lines) + "\n")


def read_levels(path) -> QuantizerSpec:
    """Load a level file written by write_levels.

    The file stores levels only, so decision thresholds are rebuilt as
    midpoints: geometric for logarithmic levels, arithmetic otherwise.
    Data-driven schemes (cdf) thus reload with nearest-level thresholds
    rather than their original design-time quantile thresholds.
    """
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise QuantizerError(f"{path}: missing '# scheme bits floor' header")
    parts = lines[0][1:].split()
    if len(parts) != 3:
        raise QuantizerError(f"{path}: malformed header {lines[0]!r}")
    scheme, bits, floor = parts[0], int(parts[1]), float(parts[2])
    levels = np.array([float(ln) for ln in lines[1:]], dtype=np.float64)
    if levels.size != (1 << bits):
        raise QuantizerError(
            f"{path}: header says {1 << bits} levels, file has {levels.size}"
        )
    if scheme == "logarithmic":
        bounds = np.sqrt(levels[:-1] * levels[1:])
    else:
        bounds = 0.5 * (levels[:-1] + levels[1:])
    return QuantizerSpec(
        bits, levels, bounds, scheme, floor=floor if floor > 0 else None
    )
