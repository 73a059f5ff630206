"""Vision-mode sensor simulation: pixel binning, region-of-interest
readout, per-code SAR ADC energy, and expected readout energy over an
empirical intensity distribution.

Energies are reported in abstract unit-capacitor charge units, never
joules: the model counts capacitor charge events (one unit-weighted charge
per trial, plus a discharge when the trial's bit is rejected) and ignores
fixed overheads such as control logic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import QuantizerError
from .image import RawImage
from .quantizer import (
    DEFAULT_LOG_FLOOR,
    QuantizerSpec,
    make_quantizer,
    quantize_codes,
)

# Published headline figure for a comparable first-order model of a 5-bit
# logarithmic vs 12-bit linear SAR readout, printed in reports purely for
# comparison against this tool's own number.
REFERENCE_SAVINGS_PCT = 99.95
# Fraction of a sensor's energy budget attributed to its ADCs.
ADC_SHARE_OF_SENSOR_ENERGY = 0.5


def pixel_bin(raw: RawImage, factor: int) -> RawImage:
    """Average same-channel Bayer sites within (2*factor)-square macro-tiles,
    reducing each dimension by `factor` while preserving the pattern."""
    if factor < 1 or factor & (factor - 1):
        raise ValueError(f"bin factor must be a power of two, got {factor}")
    if factor == 1:
        return raw
    half_h, half_w = raw.height // 2, raw.width // 2
    if half_h % factor or half_w % factor:
        raise ValueError(
            f"bin factor {factor} must divide the {half_h}x{half_w} Bayer grid"
        )
    out = np.empty((raw.height // factor, raw.width // factor))
    for pr in (0, 1):
        for pc in (0, 1):
            sub = raw.data[pr::2, pc::2]
            blocks = sub.reshape(half_h // factor, factor, half_w // factor, factor)
            out[pr::2, pc::2] = blocks.mean(axis=(1, 3))
    return RawImage(
        out, pattern=raw.pattern, bit_depth=raw.bit_depth, continuous=True
    )


def roi_readout(raw: RawImage, rect: tuple) -> RawImage:
    """Crop to (row0, col0, rows, cols); all four must be even so the
    Bayer phase is preserved."""
    row0, col0, rows, cols = rect
    for name, value in (("row0", row0), ("col0", col0), ("rows", rows), ("cols", cols)):
        if value % 2:
            raise ValueError(f"roi {name} must be even for Bayer alignment, got {value}")
    if rows <= 0 or cols <= 0:
        raise ValueError(f"roi extent must be positive, got {rows}x{cols}")
    if row0 < 0 or col0 < 0 or row0 + rows > raw.height or col0 + cols > raw.width:
        raise ValueError(
            f"roi {rect} out of bounds for {raw.height}x{raw.width} image"
        )
    return RawImage(
        raw.data[row0 : row0 + rows, col0 : col0 + cols].copy(),
        pattern=raw.pattern,
        bit_depth=raw.bit_depth,
        continuous=raw.continuous,
    )


# ---------------------------------------------------------------------------
# SAR ADC energy model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyModel:
    """Per-code readout energy of an n-bit SAR ADC, in unit-capacitor units."""

    bits: int
    per_code_energy: np.ndarray
    unit_cap_energy: float = 1.0

    def __post_init__(self):
        e = np.asarray(self.per_code_energy, dtype=np.float64)
        if e.shape != (1 << self.bits,):
            raise ValueError(
                f"expected {1 << self.bits} per-code energies, got {e.shape}"
            )
        if np.any(e <= 0):
            raise ValueError("per-code energies must be positive")
        object.__setattr__(self, "per_code_energy", e)


def sar_code_energy(bits: int, unit_cap_energy: float = 1.0) -> EnergyModel:
    """Simulate the binary search of an n-bit SAR ADC over its capacitor bank.

    Trial i (MSB first) charges a capacitor of 2**(n-1-i) units; if the
    trial bit is rejected the capacitor is discharged again at equal cost,
    so e_m = sum_i 2**(n-1-i) * (2 - bit_i(m)).
    """
    if not 1 <= bits <= 16:
        raise ValueError(f"bits must be in 1..16, got {bits}")
    codes = np.arange(1 << bits, dtype=np.int64)
    energy = np.zeros(1 << bits, dtype=np.float64)
    for trial in range(bits):
        weight = 1 << (bits - 1 - trial)
        kept = (codes >> (bits - 1 - trial)) & 1
        energy += weight * (2 - kept)
    return EnergyModel(bits, energy * unit_cap_energy, unit_cap_energy)


@dataclass(frozen=True)
class IntensityDistribution:
    """Probabilities over quantizer codes (or histogram bins), with the
    intensity interval covered by each bin."""

    probabilities: np.ndarray
    bin_edges: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        if p.ndim != 1 or edges.shape != (p.size + 1,):
            raise ValueError("need len(bin_edges) == len(probabilities) + 1")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "bin_edges", edges)


def _pooled_samples(dataset: Iterable[RawImage]) -> np.ndarray:
    arrays = [img.data.ravel() for img in dataset]
    if not arrays:
        raise ValueError("empty dataset")
    return np.concatenate(arrays)


def measure_distribution(
    dataset: Iterable[RawImage], spec: QuantizerSpec
) -> IntensityDistribution:
    """Fraction of all samples in the dataset quantizing to each code."""
    samples = _pooled_samples(dataset)
    return measure_distribution_of_samples(samples, spec)


def measure_distribution_of_samples(
    samples: np.ndarray, spec: QuantizerSpec
) -> IntensityDistribution:
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size == 0:
        raise ValueError("empty sample set")
    codes = quantize_codes(samples, spec)
    counts = np.bincount(codes, minlength=1 << spec.bits)
    edges = np.concatenate(([0.0], spec.boundaries, [1.0]))
    return IntensityDistribution(counts / samples.size, edges)


def expected_adc_energy(dist: IntensityDistribution, model: EnergyModel) -> float:
    """E[readout energy] = sum_m p_m e_m."""
    if dist.probabilities.size != model.per_code_energy.size:
        raise ValueError(
            f"distribution has {dist.probabilities.size} codes, model has "
            f"{model.per_code_energy.size}"
        )
    return float(np.dot(dist.probabilities, model.per_code_energy))


# ---------------------------------------------------------------------------
# Comparative energy report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdcConfig:
    scheme: str
    bits: int
    floor: float = DEFAULT_LOG_FLOOR


@dataclass(frozen=True)
class EnergyReport:
    """Expected readout energy of a candidate ADC config against a baseline."""

    baseline: AdcConfig
    candidate: AdcConfig
    baseline_energy: float
    candidate_energy: float
    baseline_dist: IntensityDistribution
    candidate_dist: IntensityDistribution
    baseline_model: EnergyModel
    candidate_model: EnergyModel

    @property
    def ratio(self) -> float:
        return self.baseline_energy / self.candidate_energy

    @property
    def savings_pct(self) -> float:
        return 100.0 * (1.0 - self.candidate_energy / self.baseline_energy)

    @property
    def sensor_savings_pct(self) -> float:
        """ADC savings scaled by the ADC share of the sensor energy budget."""
        return self.savings_pct * ADC_SHARE_OF_SENSOR_ENERGY

    @property
    def reference_savings_pct(self) -> float:
        return REFERENCE_SAVINGS_PCT


def _build_quantizer(config: AdcConfig, samples: np.ndarray) -> QuantizerSpec:
    if config.scheme in ("linear", "logarithmic"):
        return make_quantizer(config.scheme, config.bits, config.floor)
    if config.scheme == "cdf":
        from .levels import cdf_levels, fit_lognormal

        return cdf_levels(fit_lognormal(samples), config.bits, floor=config.floor)
    raise QuantizerError(
        f"energy reports support linear, logarithmic or cdf schemes, "
        f"got {config.scheme!r}"
    )


def energy_report(
    dataset: Sequence[RawImage], baseline: AdcConfig, candidate: AdcConfig
) -> EnergyReport:
    """Expected per-readout energy for two ADC configs over one dataset."""
    return energy_report_of_samples(_pooled_samples(dataset), baseline, candidate)


def energy_report_of_samples(
    samples: np.ndarray, baseline: AdcConfig, candidate: AdcConfig
) -> EnergyReport:
    samples = np.asarray(samples, dtype=np.float64).ravel()
    spec_a = _build_quantizer(baseline, samples)
    spec_b = _build_quantizer(candidate, samples)
    dist_a = measure_distribution_of_samples(samples, spec_a)
    dist_b = measure_distribution_of_samples(samples, spec_b)
    model_a = sar_code_energy(baseline.bits)
    model_b = sar_code_energy(candidate.bits)
    return EnergyReport(
        baseline=baseline,
        candidate=candidate,
        baseline_energy=expected_adc_energy(dist_a, model_a),
        candidate_energy=expected_adc_energy(dist_b, model_b),
        baseline_dist=dist_a,
        candidate_dist=dist_b,
        baseline_model=model_a,
        candidate_model=model_b,
    )
