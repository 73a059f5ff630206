"""Data-driven quantizer design: log-normal fitting, CDF-inversion level
placement, and the Lloyd-Max iteration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import ndtri

from .errors import QuantizerError
from .image import RawImage
from .quantizer import DEFAULT_LOG_FLOOR, QuantizerSpec
from .sensor import IntensityDistribution, _pooled_samples


@dataclass(frozen=True)
class LogNormalFit:
    """Method-of-moments fit of ln(intensity); non-positive samples are
    excluded from the fit and counted separately."""

    mu: float
    sigma: float
    sample_count: int
    excluded_count: int = 0

    def __post_init__(self):
        if self.sigma <= 0:
            raise QuantizerError(f"sigma must be > 0, got {self.sigma}")

    def quantile(self, p) -> np.ndarray:
        return np.exp(self.mu + self.sigma * ndtri(p))


def fit_lognormal(samples) -> LogNormalFit:
    """Fit mu and sigma (population convention) to ln of the positive samples."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    positive = samples[samples > 0]
    excluded = samples.size - positive.size
    if positive.size < 2:
        raise QuantizerError(
            f"need at least 2 positive samples to fit, got {positive.size}"
        )
    logs = np.log(positive)
    mu = float(np.mean(logs))
    sigma = float(np.std(logs))
    if sigma == 0.0:
        raise QuantizerError("samples have zero variance in log domain")
    return LogNormalFit(
        mu=mu, sigma=sigma, sample_count=positive.size, excluded_count=excluded
    )


def cdf_levels(
    fit: LogNormalFit, bits: int, floor: float = DEFAULT_LOG_FLOOR
) -> QuantizerSpec:
    """Place levels at mid-cell quantiles of the fitted distribution.

    Level k sits at quantile (k + 0.5) / 2**bits and decision thresholds at
    quantiles k / 2**bits, so codes are uniformly likely under the fit.
    Values are clamped into (floor, 1]; a fit too wide for that range is
    rejected as degenerate.
    """
    if not 1 <= bits <= 16:
        raise QuantizerError(f"bits must be in 1..16, got {bits}")
    n = 1 << bits
    k = np.arange(n, dtype=np.float64)
    levels = np.clip(fit.quantile((k + 0.5) / n), floor, 1.0)
    if np.any(np.diff(levels) <= 0):
        raise QuantizerError(
            f"degenerate fit: quantile levels collapse after clamping to ({floor}, 1]"
        )
    # Thresholds sit at the cell-edge quantiles; when clamping pinches one
    # against a level (possible only for fits much wider than (floor, 1]),
    # keep it strictly inside its level gap.
    bounds = np.clip(fit.quantile(k[1:] / n), floor, 1.0)
    lo = np.nextafter(levels[:-1], 1.0)
    hi = np.nextafter(levels[1:], 0.0)
    if np.any(lo > hi):
        raise QuantizerError(
            f"degenerate fit: no room for thresholds between clamped levels"
        )
    bounds = np.clip(bounds, lo, hi)
    return QuantizerSpec(bits, levels, bounds, "cdf", floor=floor)


@dataclass(frozen=True)
class LloydMaxResult:
    spec: QuantizerSpec
    mse: float
    mse_history: tuple
    iterations: int


def _nearest_level_mse(samples: np.ndarray, levels: np.ndarray) -> float:
    bounds = 0.5 * (levels[:-1] + levels[1:])
    assigned = levels[np.searchsorted(bounds, samples, side="left")]
    return float(np.mean((samples - assigned) ** 2))


def lloyd_max(
    samples,
    bits: int,
    tol: float = 1e-7,
    max_iter: int = 200,
) -> LloydMaxResult:
    """MSE-optimal scalar quantizer by alternating optimization.

    Starts from the uniform (linear) levels and alternates midpoint
    thresholds with per-cell sample means until the largest level movement
    drops below tol or max_iter is reached. Empty cells are resolved by
    snapping their level to the nearest sample not already used as a level.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    n = 1 << bits
    if np.unique(samples).size < n:
        raise QuantizerError(
            f"need at least {n} distinct samples for {bits}-bit Lloyd-Max"
        )
    if tol <= 0:
        raise QuantizerError(f"tol must be > 0, got {tol}")

    levels = np.arange(n, dtype=np.float64) / (n - 1)
    history = [_nearest_level_mse(samples, levels)]
    iterations = 0
    for iterations in range(1, max_iter + 1):
        bounds = 0.5 * (levels[:-1] + levels[1:])
        codes = np.searchsorted(bounds, samples, side="left")
        counts = np.bincount(codes, minlength=n)
        sums = np.bincount(codes, weights=samples, minlength=n)
        new_levels = np.where(counts > 0, sums / np.maximum(counts, 1), levels)

        empty = np.flatnonzero(counts == 0)
        if empty.size:
            used = set(new_levels[counts > 0].tolist())
            for cell in empty:
                order = np.argsort(np.abs(samples - levels[cell]), kind="stable")
                snapped = None
                for idx in order:
                    if samples[idx] not in used:
                        snapped = samples[idx]
                        break
                if snapped is None:
                    raise QuantizerError(
                        f"cannot resolve empty cell {cell}: all samples already "
                        "used as levels"
                    )
                new_levels[cell] = snapped
                used.add(snapped)
            new_levels = np.sort(new_levels)

        if np.any(np.diff(new_levels) <= 0):
            raise QuantizerError("Lloyd-Max levels collapsed; data too degenerate")

        moved = float(np.max(np.abs(new_levels - levels)))
        levels = new_levels
        history.append(_nearest_level_mse(samples, levels))
        if moved < tol:
            break

    bounds = 0.5 * (levels[:-1] + levels[1:])
    spec = QuantizerSpec(bits, levels, bounds, "lloyd_max")
    return LloydMaxResult(
        spec=spec, mse=history[-1], mse_history=tuple(history), iterations=iterations
    )


def build_histogram(dataset: Iterable[RawImage], bins: int) -> IntensityDistribution:
    """Normalized counts of all dataset samples over uniform [0, 1] bins."""
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    samples = _pooled_samples(dataset)
    counts, edges = np.histogram(samples, bins=bins, range=(0.0, 1.0))
    return IntensityDistribution(counts / samples.size, edges)
