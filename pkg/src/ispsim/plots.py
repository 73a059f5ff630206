"""Figure rendering for report outputs.

Every report-producing CLI command writes its figures next to the
delimited report file; these helpers do the drawing (Agg backend, no
display needed).
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .quantizer import QuantizerSpec
from .sensor import EnergyReport


def _finite_psnr(value: float, cap: float) -> float:
    return cap if math.isinf(value) else value


def render_quality_figure(rows, aggregate, path) -> Path:
    """Per-file PSNR bars with the aggregate as a reference line."""
    path = Path(path)
    names = [r.name for r in rows]
    finite = [r.report.psnr for r in rows if math.isfinite(r.report.psnr)]
    cap = (max(finite) if finite else 100.0) + 10.0
    values = [_finite_psnr(r.report.psnr, cap) for r in rows]

    fig, (ax1, ax2) = plt.subplots(
        2, 1, figsize=(max(6.0, 0.35 * len(rows)), 7.0), sharex=True
    )
    xs = np.arange(len(rows))
    ax1.bar(xs, values, color="#4878cf")
    if aggregate is not None and math.isfinite(aggregate.psnr):
        ax1.axhline(aggregate.psnr, color="k", ls="--", lw=1, label="aggregate")
        ax1.legend(loc="lower right")
    ax1.set_ylabel("PSNR (dB)")
    ax1.set_title("Reconstruction quality per file")

    ax2.bar(xs, [100.0 * r.report.avg_pixel_error for r in rows], color="#d65f5f")
    ax2.set_ylabel("avg pixel error (%)")
    ax2.set_xticks(xs)
    ax2.set_xticklabels(names, rotation=90, fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_energy_figure(report: EnergyReport, path) -> Path:
    """Per-code energy curves and measured code probabilities for both configs."""
    path = Path(path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11.0, 4.2))

    for model, cfg, color in (
        (report.baseline_model, report.baseline, "#4878cf"),
        (report.candidate_model, report.candidate, "#d65f5f"),
    ):
        label = f"{cfg.scheme} {cfg.bits}-bit"
        ax1.semilogy(
            np.arange(model.per_code_energy.size) / max(model.per_code_energy.size - 1, 1),
            model.per_code_energy,
            color=color,
            label=label,
        )
    ax1.set_xlabel("code (normalized)")
    ax1.set_ylabel("readout energy (unit-capacitor units)")
    ax1.set_title("Per-code SAR energy")
    ax1.legend()

    for dist, cfg, color in (
        (report.baseline_dist, report.baseline, "#4878cf"),
        (report.candidate_dist, report.candidate, "#d65f5f"),
    ):
        codes = np.arange(dist.probabilities.size) / max(dist.probabilities.size - 1, 1)
        ax2.step(codes, dist.probabilities, where="mid", color=color,
                 label=f"{cfg.scheme} {cfg.bits}-bit")
    ax2.set_xlabel("code (normalized)")
    ax2.set_ylabel("probability")
    ax2.set_title("Measured code distribution")
    ax2.legend()

    fig.suptitle(
        f"ADC energy savings {report.savings_pct:.2f}% "
        f"(sensor-level estimate {report.sensor_savings_pct:.2f}%)"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_levels_figure(spec: QuantizerSpec, samples, path) -> Path:
    """Quantizer levels over the intensity histogram of the design data."""
    path = Path(path)
    samples = np.asarray(samples, dtype=np.float64).ravel()
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    ax.hist(samples, bins=128, range=(0.0, 1.0), density=True,
            color="#cccccc", label="intensity histogram")
    for i, level in enumerate(spec.levels):
        ax.axvline(level, color="#d65f5f", lw=0.8,
                   label="levels" if i == 0 else None)
    ax.set_xlabel("intensity")
    ax.set_ylabel("density")
    ax.set_title(f"{spec.scheme} {spec.bits}-bit reconstruction levels")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
