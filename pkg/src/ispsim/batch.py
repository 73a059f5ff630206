"""Batch dataset conversion and directory-level metrics.

Per-image parallelism only: each file is processed independently with a
noise stream derived from (job seed, relative filename), so outputs are
bitwise identical at any worker count.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import JobConfig, PipelineConfig, SENSOR_STAGES
from .errors import ConfigError, PipelineError
from .forward import run_forward, run_forward_on_rgb
from .image import (
    QualityReport,
    RawImage,
    RgbImage,
    load_rgb,
    psnr,
    save_raw,
    save_rgb,
)
from .inverse import apply_inverse_stages
from .profile import CameraProfile, default_profile, load_profile
from .sensor import pixel_bin, roi_readout

RGB_SUFFIXES = (".ppm", ".pnm", ".png")


@dataclass
class BatchSummary:
    converted: int
    failures: list
    outputs: list

    @property
    def ok(self) -> bool:
        return not self.failures


def list_images(directory: Path) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"{directory}: not a directory")
    return sorted(
        p for p in directory.iterdir() if p.suffix.lower() in RGB_SUFFIXES
    )


def per_image_seed(base_seed: int, name: str) -> int:
    """Stable 63-bit seed for one file, independent of processing order."""
    digest = hashlib.sha256(f"{base_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def load_job_profile(job: JobConfig) -> CameraProfile:
    if job.profile_path is None:
        return default_profile()
    return load_profile(job.profile_path)


def _split_forward(config: PipelineConfig):
    sensor = [s for s in config.stages if s.stage in SENSOR_STAGES]
    isp = PipelineConfig(tuple(s for s in config.stages if s.stage not in SENSOR_STAGES))
    return sensor, isp


def convert_image(img: RgbImage, profile: CameraProfile, job: JobConfig, name: str) -> RgbImage:
    """Inverse pipeline, sensor readout ops, then forward pipeline for one image."""
    inverse = replace(job.inverse, seed=per_image_seed(job.noise_seed, name))
    current = apply_inverse_stages(img, profile, inverse)
    sensor_stages, isp = _split_forward(job.forward)
    if isinstance(current, RawImage):
        for stage in sensor_stages:
            if stage.stage == "roi":
                o = stage.options
                current = roi_readout(current, (o["row0"], o["col0"], o["rows"], o["cols"]))
            elif stage.stage == "bin":
                current = pixel_bin(current, stage.options["factor"])
        return run_forward(current, profile, isp)
    # JobConfig validation guarantees no mosaic-consuming stage here.
    return run_forward_on_rgb(current, profile, isp)


def invert_image(img: RgbImage, profile: CameraProfile, job: JobConfig, name: str) -> RawImage:
    inverse = replace(job.inverse, seed=per_image_seed(job.noise_seed, name))
    if not inverse.has("remosaic"):
        raise ConfigError("invert requires the remosaic stage in the inverse pipeline")
    result = apply_inverse_stages(img, profile, inverse)
    assert isinstance(result, RawImage)
    return result


def _run_files(job: JobConfig, worker) -> BatchSummary:
    files = list_images(job.input_dir)
    job.output_dir.mkdir(parents=True, exist_ok=True)

    def one(path: Path):
        try:
            return path.name, worker(path), None
        except Exception as exc:  # noqa: BLE001 - per-file crash isolation
            return path.name, None, f"{type(exc).__name__}: {exc}"

    if job.workers == 1 or len(files) <= 1:
        results = [one(p) for p in files]
    else:
        with ThreadPoolExecutor(max_workers=job.workers) as pool:
            results = list(pool.map(one, files))

    summary = BatchSummary(converted=0, failures=[], outputs=[])
    for name, output, error in results:
        if error is None:
            summary.converted += 1
            summary.outputs.append(output)
        else:
            summary.failures.append((name, error))
    return summary


def convert_batch(job: JobConfig) -> BatchSummary:
    """Convert every supported image in input_dir through the configured
    inverse-then-forward pipeline, mirroring filenames into output_dir."""
    profile = load_job_profile(job)

    def worker(path: Path) -> Path:
        img = load_rgb(path)
        out = convert_image(img, profile, job, path.name)
        dest = job.output_dir / path.name
        save_rgb(out, dest)
        return dest

    return _run_files(job, worker)


def invert_batch(job: JobConfig) -> BatchSummary:
    """Inverse-only conversion; outputs are PGM mosaics with sidecar headers."""
    profile = load_job_profile(job)

    def worker(path: Path) -> Path:
        img = load_rgb(path)
        raw = invert_image(img, profile, job, path.name)
        dest = job.output_dir / (path.stem + ".pgm")
        save_raw(raw, dest)
        return dest

    return _run_files(job, worker)


@dataclass
class QualityRow:
    name: str
    report: QualityReport


def _aggregate(rows: list[QualityRow]) -> QualityReport:
    """Aggregate MSE is the mean of per-file MSEs (PSNR derived from it)."""
    import math

    mse = float(np.mean([r.report.mse for r in rows]))
    ape = float(np.mean([r.report.avg_pixel_error for r in rows]))
    value = math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse)
    return QualityReport(psnr=value, avg_pixel_error=ape, mse=mse)


def roundtrip_batch(job: JobConfig) -> tuple[BatchSummary, list[QualityRow], QualityReport | None]:
    """convert_batch plus per-file quality metrics of result vs original.

    The configured pipeline must preserve dimensions for the comparison;
    per-file mismatches are reported as failures.
    """
    profile = load_job_profile(job)
    rows: list[QualityRow] = []

    def worker(path: Path) -> Path:
        img = load_rgb(path)
        out = convert_image(img, profile, job, path.name)
        dest = job.output_dir / path.name
        save_rgb(out, dest)
        rows.append(QualityRow(path.name, psnr(img, load_rgb(dest))))
        return dest

    summary = _run_files(job, worker)
    rows.sort(key=lambda r: r.name)
    aggregate = _aggregate(rows) if rows else None
    return summary, rows, aggregate


def stats_dirs(refs_dir, outs_dir) -> tuple[list[QualityRow], QualityReport]:
    """Per-file and aggregate quality of outs_dir images against refs_dir."""
    refs = list_images(refs_dir)
    if not refs:
        raise PipelineError(f"{refs_dir}: no supported images")
    outs_dir = Path(outs_dir)
    rows = []
    for ref in refs:
        counterpart = outs_dir / ref.name
        if not counterpart.exists():
            raise PipelineError(f"missing counterpart file: {counterpart}")
        rows.append(QualityRow(ref.name, psnr(load_rgb(ref), load_rgb(counterpart))))
    return rows, _aggregate(rows)
