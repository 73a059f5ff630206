"""Command-line entry point.

Subcommands:

    convert    inverse-then-forward conversion of an image directory
    invert     inverse-only conversion to PGM mosaics with sidecar headers
    roundtrip  convert plus per-file quality metrics vs the originals
    stats      per-file and aggregate PSNR table for two directories
    energy     expected SAR readout energy of two ADC configs on a dataset
    levels     design a quantizer level file from a dataset

Job configs are JSON; see `config` module docs for the stage grammar. Exit
codes: 0 success, 1 any per-file failure, 2 configuration error. Commands
with `--report PATH` write a CSV there and render figures alongside it
(same stem, .png) unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .batch import (
    BatchSummary,
    convert_batch,
    invert_batch,
    list_images,
    roundtrip_batch,
    stats_dirs,
)
from .config import InverseConfig, JobConfig, parse_config
from .errors import ConfigError, PipelineError, ProfileError, QuantizerError
from .image import load_raw, load_rgb
from .levels import cdf_levels, fit_lognormal, lloyd_max
from .quantizer import make_quantizer, write_levels
from .sensor import AdcConfig, EnergyReport, energy_report_of_samples

DEFAULT_INVERT_STAGES = ("inv_gamma", "inv_gamut", "inv_color", "remosaic", "requantize")


def _add_job_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, help="job config JSON file")
    sub.add_argument("--in", dest="input_dir", type=Path, help="input directory")
    sub.add_argument("--out", dest="output_dir", type=Path, help="output directory")
    sub.add_argument("--profile", type=Path, help="camera profile JSON file")
    sub.add_argument("--seed", type=int, help="job seed")
    sub.add_argument("--workers", type=int, help="worker threads (advisory)")
    sub.add_argument("--report", type=Path, help="CSV report path")
    sub.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def _build_job(args, default_inverse: tuple = ()) -> JobConfig:
    if args.config is not None:
        job = parse_config(args.config)
    else:
        if args.input_dir is None or args.output_dir is None:
            raise ConfigError("need --config or both --in and --out")
        job = JobConfig(
            input_dir=args.input_dir,
            output_dir=args.output_dir,
            inverse=InverseConfig(stages=default_inverse),
        )
    updates = {}
    if args.input_dir is not None:
        updates["input_dir"] = args.input_dir
    if args.output_dir is not None:
        updates["output_dir"] = args.output_dir
    if args.profile is not None:
        updates["profile_path"] = args.profile
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.report is not None:
        updates["report_path"] = args.report
    return replace(job, **updates) if updates else job


def _summary_exit(summary: BatchSummary) -> int:
    print(f"converted {summary.converted} file(s), {len(summary.failures)} failure(s)")
    for name, error in summary.failures:
        print(f"  FAIL {name}: {error}", file=sys.stderr)
    return 1 if summary.failures else 0


def _figure_path(report_path: Path, tag: str) -> Path:
    return report_path.with_name(report_path.stem + f"_{tag}.png")


def _fmt(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6f}"


def _write_quality_report(rows, aggregate, report_path: Path, figures: bool) -> None:
    report_path.parent.mkdir(parents=True, exist_ok=True)
    with report_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["file", "psnr_db", "avg_pixel_error", "mse"])
        for row in rows:
            writer.writerow(
                [
                    row.name,
                    _fmt(row.report.psnr),
                    _fmt(row.report.avg_pixel_error),
                    _fmt(row.report.mse),
                ]
            )
        if aggregate is not None:
            writer.writerow(
                [
                    "AGGREGATE",
                    _fmt(aggregate.psnr),
                    _fmt(aggregate.avg_pixel_error),
                    _fmt(aggregate.mse),
                ]
            )
    if figures and rows:
        from .plots import render_quality_figure

        render_quality_figure(rows, aggregate, _figure_path(report_path, "quality"))


def _print_quality(rows, aggregate) -> None:
    width = max([len(r.name) for r in rows] + [9])
    print(f"{'file':<{width}}  {'psnr_db':>10}  {'avg_err':>9}")
    for row in rows:
        psnr_s = "inf" if math.isinf(row.report.psnr) else f"{row.report.psnr:.2f}"
        print(f"{row.name:<{width}}  {psnr_s:>10}  {row.report.avg_pixel_error:>9.5f}")
    if aggregate is not None:
        psnr_s = "inf" if math.isinf(aggregate.psnr) else f"{aggregate.psnr:.2f}"
        print(f"{'AGGREGATE':<{width}}  {psnr_s:>10}  {aggregate.avg_pixel_error:>9.5f}")


def parse_adc_config(text: str) -> AdcConfig:
    parts = text.split(":")
    schemes = {"linear": "linear", "log": "logarithmic", "logarithmic": "logarithmic",
               "cdf": "cdf"}
    if len(parts) not in (2, 3) or parts[0] not in schemes:
        raise ConfigError(
            f"ADC config must be SCHEME:BITS[:FLOOR] with scheme in "
            f"{sorted(schemes)}, got {text!r}"
        )
    try:
        bits = int(parts[1])
        floor = float(parts[2]) if len(parts) == 3 else 2.0**-12
    except ValueError as exc:
        raise ConfigError(f"bad ADC config {text!r}: {exc}") from exc
    if not 1 <= bits <= 16:
        raise ConfigError(f"ADC bits must be in 1..16, got {bits}")
    return AdcConfig(scheme=schemes[parts[0]], bits=bits, floor=floor)


def _dataset_samples(directory: Path) -> np.ndarray:
    """Pool intensities from a directory of PGM mosaics and/or RGB images."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"{directory}: not a directory")
    pools = []
    for path in sorted(directory.iterdir()):
        suffix = path.suffix.lower()
        if suffix == ".pgm":
            pools.append(load_raw(path).data.ravel())
        elif suffix in (".ppm", ".pnm", ".png"):
            pools.append(load_rgb(path).data.ravel())
    if not pools:
        raise ConfigError(f"{directory}: no supported images (.pgm/.ppm/.png)")
    return np.concatenate(pools)


def _write_energy_report(report: EnergyReport, report_path: Path, figures: bool) -> None:
    report_path.parent.mkdir(parents=True, exist_ok=True)
    with report_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quantity", "value"])
        writer.writerow(
            ["baseline", f"{report.baseline.scheme}:{report.baseline.bits}"]
        )
        writer.writerow(
            ["candidate", f"{report.candidate.scheme}:{report.candidate.bits}"]
        )
        writer.writerow(["baseline_energy_units", f"{report.baseline_energy:.6f}"])
        writer.writerow(["candidate_energy_units", f"{report.candidate_energy:.6f}"])
        writer.writerow(["ratio", f"{report.ratio:.6f}"])
        writer.writerow(["savings_pct", f"{report.savings_pct:.6f}"])
        writer.writerow(["sensor_savings_pct", f"{report.sensor_savings_pct:.6f}"])
        writer.writerow(["reference_savings_pct", f"{report.reference_savings_pct:.6f}"])
    if figures:
        from .plots import render_energy_figure

        render_energy_figure(report, _figure_path(report_path, "energy"))


def _print_energy_report(report: EnergyReport) -> None:
    print(f"baseline   {report.baseline.scheme}:{report.baseline.bits}  "
          f"expected energy {report.baseline_energy:.3f} units")
    print(f"candidate  {report.candidate.scheme}:{report.candidate.bits}  "
          f"expected energy {report.candidate_energy:.3f} units")
    print(f"ratio {report.ratio:.2f}x, ADC savings {report.savings_pct:.4f}%")
    print(f"sensor-level estimate (ADC share 50%): {report.sensor_savings_pct:.4f}%")
    print(f"reference comparison figure: {report.reference_savings_pct:.2f}%")


def _cmd_convert(args) -> int:
    summary = convert_batch(_build_job(args))
    return _summary_exit(summary)


def _cmd_invert(args) -> int:
    job = _build_job(args, default_inverse=DEFAULT_INVERT_STAGES)
    summary = invert_batch(job)
    return _summary_exit(summary)


def _cmd_roundtrip(args) -> int:
    job = _build_job(args)
    summary, rows, aggregate = roundtrip_batch(job)
    _print_quality(rows, aggregate)
    if job.report_path is not None:
        _write_quality_report(rows, aggregate, job.report_path, not args.no_figures)
    return _summary_exit(summary)


def _cmd_stats(args) -> int:
    rows, aggregate = stats_dirs(args.refs_dir, args.outs_dir)
    _print_quality(rows, aggregate)
    if args.report is not None:
        _write_quality_report(rows, aggregate, args.report, not args.no_figures)
    return 0


def _cmd_energy(args) -> int:
    samples = _dataset_samples(args.input_dir)
    report = energy_report_of_samples(
        samples, parse_adc_config(args.baseline), parse_adc_config(args.candidate)
    )
    _print_energy_report(report)
    if args.report is not None:
        _write_energy_report(report, args.report, not args.no_figures)
    return 0


def _cmd_levels(args) -> int:
    samples = _dataset_samples(args.input_dir)
    if args.scheme == "log":
        spec = make_quantizer("logarithmic", args.bits)
    elif args.scheme == "cdf":
        spec = cdf_levels(fit_lognormal(samples), args.bits)
    elif args.scheme == "lloyd":
        spec = lloyd_max(samples, args.bits).spec
    else:  # pragma: no cover - argparse choices guard this
        raise ConfigError(f"unknown scheme {args.scheme!r}")
    write_levels(spec, args.out_file)
    print(f"wrote {1 << args.bits} levels to {args.out_file}")
    if args.report is not None and not args.no_figures:
        from .plots import render_levels_figure

        args.report.parent.mkdir(parents=True, exist_ok=True)
        render_levels_figure(spec, samples, _figure_path(args.report, "levels"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ispsim",
        description="Reversible imaging-pipeline simulator and sensor energy model",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    for name, fn, doc in (
        ("convert", _cmd_convert, "inverse-then-forward conversion of a directory"),
        ("invert", _cmd_invert, "inverse-only conversion to PGM mosaics"),
        ("roundtrip", _cmd_roundtrip, "convert and report quality vs originals"),
    ):
        sub = subs.add_parser(name, help=doc)
        _add_job_flags(sub)
        sub.set_defaults(func=fn)

    sub = subs.add_parser("stats", help="quality table for two directories")
    sub.add_argument("--in", dest="refs_dir", type=Path, required=True,
                     help="reference image directory")
    sub.add_argument("--out", dest="outs_dir", type=Path, required=True,
                     help="converted image directory")
    sub.add_argument("--report", type=Path, help="CSV report path")
    sub.add_argument("--no-figures", action="store_true")
    sub.set_defaults(func=_cmd_stats)

    sub = subs.add_parser("energy", help="expected ADC readout energy comparison")
    sub.add_argument("--in", dest="input_dir", type=Path, required=True,
                     help="dataset directory (.pgm mosaics or RGB images)")
    sub.add_argument("--baseline", default="linear:12", help="SCHEME:BITS[:FLOOR]")
    sub.add_argument("--candidate", default="log:5", help="SCHEME:BITS[:FLOOR]")
    sub.add_argument("--report", type=Path, help="CSV report path")
    sub.add_argument("--no-figures", action="store_true")
    sub.set_defaults(func=_cmd_energy)

    sub = subs.add_parser("levels", help="design a quantizer level file")
    sub.add_argument("--in", dest="input_dir", type=Path, required=True)
    sub.add_argument("--scheme", choices=("log", "cdf", "lloyd"), required=True)
    sub.add_argument("--bits", type=int, required=True)
    sub.add_argument("--out", dest="out_file", type=Path, required=True,
                     help="level file to write")
    sub.add_argument("--report", type=Path, help="base path for the levels figure")
    sub.add_argument("--no-figures", action="store_true")
    sub.set_defaults(func=_cmd_levels)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ProfileError, QuantizerError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
