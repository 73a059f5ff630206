import math

import numpy as np
import pytest

from ispsim.batch import (
    convert_batch,
    invert_batch,
    per_image_seed,
    roundtrip_batch,
    stats_dirs,
)
from ispsim.config import InverseConfig, JobConfig, PipelineConfig
from ispsim.errors import PipelineError
from ispsim.image import load_raw, load_rgb, save_rgb
from ispsim.synth import make_test_scenes

FULL_INVERSE = ("inv_gamma", "inv_gamut", "inv_color", "remosaic", "requantize")
FULL_FORWARD = ["demosaic:bilinear", "color", "gamut", "gamma", "quantize:linear:8"]


def write_scenes(directory, count, size=16):
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(make_test_scenes(count, size, size, seed=100)):
        path = directory / f"scene_{i:03d}.ppm"
        save_rgb(img, path)
        paths.append(path)
    return paths


def tree_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


class TestConvertBatch:
    def test_empty_input_dir_succeeds_with_zero_conversions(self, tmp_path):
        (tmp_path / "in").mkdir()
        job = JobConfig(input_dir=tmp_path / "in", output_dir=tmp_path / "out")
        summary = convert_batch(job)
        assert summary.converted == 0
        assert summary.ok

    def test_identity_pipeline_is_bitwise_noop(self, tmp_path):
        write_scenes(tmp_path / "in", 4)
        job = JobConfig(input_dir=tmp_path / "in", output_dir=tmp_path / "out")
        summary = convert_batch(job)
        assert summary.converted == 4 and summary.ok
        assert tree_bytes(tmp_path / "in") == tree_bytes(tmp_path / "out")

    def test_worker_count_does_not_change_outputs(self, tmp_path):
        write_scenes(tmp_path / "in", 10)
        base = dict(
            input_dir=tmp_path / "in",
            forward=PipelineConfig.from_strings(FULL_FORWARD),
            inverse=InverseConfig(stages=FULL_INVERSE),
            seed=7,
        )
        job1 = JobConfig(output_dir=tmp_path / "out1", workers=1, **base)
        job8 = JobConfig(output_dir=tmp_path / "out8", workers=8, **base)
        assert convert_batch(job1).ok
        assert convert_batch(job8).ok
        assert tree_bytes(tmp_path / "out1") == tree_bytes(tmp_path / "out8")

    def test_noise_is_deterministic_but_per_image(self, tmp_path):
        write_scenes(tmp_path / "in", 3)
        base = dict(
            input_dir=tmp_path / "in",
            forward=PipelineConfig.from_strings(FULL_FORWARD),
            inverse=InverseConfig(
                stages=("inv_gamma", "inv_gamut", "inv_color", "remosaic", "noise",
                        "requantize")
            ),
            seed=3,
        )
        job_a = JobConfig(output_dir=tmp_path / "outa", **base)
        job_b = JobConfig(output_dir=tmp_path / "outb", workers=4, **base)
        assert convert_batch(job_a).ok and convert_batch(job_b).ok
        assert tree_bytes(tmp_path / "outa") == tree_bytes(tmp_path / "outb")
        # distinct files draw distinct noise
        outs = tree_bytes(tmp_path / "outa")
        names = sorted(outs)
        assert outs[names[0]] != outs[names[1]]

    def test_corrupt_input_does_not_block_others(self, tmp_path):
        write_scenes(tmp_path / "in", 3)
        (tmp_path / "in" / "broken.ppm").write_text("P6 not really")
        job = JobConfig(input_dir=tmp_path / "in", output_dir=tmp_path / "out")
        summary = convert_batch(job)
        assert summary.converted == 3
        assert len(summary.failures) == 1
        assert summary.failures[0][0] == "broken.ppm"

    def test_per_image_seed_is_stable(self):
        assert per_image_seed(3, "a.ppm") == per_image_seed(3, "a.ppm")
        assert per_image_seed(3, "a.ppm") != per_image_seed(3, "b.ppm")
        assert per_image_seed(3, "a.ppm") != per_image_seed(4, "a.ppm")


class TestInvertBatch:
    def test_outputs_are_loadable_mosaics(self, tmp_path):
        write_scenes(tmp_path / "in", 2)
        job = JobConfig(
            input_dir=tmp_path / "in",
            output_dir=tmp_path / "out",
            inverse=InverseConfig(stages=FULL_INVERSE, target_bits=12),
        )
        summary = invert_batch(job)
        assert summary.ok and summary.converted == 2
        raws = sorted((tmp_path / "out").glob("*.pgm"))
        assert len(raws) == 2
        raw = load_raw(raws[0])
        assert raw.bit_depth == 12 and not raw.continuous

    def test_requires_remosaic(self, tmp_path):
        write_scenes(tmp_path / "in", 1)
        job = JobConfig(
            input_dir=tmp_path / "in",
            output_dir=tmp_path / "out",
            inverse=InverseConfig(stages=("inv_gamma",)),
        )
        summary = invert_batch(job)
        assert not summary.ok
        assert "remosaic" in summary.failures[0][1]


class TestRoundtrip:
    def test_reports_quality_per_file(self, tmp_path, profile):
        write_scenes(tmp_path / "in", 3, size=32)
        job = JobConfig(
            input_dir=tmp_path / "in",
            output_dir=tmp_path / "out",
            forward=PipelineConfig.from_strings(FULL_FORWARD),
            inverse=InverseConfig(stages=FULL_INVERSE, target_bits=12),
        )
        summary, rows, aggregate = roundtrip_batch(job)
        assert summary.ok
        assert len(rows) == 3
        assert all(r.report.psnr > 35.0 for r in rows)
        assert aggregate is not None
        mean_mse = float(np.mean([r.report.mse for r in rows]))
        assert aggregate.mse == pytest.approx(mean_mse, rel=1e-12)


class TestStats:
    def test_identical_dirs_hit_the_infinite_sentinel(self, tmp_path):
        write_scenes(tmp_path / "a", 3)
        write_scenes(tmp_path / "b", 3)
        rows, aggregate = stats_dirs(tmp_path / "a", tmp_path / "b")
        assert all(math.isinf(r.report.psnr) for r in rows)
        assert math.isinf(aggregate.psnr)

    def test_black_vs_white_row(self, tmp_path):
        from ispsim.image import RgbImage

        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        save_rgb(RgbImage(np.zeros((4, 4, 3))), tmp_path / "a" / "x.ppm")
        save_rgb(RgbImage(np.ones((4, 4, 3))), tmp_path / "b" / "x.ppm")
        rows, _ = stats_dirs(tmp_path / "a", tmp_path / "b")
        assert rows[0].report.psnr == 0.0
        assert rows[0].report.avg_pixel_error == 1.0

    def test_aggregate_is_mean_of_per_file_mse(self, tmp_path, rng):
        from ispsim.image import RgbImage

        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        mses = []
        for i in range(4):
            a = RgbImage(rng.uniform(0, 1, (6, 6, 3)))
            b = RgbImage(rng.uniform(0, 1, (6, 6, 3)))
            save_rgb(a, tmp_path / "a" / f"{i}.ppm")
            save_rgb(b, tmp_path / "b" / f"{i}.ppm")
            qa = load_rgb(tmp_path / "a" / f"{i}.ppm").data
            qb = load_rgb(tmp_path / "b" / f"{i}.ppm").data
            mses.append(np.mean((qa - qb) ** 2))
        _, aggregate = stats_dirs(tmp_path / "a", tmp_path / "b")
        assert aggregate.mse == pytest.approx(np.mean(mses), rel=1e-12)

    def test_missing_counterpart_raises(self, tmp_path):
        write_scenes(tmp_path / "a", 2)
        (tmp_path / "b").mkdir()
        with pytest.raises(PipelineError, match="missing counterpart"):
            stats_dirs(tmp_path / "a", tmp_path / "b")
