import numpy as np
import pytest

from ispsim.image import BayerPattern, RawImage
from ispsim.quantizer import make_quantizer
from ispsim.sensor import (
    AdcConfig,
    EnergyModel,
    IntensityDistribution,
    energy_report,
    energy_report_of_samples,
    expected_adc_energy,
    measure_distribution,
    pixel_bin,
    roi_readout,
    sar_code_energy,
)


def make_raw(rng, shape=(8, 8), pattern=BayerPattern.RGGB):
    return RawImage(rng.uniform(0, 1, shape), pattern=pattern, continuous=True)


class TestPixelBin:
    def test_factor_one_is_identity(self, random_raw):
        out = pixel_bin(random_raw, 1)
        assert out is random_raw

    def test_four_by_four_red_mean_example(self):
        data = np.zeros((4, 4))
        data[0, 0], data[0, 2] = 0.2, 0.4
        data[2, 0], data[2, 2] = 0.2, 0.4
        raw = RawImage(data, continuous=True)
        out = pixel_bin(raw, 2)
        assert out.data.shape == (2, 2)
        assert out.data[0, 0] == pytest.approx(0.3, abs=1e-15)

    def test_constant_stays_constant(self):
        raw = RawImage(np.full((8, 8), 0.55), continuous=True)
        out = pixel_bin(raw, 2)
        assert np.allclose(out.data, 0.55, atol=1e-15)
        assert out.data.shape == (4, 4)

    def test_matches_per_channel_averaging_oracle(self, rng):
        raw = make_raw(rng, (8, 8))
        out = pixel_bin(raw, 2)
        cmap_in = raw.pattern.channel_map(8, 8)
        cmap_out = raw.pattern.channel_map(4, 4)
        for y in range(4):
            for x in range(4):
                macro = raw.data[(y // 2) * 4 : (y // 2) * 4 + 4,
                                 (x // 2) * 4 : (x // 2) * 4 + 4]
                cmacro = cmap_in[(y // 2) * 4 : (y // 2) * 4 + 4,
                                 (x // 2) * 4 : (x // 2) * 4 + 4]
                # same Bayer phase within the macro tile as the output site
                phase = (y % 2, x % 2)
                sites = macro[phase[0]::2, phase[1]::2]
                assert out.data[y, x] == pytest.approx(sites.mean(), abs=1e-15)
                assert cmap_out[y, x] == cmacro[phase[0], phase[1]]

    def test_per_channel_means_preserved_exactly(self, rng):
        raw = make_raw(rng, (16, 16))
        out = pixel_bin(raw, 2)
        cin = raw.pattern.channel_map(16, 16)
        cout = raw.pattern.channel_map(8, 8)
        for c in range(3):
            assert abs(
                raw.data[cin == c].mean() - out.data[cout == c].mean()
            ) < 1e-12

    def test_pattern_preserved(self, rng):
        raw = make_raw(rng, (8, 8), BayerPattern.GBRG)
        assert pixel_bin(raw, 2).pattern == BayerPattern.GBRG

    def test_invalid_factor_rejected(self, rng):
        raw = make_raw(rng, (8, 8))
        with pytest.raises(ValueError):
            pixel_bin(raw, 3)
        with pytest.raises(ValueError):
            pixel_bin(raw, 8)  # does not divide the 4x4 Bayer grid


class TestRoiReadout:
    def test_full_frame_is_identity(self, random_raw):
        out = roi_readout(random_raw, (0, 0, random_raw.height, random_raw.width))
        assert np.array_equal(out.data, random_raw.data)

    def test_even_offsets_preserve_phase(self, rng):
        raw = make_raw(rng, (8, 8))
        out = roi_readout(raw, (2, 2, 4, 4))
        assert out.pattern == raw.pattern
        # site (0, 0) of the crop senses the same channel as pattern origin
        assert np.array_equal(out.data, raw.data[2:6, 2:6])

    def test_random_crop_matches_index_translation_oracle(self, rng):
        raw = make_raw(rng, (10, 12))
        rect = (4, 6, 4, 6)
        out = roi_readout(raw, rect)
        for y in range(rect[2]):
            for x in range(rect[3]):
                assert out.data[y, x] == raw.data[rect[0] + y, rect[1] + x]

    def test_misaligned_or_out_of_bounds_rejected(self, rng):
        raw = make_raw(rng, (8, 8))
        with pytest.raises(ValueError):
            roi_readout(raw, (1, 0, 4, 4))
        with pytest.raises(ValueError):
            roi_readout(raw, (0, 0, 6, 10))


class TestSarEnergy:
    def test_one_bit_hand_trace(self):
        model = sar_code_energy(1)
        # single trial: charge 1 unit; rejected bit discharges 1 more
        assert model.per_code_energy.tolist() == [2.0, 1.0]

    def test_two_bit_all_traces(self):
        model = sar_code_energy(2)
        assert model.per_code_energy.tolist() == [6.0, 5.0, 4.0, 3.0]

    def test_endpoint_formulas(self):
        for bits in (1, 3, 7, 12):
            e = sar_code_energy(bits).per_code_energy
            assert e[-1] == 2**bits - 1
            assert e[0] == 2 * (2**bits - 1)

    @pytest.mark.parametrize("bits", [1, 2, 3, 4])
    def test_exhaustive_trial_by_trial_simulation(self, bits):
        model = sar_code_energy(bits)
        for code in range(2**bits):
            total = 0
            for trial in range(bits):
                weight = 2 ** (bits - 1 - trial)
                total += weight  # charge
                if not (code >> (bits - 1 - trial)) & 1:
                    total += weight  # reject discharges
            assert model.per_code_energy[code] == total

    def test_chain_monotone_in_set_bits(self):
        for bits in (2, 4, 6):
            e = sar_code_energy(bits).per_code_energy
            for m in range(2**bits):
                for extra in range(bits):
                    sup = m | (1 << extra)
                    if sup != m:
                        assert e[sup] < e[m]


class TestDistributions:
    def test_constant_image_concentrates_mass(self):
        spec = make_quantizer("linear", 3)
        raw = RawImage(np.full((4, 4), spec.levels[5]), bit_depth=3)
        dist = measure_distribution([raw], spec)
        assert dist.probabilities[5] == 1.0
        assert dist.probabilities.sum() == pytest.approx(1.0)

    def test_two_images_half_and_half(self):
        spec = make_quantizer("linear", 1)
        zeros = RawImage(np.zeros((4, 4)), bit_depth=1)
        ones = RawImage(np.ones((4, 4)), bit_depth=1)
        dist = measure_distribution([zeros, ones], spec)
        assert dist.probabilities.tolist() == [0.5, 0.5]

    def test_matches_direct_counting_oracle(self, rng):
        spec = make_quantizer("logarithmic", 3)
        images = [make_raw(rng, (6, 6)) for _ in range(3)]
        dist = measure_distribution(images, spec)
        counts = np.zeros(8)
        total = 0
        for img in images:
            for v in img.data.ravel():
                code = int(np.searchsorted(spec.boundaries, v, side="left"))
                counts[code] += 1
                total += 1
        assert np.array_equal(dist.probabilities, counts / total)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            measure_distribution([], make_quantizer("linear", 2))

    def test_probabilities_validated(self):
        with pytest.raises(ValueError):
            IntensityDistribution(np.array([0.5, 0.6]), np.array([0.0, 0.5, 1.0]))


class TestExpectedEnergy:
    def test_point_mass_selects_single_energy(self):
        model = sar_code_energy(2)
        dist = IntensityDistribution(
            np.array([1.0, 0.0, 0.0, 0.0]), np.linspace(0, 1, 5)
        )
        assert expected_adc_energy(dist, model) == model.per_code_energy[0]

    def test_uniform_two_code_average(self):
        model = EnergyModel(1, np.array([2.0, 1.0]))
        dist = IntensityDistribution(np.array([0.5, 0.5]), np.array([0.0, 0.5, 1.0]))
        assert expected_adc_energy(dist, model) == 1.5

    def test_length_mismatch_rejected(self):
        model = sar_code_energy(2)
        dist = IntensityDistribution(np.array([0.5, 0.5]), np.array([0.0, 0.5, 1.0]))
        with pytest.raises(ValueError):
            expected_adc_energy(dist, model)

    def test_linear_in_probabilities_and_bounded(self, rng):
        model = sar_code_energy(3)
        edges = np.linspace(0, 1, 9)
        p1 = rng.uniform(0, 1, 8)
        p1 /= p1.sum()
        p2 = rng.uniform(0, 1, 8)
        p2 /= p2.sum()
        e1 = expected_adc_energy(IntensityDistribution(p1, edges), model)
        e2 = expected_adc_energy(IntensityDistribution(p2, edges), model)
        for alpha in (0.0, 0.25, 0.5, 1.0):
            mix = alpha * p1 + (1 - alpha) * p2
            mixed = expected_adc_energy(IntensityDistribution(mix, edges), model)
            assert mixed == pytest.approx(alpha * e1 + (1 - alpha) * e2, rel=1e-12)
        assert model.per_code_energy.min() <= e1 <= model.per_code_energy.max()


class TestEnergyReport:
    def test_identical_configs_zero_savings(self, rng):
        images = [make_raw(rng, (8, 8)) for _ in range(2)]
        report = energy_report(images, AdcConfig("linear", 8), AdcConfig("linear", 8))
        assert report.savings_pct == pytest.approx(0.0, abs=1e-12)
        assert report.ratio == pytest.approx(1.0, abs=1e-12)

    def test_linear_12_vs_5_bounded_and_matches_direct_sum(self, rng):
        images = [make_raw(rng, (8, 8)) for _ in range(3)]
        report = energy_report(images, AdcConfig("linear", 12), AdcConfig("linear", 5))
        for energy, spec_bits, dist in (
            (report.baseline_energy, 12, report.baseline_dist),
            (report.candidate_energy, 5, report.candidate_dist),
        ):
            model = sar_code_energy(spec_bits)
            direct = sum(
                p * e for p, e in zip(dist.probabilities, model.per_code_energy)
            )
            assert energy == pytest.approx(direct, rel=1e-12)
            assert model.per_code_energy.min() <= energy <= model.per_code_energy.max()
        assert report.ratio <= (2 * (2**12 - 1)) / (2**5 - 1)

    def test_log5_vs_linear12_on_lognormal_saves_over_99pct(self, rng):
        samples = np.clip(rng.lognormal(-2.0, 0.5, size=200_000), 0.0, 1.0)
        report = energy_report_of_samples(
            samples, AdcConfig("linear", 12), AdcConfig("logarithmic", 5)
        )
        assert report.savings_pct >= 99.0
        assert report.sensor_savings_pct == pytest.approx(report.savings_pct / 2)
        assert report.reference_savings_pct == 99.95
