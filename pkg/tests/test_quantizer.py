import numpy as np
import pytest
from hypothesis import given, strategies as st

from ispsim.errors import QuantizerError
from ispsim.quantizer import (
    DEFAULT_LOG_FLOOR,
    QuantizerSpec,
    make_quantizer,
    quantize_array,
    quantize_value,
    read_levels,
    write_levels,
)


def nearest_level_oracle(v: float, spec: QuantizerSpec):
    """Exhaustive nearest-level search in the scheme's metric.

    Ties take the lower code (np.argmin returns the first minimum).
    """
    if spec.scheme == "logarithmic":
        clipped = min(max(v, spec.floor), 1.0)
        dist = np.abs(np.log(clipped) - np.log(spec.levels))
    else:
        dist = np.abs(v - spec.levels)
    code = int(np.argmin(dist))
    return code, float(spec.levels[code])


class TestMakeQuantizer:
    def test_linear_two_bits(self):
        spec = make_quantizer("linear", 2)
        assert np.allclose(spec.levels, [0.0, 1 / 3, 2 / 3, 1.0], atol=1e-15)

    def test_log_one_bit_endpoints(self):
        spec = make_quantizer("logarithmic", 1, floor=2.0**-12)
        assert spec.levels[0] == 2.0**-12
        assert spec.levels[-1] == 1.0

    def test_log_levels_match_direct_formula(self):
        f = 2.0**-12
        spec = make_quantizer("logarithmic", 3, floor=f)
        for k in range(8):
            assert spec.levels[k] == pytest.approx(f ** (1 - k / 7), rel=1e-14)

    def test_invalid_floor(self):
        with pytest.raises(QuantizerError):
            make_quantizer("logarithmic", 3, floor=0.0)
        with pytest.raises(QuantizerError):
            make_quantizer("logarithmic", 3, floor=1.5)

    def test_boundaries_interleave(self):
        for scheme in ("linear", "logarithmic"):
            spec = make_quantizer(scheme, 4)
            assert np.all(spec.boundaries > spec.levels[:-1])
            assert np.all(spec.boundaries < spec.levels[1:])


class TestQuantizeValue:
    def test_half_with_one_bit_log(self):
        # log-domain distance from 0.5 to 1.0 is one octave, to the floor
        # eleven octaves, so the top code wins
        spec = make_quantizer("logarithmic", 1, floor=2.0**-12)
        assert quantize_value(0.5, spec) == (1, 1.0)

    def test_zero_maps_to_code_zero(self):
        for scheme in ("linear", "logarithmic"):
            spec = make_quantizer(scheme, 4)
            code, _ = quantize_value(0.0, spec)
            assert code == 0

    def test_out_of_range_rejected(self):
        spec = make_quantizer("linear", 2)
        with pytest.raises(QuantizerError):
            quantize_value(1.5, spec)

    @pytest.mark.parametrize("scheme", ["linear", "logarithmic"])
    @pytest.mark.parametrize("bits", [1, 2, 3, 5])
    def test_matches_exhaustive_metric_oracle(self, scheme, bits, rng):
        spec = make_quantizer(scheme, bits)
        for v in rng.uniform(0.0, 1.0, size=500):
            assert quantize_value(float(v), spec) == nearest_level_oracle(v, spec)

    def test_array_and_scalar_paths_agree(self, rng):
        spec = make_quantizer("logarithmic", 4)
        values = rng.uniform(0, 1, size=64)
        levels = quantize_array(values, spec)
        for v, lvl in zip(values, levels):
            assert quantize_value(float(v), spec)[1] == lvl


class TestInvariants:
    @given(st.floats(min_value=0.0, max_value=1.0), st.integers(1, 8))
    def test_idempotent(self, v, bits):
        spec = make_quantizer("linear", bits)
        _, level = quantize_value(v, spec)
        assert quantize_value(level, spec)[1] == level

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
        st.integers(1, 8),
        st.sampled_from(["linear", "logarithmic"]),
    )
    def test_monotone_codes(self, v1, v2, bits, scheme):
        spec = make_quantizer(scheme, bits)
        lo, hi = min(v1, v2), max(v1, v2)
        assert quantize_value(lo, spec)[0] <= quantize_value(hi, spec)[0]

    @given(st.floats(min_value=0.0, max_value=1.0), st.integers(1, 8))
    def test_linear_error_bounded_by_half_bin(self, v, bits):
        spec = make_quantizer("linear", bits)
        _, level = quantize_value(v, spec)
        spacing = 1.0 / (2**bits - 1) if bits > 1 else 1.0
        assert abs(v - level) <= spacing / 2 + 1e-15

    def test_log_error_bounded_in_log_metric(self, rng):
        spec = make_quantizer("logarithmic", 4)
        log_spacing = -np.log(spec.floor) / (2**4 - 1)
        for v in rng.uniform(spec.floor, 1.0, size=200):
            _, level = quantize_value(float(v), spec)
            assert abs(np.log(v) - np.log(level)) <= log_spacing / 2 + 1e-12


class TestLevelFiles:
    def test_round_trip_preserves_levels_exactly(self, tmp_path):
        spec = make_quantizer("logarithmic", 5)
        path = tmp_path / "levels.txt"
        write_levels(spec, path)
        again = read_levels(path)
        assert again == spec

    def test_header_carries_scheme_bits_floor(self, tmp_path):
        spec = make_quantizer("linear", 3)
        path = tmp_path / "levels.txt"
        write_levels(spec, path)
        header = path.read_text().splitlines()[0]
        assert header.split() == ["#", "linear", "3", "0.0"]

    def test_malformed_file_rejected(self, tmp_path):
        path = tmp_path / "levels.txt"
        path.write_text("0.5\n1.0\n")
        with pytest.raises(QuantizerError):
            read_levels(path)
