import numpy as np
import pytest

from ispsim.errors import ProfileError
from ispsim.image import BayerPattern
from ispsim.profile import (
    CameraProfile,
    default_profile,
    load_profile,
    parse_profile,
    serialize_profile,
)


def test_default_profile_constants():
    p = default_profile()
    assert np.array_equal(p.color_matrix, np.diag([1.0, 0.85, 1.05]))
    assert p.gamma_scale == 1.0
    assert p.gamma_exponent == 1.0 / 2.2
    assert p.gamut_strength == 0.1
    assert p.noise_a == 0.010
    assert p.noise_b == 0.0005
    assert p.native_bit_depth == 12
    assert p.pattern == BayerPattern.RGGB


def test_repo_profile_file_matches_default():
    from pathlib import Path

    repo_copy = Path(__file__).resolve().parent.parent / "profiles" / "default.json"
    assert load_profile(repo_copy) == default_profile()


def test_singular_matrix_rejected():
    with pytest.raises(ProfileError):
        CameraProfile(color_matrix=np.ones((3, 3)))


def test_out_of_range_scalars_rejected():
    good = np.eye(3)
    with pytest.raises(ProfileError):
        CameraProfile(color_matrix=good, gamma_scale=1.5)
    with pytest.raises(ProfileError):
        CameraProfile(color_matrix=good, gamma_exponent=0.0)
    with pytest.raises(ProfileError):
        CameraProfile(color_matrix=good, gamut_strength=1.0)
    with pytest.raises(ProfileError):
        CameraProfile(color_matrix=good, noise_a=-0.1)


def test_missing_and_unknown_fields_rejected():
    text = serialize_profile(default_profile())
    import json

    doc = json.loads(text)
    del doc["noise_a"]
    with pytest.raises(ProfileError, match="missing"):
        parse_profile(json.dumps(doc))
    doc = json.loads(text)
    doc["extra"] = 1
    with pytest.raises(ProfileError, match="unknown"):
        parse_profile(json.dumps(doc))


def test_serialize_parse_round_trip_is_exact(rng):
    m = np.eye(3) + rng.uniform(-0.2, 0.2, (3, 3))
    original = CameraProfile(
        color_matrix=m,
        gamma_scale=0.97,
        gamma_exponent=0.41,
        gamut_strength=0.23,
        noise_a=0.0123,
        noise_b=0.00041,
        native_bit_depth=14,
        pattern=BayerPattern.GBRG,
    )
    again = parse_profile(serialize_profile(original))
    assert again == original


def test_color_matrix_inverse_within_1e12(profile):
    product = profile.color_matrix @ profile.inverse_color_matrix
    assert np.max(np.abs(product - np.eye(3))) < 1e-12
