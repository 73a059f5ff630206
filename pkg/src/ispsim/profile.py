"""Per-camera parameters that make the forward pipeline concrete and the
reverse pipeline well-defined."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ProfileError
from .image import BayerPattern

_FIELDS = (
    "color_matrix",
    "gamma_scale",
    "gamma_exponent",
    "gamut_strength",
    "noise_a",
    "noise_b",
    "native_bit_depth",
    "pattern",
)


@dataclass(frozen=True, eq=False)
class CameraProfile:
    """Immutable camera description.

    color_matrix must be invertible; the gamma pair (gamma_scale,
    gamma_exponent) maps [0, 1] into [0, 1]; gamut_strength < 1 keeps the
    gamut compression map invertible on [0, 1]. The noise coefficients give
    a signal-dependent variance  noise_a * intensity + noise_b.
    """

    color_matrix: np.ndarray
    gamma_scale: float = 1.0
    gamma_exponent: float = 1.0 / 2.2
    gamut_strength: float = 0.1
    noise_a: float = 0.010
    noise_b: float = 0.0005
    native_bit_depth: int = 12
    pattern: BayerPattern = BayerPattern.RGGB

    def __post_init__(self):
        m = np.asarray(self.color_matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ProfileError(f"color_matrix must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ProfileError("color_matrix must be finite")
        if abs(np.linalg.det(m)) < 1e-12:
            raise ProfileError("color_matrix is singular (not invertible)")
        if not 0.0 < self.gamma_scale <= 1.0:
            raise ProfileError(
                f"gamma_scale must be in (0, 1] so output stays in [0, 1], "
                f"got {self.gamma_scale}"
            )
        if not 0.0 < self.gamma_exponent <= 1.0:
            raise ProfileError(
                f"gamma_exponent must be in (0, 1], got {self.gamma_exponent}"
            )
        if not 0.0 <= self.gamut_strength < 1.0:
            raise ProfileError(
                f"gamut_strength must be in [0, 1), got {self.gamut_strength}"
            )
        if self.noise_a < 0.0 or self.noise_b < 0.0:
            raise ProfileError("noise coefficients must be non-negative")
        if not 1 <= self.native_bit_depth <= 16:
            raise ProfileError(
                f"native_bit_depth must be in 1..16, got {self.native_bit_depth}"
            )
        object.__setattr__(self, "color_matrix", m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CameraProfile):
            return NotImplemented
        return np.array_equal(self.color_matrix, other.color_matrix) and (
            self.gamma_scale,
            self.gamma_exponent,
            self.gamut_strength,
            self.noise_a,
            self.noise_b,
            self.native_bit_depth,
            self.pattern,
        ) == (
            other.gamma_scale,
            other.gamma_exponent,
            other.gamut_strength,
            other.noise_a,
            other.noise_b,
            other.native_bit_depth,
            other.pattern,
        )

    @property
    def inverse_color_matrix(self) -> np.ndarray:
        return np.linalg.inv(self.color_matrix)


def parse_profile(text: str) -> CameraProfile:
    """Parse a JSON profile document. All fields must be present."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"profile is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProfileError("profile document must be a JSON object")
    missing = [name for name in _FIELDS if name not in doc]
    if missing:
        raise ProfileError(f"profile missing fields: {', '.join(missing)}")
    unknown = [name for name in doc if name not in _FIELDS]
    if unknown:
        raise ProfileError(f"profile has unknown fields: {', '.join(unknown)}")
    try:
        pattern = BayerPattern(doc["pattern"])
    except ValueError as exc:
        raise ProfileError(f"unknown Bayer pattern {doc['pattern']!r}") from exc
    return CameraProfile(
        color_matrix=np.asarray(doc["color_matrix"], dtype=np.float64),
        gamma_scale=float(doc["gamma_scale"]),
        gamma_exponent=float(doc["gamma_exponent"]),
        gamut_strength=float(doc["gamut_strength"]),
        noise_a=float(doc["noise_a"]),
        noise_b=float(doc["noise_b"]),
        native_bit_depth=int(doc["native_bit_depth"]),
        pattern=pattern,
    )


def serialize_profile(profile: CameraProfile) -> str:
    """Serialize a profile so that parse_profile round-trips it exactly."""
    doc = {
        "color_matrix": profile.color_matrix.tolist(),
        "gamma_scale": profile.gamma_scale,
        "gamma_exponent": profile.gamma_exponent,
        "gamut_strength": profile.gamut_strength,
        "noise_a": profile.noise_a,
        "noise_b": profile.noise_b,
        "native_bit_depth": profile.native_bit_depth,
        "pattern": profile.pattern.value,
    }
    return json.dumps(doc, indent=2) + "\n"


def load_profile(path) -> CameraProfile:
    """Load a profile from a JSON file."""
    path = Path(path)
    if not path.exists():
        raise ProfileError(f"{path}: no such profile file")
    return parse_profile(path.read_text())


def default_profile() -> CameraProfile:
    """The reference synthetic camera shipped with the package.

    Loaded from the bundled profiles/default.json so the file, not the
    code, is the source of truth for the constants.
    """
    text = resources.files("ispsim").joinpath("profiles/default.json").read_text()
    return parse_profile(text)
