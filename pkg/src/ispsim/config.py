"""Pipeline and batch-job configuration: stage grammar, validation,
serialization.

Forward stage strings, applied in this canonical order:

    roi:ROW0:COL0:ROWS:COLS   sensor region-of-interest readout
    bin[:FACTOR]              sensor pixel binning (default factor 2)
    denoise[:STRENGTH[:PATCH[:WINDOW]]]   non-local means (0.1, 3, 7)
    demosaic[:METHOD]         bilinear | nearest_neighbor | subsample
    color                     profile color matrix
    gamut                     profile gamut compression
    gamma                     profile gamma compression
    quantize[:SCHEME[:BITS[:FLOOR]]]      linear | log (default linear:8)

Inverse stage names (fixed order, no inline options):

    inv_gamma inv_gamut inv_color remosaic noise requantize

with `seed` and `target_bits` keys alongside the stage list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .quantizer import DEFAULT_LOG_FLOOR

SENSOR_STAGES = ("roi", "bin")
ISP_STAGE_ORDER = ("denoise", "demosaic", "color", "gamut", "gamma", "quantize")
FULL_STAGE_ORDER = SENSOR_STAGES + ISP_STAGE_ORDER
INVERSE_STAGE_ORDER = (
    "inv_gamma",
    "inv_gamut",
    "inv_color",
    "remosaic",
    "noise",
    "requantize",
)

_QUANTIZE_SCHEMES = {"linear": "linear", "log": "logarithmic", "logarithmic": "logarithmic"}
_DEMOSAIC_METHODS = ("bilinear", "nearest_neighbor", "subsample")


@dataclass(frozen=True)
class StageDescriptor:
    stage: str
    options: dict = field(default_factory=dict)


def _int_option(stage: str, name: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"stage {stage!r}: {name} must be an integer, got {raw!r}")


def _float_option(stage: str, name: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"stage {stage!r}: {name} must be a number, got {raw!r}")


def parse_stage(text: str) -> StageDescriptor:
    """Parse one forward stage string per the grammar above."""
    parts = text.split(":")
    name, args = parts[0], parts[1:]

    if name == "roi":
        if len(args) != 4:
            raise ConfigError("roi stage needs roi:ROW0:COL0:ROWS:COLS")
        row0, col0, rows, cols = (_int_option("roi", "argument", a) for a in args)
        return StageDescriptor("roi", {"row0": row0, "col0": col0, "rows": rows, "cols": cols})

    if name == "bin":
        if len(args) > 1:
            raise ConfigError("bin stage takes at most one option: bin[:FACTOR]")
        factor = _int_option("bin", "factor", args[0]) if args else 2
        if factor < 1 or factor & (factor - 1):
            raise ConfigError(f"bin factor must be a power of two, got {factor}")
        return StageDescriptor("bin", {"factor": factor})

    if name == "denoise":
        if len(args) > 3:
            raise ConfigError("denoise takes denoise[:STRENGTH[:PATCH[:WINDOW]]]")
        strength = _float_option(name, "strength", args[0]) if len(args) > 0 else 0.1
        patch = _int_option(name, "patch", args[1]) if len(args) > 1 else 3
        window = _int_option(name, "window", args[2]) if len(args) > 2 else 7
        if strength < 0:
            raise ConfigError(f"denoise strength must be >= 0, got {strength}")
        if patch % 2 == 0 or window % 2 == 0 or patch > window:
            raise ConfigError(
                f"denoise patch/window must be odd with patch <= window, "
                f"got {patch}, {window}"
            )
        return StageDescriptor(
            "denoise", {"strength": strength, "patch": patch, "window": window}
        )

    if name == "demosaic":
        if len(args) > 1:
            raise ConfigError("demosaic takes demosaic[:METHOD]")
        method = args[0] if args else "bilinear"
        if method not in _DEMOSAIC_METHODS:
            raise ConfigError(
                f"unknown demosaic method {method!r}; choose from {_DEMOSAIC_METHODS}"
            )
        return StageDescriptor("demosaic", {"method": method})

    if name in ("color", "gamut", "gamma"):
        if args:
            raise ConfigError(f"stage {name!r} takes no options")
        return StageDescriptor(name, {})

    if name == "quantize":
        if len(args) > 3:
            raise ConfigError("quantize takes quantize[:SCHEME[:BITS[:FLOOR]]]")
        scheme_arg = args[0] if args else "linear"
        if scheme_arg not in _QUANTIZE_SCHEMES:
            raise ConfigError(
                f"unknown quantize scheme {scheme_arg!r}; choose linear or log"
            )
        scheme = _QUANTIZE_SCHEMES[scheme_arg]
        bits = _int_option(name, "bits", args[1]) if len(args) > 1 else 8
        floor = _float_option(name, "floor", args[2]) if len(args) > 2 else DEFAULT_LOG_FLOOR
        if not 1 <= bits <= 16:
            raise ConfigError(f"quantize bits must be in 1..16, got {bits}")
        if not 0.0 < floor < 1.0:
            raise ConfigError(f"quantize floor must be in (0, 1), got {floor}")
        return StageDescriptor(
            "quantize", {"scheme": scheme, "bits": bits, "floor": floor}
        )

    raise ConfigError(f"unknown stage name {name!r}")


def format_stage(desc: StageDescriptor) -> str:
    """Canonical stage string; parse_stage(format_stage(d)) == d."""
    o = desc.options
    if desc.stage == "roi":
        return f"roi:{o['row0']}:{o['col0']}:{o['rows']}:{o['cols']}"
    if desc.stage == "bin":
        return f"bin:{o['factor']}"
    if desc.stage == "denoise":
        return f"denoise:{o['strength']!r}:{o['patch']}:{o['window']}"
    if desc.stage == "demosaic":
        return f"demosaic:{o['method']}"
    if desc.stage == "quantize":
        return f"quantize:{o['scheme']}:{o['bits']}:{o['floor']!r}"
    return desc.stage


@dataclass(frozen=True)
class PipelineConfig:
    """Ordered forward stage list; must be a subsequence of the canonical
    stage order with no duplicates."""

    stages: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        self.require_subsequence(FULL_STAGE_ORDER, context="pipeline")

    @classmethod
    def from_strings(cls, texts) -> "PipelineConfig":
        return cls(tuple(parse_stage(t) for t in texts))

    def to_strings(self) -> list[str]:
        return [format_stage(s) for s in self.stages]

    def require_subsequence(self, order, context: str) -> tuple:
        last = -1
        for desc in self.stages:
            if desc.stage not in order:
                raise ConfigError(
                    f"{context}: stage {desc.stage!r} is not allowed here "
                    f"(expected one of {', '.join(order)})"
                )
            idx = order.index(desc.stage)
            if idx == last:
                raise ConfigError(f"{context}: duplicate stage {desc.stage!r}")
            if idx < last:
                raise ConfigError(
                    f"{context}: stage {desc.stage!r} out of canonical order "
                    f"{' -> '.join(order)}"
                )
            last = idx
        return self.stages

    def has(self, name: str) -> bool:
        return any(s.stage == name for s in self.stages)

    def get(self, name: str) -> StageDescriptor | None:
        for s in self.stages:
            if s.stage == name:
                return s
        return None


@dataclass(frozen=True)
class InverseConfig:
    """Enabled inverse stages (fixed order), noise seed, requantize target."""

    stages: tuple = ()
    seed: int | None = None
    target_bits: int = 12

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        last = -1
        for name in self.stages:
            if name not in INVERSE_STAGE_ORDER:
                raise ConfigError(
                    f"inverse pipeline: unknown stage {name!r} "
                    f"(expected one of {', '.join(INVERSE_STAGE_ORDER)})"
                )
            idx = INVERSE_STAGE_ORDER.index(name)
            if idx == last:
                raise ConfigError(f"inverse pipeline: duplicate stage {name!r}")
            if idx < last:
                raise ConfigError(
                    f"inverse pipeline: stage {name!r} out of canonical order"
                )
            last = idx
        if not 1 <= self.target_bits <= 16:
            raise ConfigError(
                f"requantize target_bits must be in 1..16, got {self.target_bits}"
            )

    def has(self, name: str) -> bool:
        return name in self.stages


FULL_INVERSE_STAGES = ("inv_gamma", "inv_gamut", "inv_color", "remosaic", "requantize")


@dataclass(frozen=True)
class JobConfig:
    """A batch conversion job: directories, profile, pipeline, determinism."""

    input_dir: Path
    output_dir: Path
    profile_path: Path | None = None
    forward: PipelineConfig = field(default_factory=PipelineConfig)
    inverse: InverseConfig = field(default_factory=InverseConfig)
    seed: int = 0
    workers: int = 1
    report_path: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "input_dir", Path(self.input_dir))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.profile_path is not None:
            object.__setattr__(self, "profile_path", Path(self.profile_path))
        if self.report_path is not None:
            object.__setattr__(self, "report_path", Path(self.report_path))
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.seed < 0 or self.seed > 2**63 - 1:
            raise ConfigError("seed must fit in a non-negative 64-bit integer")
        # A mosaic only exists downstream of remosaic, so mosaic-consuming
        # forward stages need it.
        needs_mosaic = [
            s for s in ("roi", "bin", "demosaic") if self.forward.has(s)
        ]
        if needs_mosaic and not self.inverse.has("remosaic"):
            raise ConfigError(
                f"forward stage(s) {', '.join(needs_mosaic)} need mosaiced input: "
                "enable remosaic in the inverse pipeline"
            )

    @property
    def noise_seed(self) -> int:
        return self.inverse.seed if self.inverse.seed is not None else self.seed


_JOB_KEYS = (
    "input_dir",
    "output_dir",
    "profile",
    "seed",
    "workers",
    "report",
    "pipeline",
)
_PIPELINE_KEYS = ("forward", "inverse")
_INVERSE_KEYS = ("stages", "seed", "target_bits")


def job_config_from_dict(doc: dict) -> JobConfig:
    if not isinstance(doc, dict):
        raise ConfigError("job config must be a JSON object")
    unknown = [k for k in doc if k not in _JOB_KEYS]
    if unknown:
        raise ConfigError(f"unknown job config keys: {', '.join(unknown)}")
    for required in ("input_dir", "output_dir"):
        if required not in doc:
            raise ConfigError(f"job config missing required key {required!r}")

    pipeline = doc.get("pipeline", {})
    if not isinstance(pipeline, dict):
        raise ConfigError("'pipeline' must be an object")
    unknown = [k for k in pipeline if k not in _PIPELINE_KEYS]
    if unknown:
        raise ConfigError(f"unknown pipeline keys: {', '.join(unknown)}")
    forward = PipelineConfig.from_strings(pipeline.get("forward", []))

    inv_doc = pipeline.get("inverse", {})
    if not isinstance(inv_doc, dict):
        raise ConfigError("'inverse' must be an object")
    unknown = [k for k in inv_doc if k not in _INVERSE_KEYS]
    if unknown:
        raise ConfigError(f"unknown inverse pipeline keys: {', '.join(unknown)}")
    inverse = InverseConfig(
        stages=tuple(inv_doc.get("stages", [])),
        seed=inv_doc.get("seed"),
        target_bits=int(inv_doc.get("target_bits", 12)),
    )

    return JobConfig(
        input_dir=Path(doc["input_dir"]),
        output_dir=Path(doc["output_dir"]),
        profile_path=Path(doc["profile"]) if "profile" in doc else None,
        forward=forward,
        inverse=inverse,
        seed=int(doc.get("seed", 0)),
        workers=int(doc.get("workers", 1)),
        report_path=Path(doc["report"]) if "report" in doc else None,
    )


def job_config_to_dict(job: JobConfig) -> dict:
    doc: dict = {
        "input_dir": str(job.input_dir),
        "output_dir": str(job.output_dir),
        "seed": job.seed,
        "workers": job.workers,
        "pipeline": {
            "forward": job.forward.to_strings(),
            "inverse": {
                "stages": list(job.inverse.stages),
                "target_bits": job.inverse.target_bits,
            },
        },
    }
    if job.inverse.seed is not None:
        doc["pipeline"]["inverse"]["seed"] = job.inverse.seed
    if job.profile_path is not None:
        doc["profile"] = str(job.profile_path)
    if job.report_path is not None:
        doc["report"] = str(job.report_path)
    return doc


def parse_config(path) -> JobConfig:
    """Load and validate a job config file (JSON). Unknown keys are rejected."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such config file")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return job_config_from_dict(doc)


def write_config(job: JobConfig, path) -> None:
    Path(path).write_text(json.dumps(job_config_to_dict(job), indent=2) + "\n")
