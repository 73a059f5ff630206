"""Exception hierarchy shared across the package."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ImageError(PipelineError):
    """Malformed image data or unreadable/unsupported image file."""


class ProfileError(PipelineError):
    """Invalid camera profile (singular matrix, out-of-range scalar, missing field)."""


class QuantizerError(PipelineError):
    """Invalid quantizer construction or degenerate level placement."""


class ConfigError(PipelineError):
    """Invalid pipeline or job configuration. CLI maps this to exit code 2."""
