"""Configurable, reversible imaging-pipeline simulator.

Forward mode runs parameterized ISP stages on Bayer mosaics; reverse mode
approximates RAW sensor data from processed RGB images; the sensor layer
models vision-mode readout (subsampling, binning, ROI, nonlinear ADC
quantization) and expected SAR ADC readout energy.
"""

from .config import InverseConfig, JobConfig, PipelineConfig, StageDescriptor, parse_config
from .errors import (
    ConfigError,
    ImageError,
    PipelineError,
    ProfileError,
    QuantizerError,
)
from .forward import (
    color_transform,
    demosaic,
    denoise,
    gamma_compress,
    gamut_map,
    quantize_image,
    run_forward,
)
from .image import (
    BayerPattern,
    QualityReport,
    RawImage,
    RgbImage,
    load_raw,
    load_rgb,
    psnr,
    save_raw,
    save_rgb,
)
from .inverse import (
    gamma_expand,
    inject_noise,
    inverse_color_transform,
    inverse_gamut,
    remosaic,
    requantize,
    run_inverse,
)
from .levels import LogNormalFit, build_histogram, cdf_levels, fit_lognormal, lloyd_max
from .profile import CameraProfile, default_profile, load_profile
from .quantizer import QuantizerSpec, make_quantizer, quantize_value, read_levels, write_levels
from .sensor import (
    AdcConfig,
    EnergyModel,
    EnergyReport,
    IntensityDistribution,
    energy_report,
    expected_adc_energy,
    measure_distribution,
    pixel_bin,
    roi_readout,
    sar_code_energy,
)

__version__ = "0.1.0"
