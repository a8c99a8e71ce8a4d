"""Zero-reference low-light enhancement with learnable 3D lookup tables."""

__version__ = "0.1.0"

from .curve import CURVE_MODES, curve_step, derive_params, enhance
from .estimators import LightAdjustmentLUT, NoiseSuppressionLUT
from .imgio import ImageFormatError, load_image, save_image
from .kernels import run_pipeline
from .losses import (LossReport, LossWeights, color_loss, diff_loss, exposure_loss,
                     smoothing_loss, structural_loss, total_loss)
from .lut import (COLOR_RANGE, PARAM_RANGE, Lut3D, LutFormatError, constant_lut, identity_lut,
                  load_lut, lookup, lookup_gradient, save_lut)
from .metrics import MetricReport, evaluate, psnr, ssim
from .noise import (NoiseSchedule, WeightMapFormatError, forward_noise, load_weight_map,
                    save_weight_map, suppress, weight_map_uniform)
from .optim import SGD, Adam, OptimConfig, backprop_pipeline, fit_llut, fit_nlut, load_config
from .spectral import phase_only_reconstruction

__all__ = [
    "__version__", "CURVE_MODES", "curve_step", "derive_params", "enhance",
    "LightAdjustmentLUT", "NoiseSuppressionLUT", "ImageFormatError", "load_image", "save_image",
    "run_pipeline", "LossReport", "LossWeights", "color_loss", "diff_loss", "exposure_loss",
    "smoothing_loss", "structural_loss", "total_loss", "COLOR_RANGE", "PARAM_RANGE", "Lut3D",
    "LutFormatError", "constant_lut", "identity_lut", "load_lut", "lookup", "lookup_gradient",
    "save_lut", "MetricReport", "evaluate", "psnr", "ssim", "NoiseSchedule", "WeightMapFormatError",
    "forward_noise", "load_weight_map", "save_weight_map", "suppress", "weight_map_uniform",
    "SGD", "Adam", "OptimConfig", "backprop_pipeline", "fit_llut", "fit_nlut", "load_config",
    "phase_only_reconstruction",
]
