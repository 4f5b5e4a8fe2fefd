"""Super-resolution with a stationary-wavelet training objective.

The package layers a float64 reverse-mode tape (:mod:`waveletsr.tensor`),
an undecimated wavelet transform (:mod:`waveletsr.wavelet`), the combined
pixel/subband loss (:mod:`waveletsr.loss`), attention primitives
(:mod:`waveletsr.attention`), the upscaling network
(:mod:`waveletsr.model`), evaluation metrics (:mod:`waveletsr.metrics`),
and a command-line harness (:mod:`waveletsr.cli`).
"""

from .attention import (AttentionConfig, BucketAssignment, channel_attention,
                        nlsa, overlapping_cross_attention, spherical_lsh,
                        window_msa)
from .cli import evaluate_dirs
from .errors import ConfigError, DataFormatError, ShapeError
from .loss import (LossConfig, l1_rgb, lowhigh_emphasis_config, rgb_to_y,
                   subband_losses, swt_loss, total_loss, total_loss_grad,
                   uniform_config)
from .metrics import MetricReport, psnr, ssim
from .model import (AdamState, Model, ModelConfig, build_model,
                    count_mult_adds, count_params, forward, load_checkpoint,
                    save_checkpoint, train_step)
from .tensor import Tensor
from .wavelet import (SUPPORTED_FILTERS, FilterBank, SubbandPyramid,
                      make_filter, subband_labels, swt_adjoint, swt_forward,
                      swt_inverse)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AttentionConfig",
    "BucketAssignment",
    "ConfigError",
    "DataFormatError",
    "FilterBank",
    "LossConfig",
    "MetricReport",
    "Model",
    "ModelConfig",
    "ShapeError",
    "SubbandPyramid",
    "SUPPORTED_FILTERS",
    "Tensor",
    "build_model",
    "channel_attention",
    "count_mult_adds",
    "evaluate_dirs",
    "count_params",
    "forward",
    "l1_rgb",
    "load_checkpoint",
    "lowhigh_emphasis_config",
    "make_filter",
    "nlsa",
    "overlapping_cross_attention",
    "psnr",
    "rgb_to_y",
    "save_checkpoint",
    "spherical_lsh",
    "ssim",
    "subband_losses",
    "subband_labels",
    "swt_adjoint",
    "swt_forward",
    "swt_inverse",
    "swt_loss",
    "total_loss",
    "total_loss_grad",
    "train_step",
    "uniform_config",
    "window_msa",
]
