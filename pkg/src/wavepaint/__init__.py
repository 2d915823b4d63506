"""Wavelet-token-mixing image inpainting toolkit."""

from .features import ConvFeatureExtractor, load_feature_extractor, save_feature_extractor
from .losses import (
    IdentityExtractor,
    LossWeights,
    hybrid_loss,
    l1_loss,
    l2_loss,
    lpips_distance,
    psnr,
)
from .masks import MaskPolicy, default_policy, generate_mask
from .metrics import fid
from .model import (
    ModelConfig,
    WavePaint,
    composite,
    count_parameters,
    parameter_store,
)
from .wavelet import SubbandSet, dwt2_haar, dwt2_multilevel, idwt2_haar

__version__ = "0.1.0"

__all__ = [
    "ConvFeatureExtractor",
    "IdentityExtractor",
    "LossWeights",
    "MaskPolicy",
    "ModelConfig",
    "SubbandSet",
    "WavePaint",
    "composite",
    "count_parameters",
    "default_policy",
    "dwt2_haar",
    "dwt2_multilevel",
    "fid",
    "generate_mask",
    "hybrid_loss",
    "idwt2_haar",
    "l1_loss",
    "l2_loss",
    "load_feature_extractor",
    "lpips_distance",
    "parameter_store",
    "psnr",
    "save_feature_extractor",
    "__version__",
]
