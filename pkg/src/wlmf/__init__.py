"""Wavelet-leader multifractal analysis and texture classification of 2D images."""

from .imaging import AugmentParams, BinaryMask, GrayImage, apply_mask_smooth, augment, load_image, load_mask, save_image
from .mfa import MfaConfig, analyze, compute_leaders, extract_mfa_features, log_cumulants
from .pipeline import PipelineConfig, extract_features
from .preprocess import EnhanceConfig, hist_equalize, rms_contrast, wavelet_morph_enhance
from .synth import CascadeSpec, FbmSpec, cascade2d, fbm2d
from .texture import glcm, haralick_features, texture_features
from .wavelet import daubechies_filters, dwt2, idwt2

__version__ = "0.1.0"

__all__ = [
    "AugmentParams",
    "BinaryMask",
    "CascadeSpec",
    "EnhanceConfig",
    "FbmSpec",
    "GrayImage",
    "MfaConfig",
    "PipelineConfig",
    "analyze",
    "apply_mask_smooth",
    "augment",
    "cascade2d",
    "compute_leaders",
    "daubechies_filters",
    "dwt2",
    "extract_features",
    "extract_mfa_features",
    "fbm2d",
    "glcm",
    "haralick_features",
    "hist_equalize",
    "idwt2",
    "load_image",
    "load_mask",
    "log_cumulants",
    "rms_contrast",
    "save_image",
    "texture_features",
    "wavelet_morph_enhance",
]
