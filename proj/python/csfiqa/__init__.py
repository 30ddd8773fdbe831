"""CSFIQA: blind image quality assessment with scale-contrastive learning."""

from ._core import (
    ConfigError,
    DataError,
    InvalidMaskError,
    NumericError,
    Predictor,
    ShapeError,
    classify_pairs,
    cosine_sim,
    gradcheck,
    info_nce,
    masked_softmax,
    median,
    noise_loss,
    plcc,
    softmax,
    srcc,
    synth_data,
)

__all__ = [
    "ConfigError",
    "DataError",
    "InvalidMaskError",
    "NumericError",
    "Predictor",
    "ShapeError",
    "classify_pairs",
    "cosine_sim",
    "gradcheck",
    "info_nce",
    "masked_softmax",
    "median",
    "noise_loss",
    "plcc",
    "softmax",
    "srcc",
    "synth_data",
]
