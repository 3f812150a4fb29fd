"""Selective-scan kernels, bidirectional token mixers and video token layouts."""

from ._vmsuite import (
    Block,
    EmptyVideo,
    GoldenMismatch,
    InsufficientPoints,
    LayoutMismatch,
    OddInnerWidth,
    ShapeMismatch,
    VmsError,
    adapter_forward,
    arrange_multimodal,
    attention_naive,
    discretize_zoh,
    extract_video,
    fit_loglog,
    flatten_spacetime,
    golden_verify,
    init_ssm_params,
    param_audit,
    pool_cls,
    selective_scan,
    selective_scan_backward,
    toy_train,
)

__all__ = [
    "Block",
    "EmptyVideo",
    "GoldenMismatch",
    "InsufficientPoints",
    "LayoutMismatch",
    "OddInnerWidth",
    "ShapeMismatch",
    "VmsError",
    "adapter_forward",
    "arrange_multimodal",
    "attention_naive",
    "discretize_zoh",
    "extract_video",
    "fit_loglog",
    "flatten_spacetime",
    "golden_verify",
    "init_ssm_params",
    "param_audit",
    "pool_cls",
    "selective_scan",
    "selective_scan_backward",
    "toy_train",
]
