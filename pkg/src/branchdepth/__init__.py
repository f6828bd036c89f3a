"""Stereo depth estimation and per-instance 3D localization.

Dense metric depth from rectified stereo pairs via semi-global census
matching with edge-preserving refinement, fused with externally produced
instance masks into per-instance depth statistics and 3D centroids, plus
an evaluation harness and a synthetic ground-truth generator.
"""

from .core import (
    CameraCalibration,
    EmptyEvalError,
    FormatError,
    InsufficientDepthError,
    InvalidDepthError,
    NoDepthError,
    NoValidDataError,
    ParamError,
    PipelineError,
    Point3D,
    SceneSpecError,
    ShapeError,
    StereoFrame,
    back_project,
    depth_to_disparity,
    disparity_map_to_depth_map,
    disparity_to_depth,
    valid_depth_mask,
    valid_disparity_mask,
)
from .fusion import (
    BranchEstimate,
    Exclusion,
    SegmentMask,
    localize_branches,
    register_mask,
    summarize,
)
from .metrics import (
    EvalPair,
    average_precision,
    iou_box,
    iou_mask,
    map_50_95,
    rmse,
)
from .preprocess import PreprocessConfig, denoise, equalize_contrast, preprocess_image, to_grayscale
from .sgbm import (
    SgbmParams,
    SgbmResult,
    aggregate_costs,
    census_transform,
    compute_cost_volume,
    lr_consistency_filter,
    run_sgbm,
    select_disparity,
    sgbm_full,
    speckle_filter,
)
from .synthgen import BranchSpec, RenderedScene, SceneSpec, range_protocol, render_scene
from .wls import WlsParams, confidence_from_lr, wls_refine

__version__ = "0.1.0"

__all__ = [
    "BranchEstimate",
    "BranchSpec",
    "CameraCalibration",
    "EmptyEvalError",
    "EvalPair",
    "Exclusion",
    "FormatError",
    "InsufficientDepthError",
    "InvalidDepthError",
    "NoDepthError",
    "NoValidDataError",
    "ParamError",
    "PipelineError",
    "Point3D",
    "PreprocessConfig",
    "RenderedScene",
    "SceneSpec",
    "SceneSpecError",
    "SegmentMask",
    "SgbmParams",
    "SgbmResult",
    "ShapeError",
    "StereoFrame",
    "WlsParams",
    "aggregate_costs",
    "average_precision",
    "back_project",
    "census_transform",
    "compute_cost_volume",
    "confidence_from_lr",
    "denoise",
    "depth_to_disparity",
    "disparity_map_to_depth_map",
    "disparity_to_depth",
    "equalize_contrast",
    "iou_box",
    "iou_mask",
    "localize_branches",
    "lr_consistency_filter",
    "map_50_95",
    "preprocess_image",
    "range_protocol",
    "register_mask",
    "render_scene",
    "rmse",
    "run_sgbm",
    "select_disparity",
    "sgbm_full",
    "speckle_filter",
    "summarize",
    "to_grayscale",
    "valid_depth_mask",
    "valid_disparity_mask",
    "wls_refine",
]
