"""Radar-camera depth enhancement: structure-aware dilation of sparse
radar returns guided by monocular depth, confidence-based noise
filtering, scaffolding supervision, and toy-scale fusion networks."""

from .association import (
    assemble_enhanced,
    bce_loss,
    confidence_ground_truth,
    filter_by_confidence,
)
from .blocks import (
    AfbWeights,
    MsgNetWeights,
    RcaNetWeights,
    SaebWeights,
    ToyNetConfig,
    WeightFileError,
    afb_forward,
    depth_loss,
    init_afb,
    init_msgnet,
    init_rcanet,
    init_saeb,
    load_weights,
    residual_compose,
    saeb_forward,
    save_weights,
    toy_msgnet_forward,
    toy_rcanet_forward,
    train_msgnet,
    train_rcanet,
    zero_afb,
    zero_msgnet,
    zero_rcanet,
    zero_saeb,
)
from .dilation import (
    EnhancementParams,
    RoiLabelMap,
    fast_backend_available,
    grow_roi,
    structure_aware_dilate,
)
from .interpolation import scaffold_interpolate
from .metrics import DEFAULT_RANGES, EvalReport, evaluate, evaluate_ranges
from .projection import (
    Box3D,
    CameraModel,
    PointCloud,
    Pose,
    accumulate_lidar,
    backproject,
    project_points,
    remove_dynamic_points,
)
from .synth import SceneBundle, SceneSpec, generate_scene, load_scene, save_scene
from .types import (
    ConfidenceMap,
    DepthMap,
    EmptyRegionError,
    EnhancedRadarDepth,
    Image,
    InsufficientSupportError,
    InvalidSeedError,
    RdmError,
    ShapeMismatchError,
    ValidMask,
    read_confidence,
    read_depth_png16,
    read_rdm,
    write_confidence,
    write_rdm,
)

__version__ = "0.1.0"

__all__ = [
    "AfbWeights",
    "Box3D",
    "CameraModel",
    "ConfidenceMap",
    "DEFAULT_RANGES",
    "DepthMap",
    "EmptyRegionError",
    "EnhancementParams",
    "EnhancedRadarDepth",
    "EvalReport",
    "Image",
    "InsufficientSupportError",
    "InvalidSeedError",
    "MsgNetWeights",
    "PointCloud",
    "Pose",
    "RcaNetWeights",
    "RdmError",
    "RoiLabelMap",
    "SaebWeights",
    "SceneBundle",
    "SceneSpec",
    "ShapeMismatchError",
    "ToyNetConfig",
    "ValidMask",
    "WeightFileError",
    "accumulate_lidar",
    "afb_forward",
    "assemble_enhanced",
    "backproject",
    "bce_loss",
    "confidence_ground_truth",
    "depth_loss",
    "evaluate",
    "evaluate_ranges",
    "fast_backend_available",
    "filter_by_confidence",
    "generate_scene",
    "grow_roi",
    "init_afb",
    "init_msgnet",
    "init_rcanet",
    "init_saeb",
    "load_scene",
    "load_weights",
    "project_points",
    "read_confidence",
    "read_depth_png16",
    "read_rdm",
    "remove_dynamic_points",
    "residual_compose",
    "saeb_forward",
    "save_scene",
    "save_weights",
    "scaffold_interpolate",
    "structure_aware_dilate",
    "toy_msgnet_forward",
    "toy_rcanet_forward",
    "train_msgnet",
    "train_rcanet",
    "write_confidence",
    "write_rdm",
    "zero_afb",
    "zero_msgnet",
    "zero_rcanet",
    "zero_saeb",
    "__version__",
]
