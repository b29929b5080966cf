"""Egocentric scene narration from depth maps and polygon annotations."""

from .annotations import (
    AnnotationParseError,
    Rect,
    Segment,
    SegmentMask,
    best_box_match,
    hull_contains_points,
    in_hull,
    iou,
    load_annotations,
    load_mask,
    mask_to_bbox,
    parse_annotations,
    save_mask,
)
from .depth import (
    DEFAULT_SENTINELS,
    DepthFormatError,
    DepthMap,
    NoValidDepthError,
    RegionDepthStats,
    load_depth,
    mean_filter,
    region_depth_stats,
    save_depth,
)
from .geometry import (
    CameraModel,
    Centroid3D,
    DirectionField,
    Field,
    back_project,
    classify_direction,
    direction_angle,
    region_centroid,
)
from .narration import (
    SceneDescription,
    compose_scene,
    euler_trails,
    render_relation,
)
from .pipeline import (
    ConfigError,
    PipelineConfig,
    PipelineResult,
    TimingReport,
    TimingSummary,
    bench,
    load_config,
    run,
    run_loaded,
)
from .relations import (
    Box3D,
    FieldAdjacency,
    Relation,
    RelationKind,
    RelationThresholds,
    build_adjacency,
    build_box3d,
    detect_ground_background,
    relate,
)
from .synthscene import (
    GenerationError,
    GroundTruth,
    SceneSpec,
    SlabSpec,
    evaluate,
    generate,
    load_truth,
    write_scene,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationParseError",
    "Box3D",
    "CameraModel",
    "Centroid3D",
    "ConfigError",
    "DEFAULT_SENTINELS",
    "DepthFormatError",
    "DepthMap",
    "DirectionField",
    "Field",
    "FieldAdjacency",
    "GenerationError",
    "GroundTruth",
    "NoValidDepthError",
    "PipelineConfig",
    "PipelineResult",
    "Rect",
    "RegionDepthStats",
    "Relation",
    "RelationKind",
    "RelationThresholds",
    "SceneDescription",
    "SceneSpec",
    "Segment",
    "SegmentMask",
    "SlabSpec",
    "TimingReport",
    "TimingSummary",
    "back_project",
    "bench",
    "best_box_match",
    "build_adjacency",
    "build_box3d",
    "classify_direction",
    "compose_scene",
    "detect_ground_background",
    "direction_angle",
    "euler_trails",
    "evaluate",
    "generate",
    "hull_contains_points",
    "in_hull",
    "iou",
    "load_annotations",
    "load_config",
    "load_depth",
    "load_mask",
    "load_truth",
    "mask_to_bbox",
    "mean_filter",
    "parse_annotations",
    "region_centroid",
    "region_depth_stats",
    "relate",
    "render_relation",
    "run",
    "run_loaded",
    "save_depth",
    "save_mask",
    "write_scene",
]
