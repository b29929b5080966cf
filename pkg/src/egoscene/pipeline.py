"""End-to-end orchestration: files in, description plus report out.

The pipeline stages are fixed: depth filtering, region centroids, direction
classification, relation matrices, narration. Each stage is wall-clocked
separately (microseconds) so the cheap per-frame logic can be benchmarked
apart from file handling.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field as dataclass_field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .annotations import Segment, load_annotations
from .depth import (
    DEFAULT_SENTINELS,
    DepthMap,
    NoValidDepthError,
    load_depth,
    mean_filter,
    region_depth_stats,
)
from .geometry import (
    FIELD_BY_CODE,
    CameraModel,
    Field,
    classify_directions_batch,
    direction_angles_batch,
    polygon_pixel_coords,
)
from .narration import SceneDescription, compose_scene, euler_trails
from .relations import (
    Box3D,
    FieldAdjacency,
    RelationThresholds,
    build_adjacency,
    detect_ground_background,
)

STAGE_NAMES = ("depth_filter", "centroids", "directions", "relations", "narration")


class ConfigError(ValueError):
    """Raised for unreadable, unknown, or out-of-range configuration."""


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the pipeline needs besides the input files."""

    camera: CameraModel = dataclass_field(default_factory=CameraModel)
    kernel: int = 3
    sentinels: frozenset[int] = DEFAULT_SENTINELS
    thresholds: RelationThresholds = dataclass_field(default_factory=RelationThresholds)
    caption_source: str = "annotations"

    def __post_init__(self) -> None:
        if self.caption_source not in ("annotations", "external"):
            raise ConfigError(
                f"caption_source must be 'annotations' or 'external', "
                f"got {self.caption_source!r}"
            )


_CONFIG_KEYS = {
    "focal_px",
    "principal_x",
    "principal_y",
    "kernel",
    "sentinels",
    "touch_tol_px",
    "near_z_mm",
    "overlap_min",
    "caption_source",
}


def config_from_dict(doc: dict) -> PipelineConfig:
    """Build a config from a JSON-style dict; every key has a default.

    Raises:
        ConfigError: unknown keys or invalid values.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        camera = CameraModel(
            focal_px=float(doc.get("focal_px", 580.0)),
            principal_x=float(doc.get("principal_x", 319.5)),
            principal_y=float(doc.get("principal_y", 239.5)),
        )
        thresholds = RelationThresholds(
            touch_tol_px=float(doc.get("touch_tol_px", 5.0)),
            near_z_mm=float(doc.get("near_z_mm", 150.0)),
            overlap_min=float(doc.get("overlap_min", 0.3)),
        )
        sentinels = frozenset(int(s) for s in doc.get("sentinels", (0, 4000)))
        kernel = int(doc.get("kernel", 3))
        return PipelineConfig(
            camera=camera,
            kernel=kernel,
            sentinels=sentinels,
            thresholds=thresholds,
            caption_source=str(doc.get("caption_source", "annotations")),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_config(path: Optional[str | Path]) -> PipelineConfig:
    """Read a JSON config file; None means all defaults."""
    if path is None:
        return PipelineConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        raise
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
    return config_from_dict(doc)


@dataclass(frozen=True)
class TimingReport:
    """Per-stage wall time of one pipeline run, microseconds."""

    stages: dict[str, float]
    total_us: float


@dataclass(frozen=True)
class TimingSummary:
    """Aggregated timings across repeated runs: (median, p95) per stage."""

    stages: dict[str, tuple[float, float]]
    total: tuple[float, float]
    runs: int

    def to_csv(self) -> str:
        lines = ["stage,median_us,p95_us"]
        for name in STAGE_NAMES:
            med, p95 = self.stages[name]
            lines.append(f"{name},{med:.3f},{p95:.3f}")
        lines.append(f"total,{self.total[0]:.3f},{self.total[1]:.3f}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PipelineResult:
    """Everything one run produces, including intermediates for rendering."""

    description: SceneDescription
    report: dict
    timing: TimingReport
    depth: DepthMap
    filtered: DepthMap
    segments: tuple[Segment, ...]
    boxes: tuple[Box3D, ...]
    adjacency: dict[Field, FieldAdjacency]


def run_loaded(
    depth: DepthMap,
    segments: Sequence[Segment],
    config: PipelineConfig,
    captions: Optional[Mapping[int, str]] = None,
) -> PipelineResult:
    """Run the pipeline on already-loaded inputs. Deterministic outputs."""
    if captions is None and config.caption_source == "external":
        raise ConfigError("caption_source is 'external' but no captions were given")
    if captions:
        segments = [
            replace(s, caption=captions.get(s.id, s.caption)) for s in segments
        ]
    else:
        segments = list(segments)

    stages: dict[str, float] = {}
    t_start = time.perf_counter_ns()

    t0 = time.perf_counter_ns()
    filtered = mean_filter(depth, config.kernel)
    stages["depth_filter"] = (time.perf_counter_ns() - t0) / 1e3

    t0 = time.perf_counter_ns()
    x_img = np.empty(len(segments))
    y_img = np.empty(len(segments))
    z_mean = np.empty(len(segments))
    boxes: list[Box3D] = []
    for k, seg in enumerate(segments):
        xs, ys = polygon_pixel_coords(seg.polygon, filtered.width, filtered.height)
        if len(xs) == 0:
            raise ValueError(f"segment {seg.id}: polygon encloses no pixels")
        depths = filtered.values[ys, xs].astype(np.int64)
        valid = np.ones(len(depths), dtype=bool)
        for s in filtered.sentinels:
            valid &= depths != s
        if not valid.any():
            raise NoValidDepthError(
                f"segment {seg.id}: polygon interior holds no non-sentinel depth"
            )
        x_img[k] = xs.mean()
        y_img[k] = ys.mean()
        z_mean[k] = depths[valid].mean()
        stats = region_depth_stats(
            filtered, (seg.bbox.x1, seg.bbox.y1, seg.bbox.x2, seg.bbox.y2)
        )
        boxes.append(
            Box3D(
                id=seg.id,
                x1=float(seg.bbox.x1),
                y1=float(seg.bbox.y1),
                x2=float(seg.bbox.x2),
                y2=float(seg.bbox.y2),
                z_min=float(stats.z_min_est),
                z_max=float(stats.z_max),
                z_mean=stats.z_mean,
                centroid_y=float(y_img[k]),
            )
        )
    stages["centroids"] = (time.perf_counter_ns() - t0) / 1e3

    t0 = time.perf_counter_ns()
    x_w = (x_img - config.camera.principal_x) * z_mean / config.camera.focal_px
    theta = direction_angles_batch(x_w, z_mean)
    field_codes = classify_directions_batch(theta)
    stages["directions"] = (time.perf_counter_ns() - t0) / 1e3

    t0 = time.perf_counter_ns()
    by_field: dict[Field, list[Box3D]] = {f: [] for f in Field}
    for k, box in enumerate(boxes):
        by_field[FIELD_BY_CODE[field_codes[k]]].append(box)
    adjacency = build_adjacency(by_field, config.thresholds)
    if boxes:
        ground, background = detect_ground_background(boxes)
    else:
        ground = background = None
    stages["relations"] = (time.perf_counter_ns() - t0) / 1e3

    t0 = time.perf_counter_ns()
    seg_by_id = {s.id: s for s in segments}
    field_segments = {
        f: [seg_by_id[b.id] for b in by_field[f]] for f in Field
    }
    exclude = {i for i in (ground, background) if i is not None}
    trails = {f: euler_trails(adjacency[f], exclude=exclude) for f in Field}
    description = compose_scene(field_segments, trails, ground, background)
    stages["narration"] = (time.perf_counter_ns() - t0) / 1e3

    report = {
        "segments": [
            {
                "id": seg.id,
                "caption": seg.caption,
                "theta_deg": round(float(theta[k]), 2),
                "field": FIELD_BY_CODE[field_codes[k]].value,
            }
            for k, seg in enumerate(segments)
        ],
        "relations": [
            {
                "subject": rel.subject,
                "object": rel.object,
                "kind": rel.kind.name.lower(),
            }
            for f in Field
            for rel in adjacency[f].relations()
        ],
        "ground": ground,
        "background": background,
    }
    total_us = (time.perf_counter_ns() - t_start) / 1e3
    return PipelineResult(
        description=description,
        report=report,
        timing=TimingReport(stages=stages, total_us=total_us),
        depth=depth,
        filtered=filtered,
        segments=tuple(segments),
        boxes=tuple(boxes),
        adjacency=adjacency,
    )


def run(
    depth_path: str | Path,
    annotations_path: str | Path,
    config: Optional[PipelineConfig] = None,
    captions: Optional[Mapping[int, str]] = None,
) -> tuple[SceneDescription, dict, TimingReport]:
    """Describe one scene from its files.

    Returns the description, the JSON-ready report, and stage timings.
    """
    cfg = config or PipelineConfig()
    depth = load_depth(depth_path, sentinels=cfg.sentinels)
    segments = load_annotations(annotations_path)
    result = run_loaded(depth, segments, cfg, captions=captions)
    return result.description, result.report, result.timing


def bench(
    scene_set: Sequence[tuple[str | Path, str | Path]],
    config: Optional[PipelineConfig] = None,
    repetitions: int = 10,
) -> TimingSummary:
    """Run every scene ``repetitions`` times and aggregate stage timings.

    Raises:
        ValueError: empty scene set or repetitions < 1.
    """
    if not scene_set:
        raise ValueError("scene set is empty")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    cfg = config or PipelineConfig()
    loaded = []
    for depth_path, ann_path in scene_set:
        loaded.append(
            (load_depth(depth_path, sentinels=cfg.sentinels), load_annotations(ann_path))
        )
    per_stage: dict[str, list[float]] = {name: [] for name in STAGE_NAMES}
    totals: list[float] = []
    for _ in range(repetitions):
        for depth, segments in loaded:
            result = run_loaded(depth, segments, cfg)
            for name in STAGE_NAMES:
                per_stage[name].append(result.timing.stages[name])
            totals.append(result.timing.total_us)

    def agg(values: list[float]) -> tuple[float, float]:
        return (
            float(statistics.median(values)),
            float(np.percentile(values, 95)),
        )

    return TimingSummary(
        stages={name: agg(vals) for name, vals in per_stage.items()},
        total=agg(totals),
        runs=len(totals),
    )
