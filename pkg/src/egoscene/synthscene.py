"""Seeded synthetic depth scenes with analytic ground truth.

Scenes are built from axis-aligned rectangular slabs: each slab has a pixel
footprint and either a constant depth or a linear ramp along one axis.
Slabs never overlap in the image plane (they may touch, which is what
produces contact relations), are painted far to near, and sit in front of a
far backdrop plane.

Ground truth is derived from the slab placements and the clean canvas
before noise injection, with its own direction and relation arithmetic, so
it never routes through the pipeline code under test.

Two details keep fixtures honest under the default 3x3 smoothing kernel:
the annotation polygon of each slab is inset ``edge_inset_px`` pixels from
the painted footprint (so filter windows inside the polygon never straddle
the slab border), and placements whose true angle falls within
``boundary_margin_deg`` of a field boundary are resampled (ties that close
to a threshold are genuinely ambiguous under noise).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .annotations import Rect, Segment, SegmentMask, parse_annotations, save_mask
from .depth import DepthMap, save_depth
from .geometry import CameraModel
from .relations import RelationThresholds

MASK_BACKGROUND = 65535
SENSOR_MAX_MM = 3900

_COLORS = (
    "red", "blue", "green", "tan", "gray", "white",
    "black", "amber", "violet", "brown",
)
_NOUNS = (
    "crate", "bin", "panel", "stool", "cart", "shelf", "lamp", "box",
    "drum", "bench", "rack", "chair", "table", "pallet", "column",
)


class GenerationError(RuntimeError):
    """Raised when a scene cannot be placed within the retry budget."""


@dataclass(frozen=True)
class SlabSpec:
    """Explicit slab placement: full pixel footprint plus depth profile.

    ``ramp_axis`` is '' for constant depth, 'x' or 'y' for a linear ramp of
    ``ramp_delta`` millimeters across the footprint.
    """

    x1: int
    y1: int
    x2: int
    y2: int
    z0: int
    ramp_axis: str = ""
    ramp_delta: int = 0
    caption: Optional[str] = None


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of a synthetic scene."""

    seed: int
    n_regions: int
    width: int = 640
    height: int = 480
    camera: CameraModel = dataclass_field(default_factory=CameraModel)
    z_range: tuple[int, int] = (1200, 3600)
    size_range: tuple[int, int] = (24, 120)
    noise: float = 0.0
    thresholds: RelationThresholds = dataclass_field(default_factory=RelationThresholds)
    edge_inset_px: int = 2
    boundary_margin_deg: float = 1.0
    ramp_prob: float = 0.5
    ramp_max_mm: int = 200
    max_attempts: int = 400
    placements: tuple[SlabSpec, ...] = ()

    def __post_init__(self) -> None:
        if self.n_regions < 1:
            raise ValueError("n_regions must be >= 1")
        if not (0.0 <= self.noise < 1.0):
            raise ValueError("noise must be in [0, 1)")
        if self.size_range[0] > self.size_range[1]:
            raise ValueError("size_range must be (low, high) with low <= high")
        if self.size_range[0] < 2 * self.edge_inset_px + 4:
            raise ValueError("slabs too small for the polygon inset")
        if self.z_range[0] >= self.z_range[1]:
            raise ValueError("z_range must span a positive interval")


@dataclass(frozen=True)
class RegionTruth:
    """True pose of one region, in world terms."""

    id: int
    caption: str
    x_w: float
    z_mean: float
    theta_deg: float
    field: str
    centroid_y: float
    z_min: int
    z_max: int


@dataclass(frozen=True)
class GroundTruth:
    """Analytic truth for a generated scene."""

    regions: tuple[RegionTruth, ...]
    relations: tuple[tuple[int, int, str], ...]
    ground: Optional[int]
    background: Optional[int]

    def to_json_dict(self) -> dict:
        return {
            "regions": [
                {
                    "id": r.id,
                    "caption": r.caption,
                    "x_w": round(r.x_w, 3),
                    "z_mean": round(r.z_mean, 3),
                    "theta_deg": round(r.theta_deg, 4),
                    "field": r.field,
                    "centroid_y": round(r.centroid_y, 3),
                    "z_min": r.z_min,
                    "z_max": r.z_max,
                }
                for r in self.regions
            ],
            "relations": [
                {"subject": s, "object": o, "kind": k} for s, o, k in self.relations
            ],
            "ground": self.ground,
            "background": self.background,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GroundTruth":
        regions = tuple(
            RegionTruth(
                id=int(r["id"]),
                caption=str(r["caption"]),
                x_w=float(r["x_w"]),
                z_mean=float(r["z_mean"]),
                theta_deg=float(r["theta_deg"]),
                field=str(r["field"]),
                centroid_y=float(r["centroid_y"]),
                z_min=int(r["z_min"]),
                z_max=int(r["z_max"]),
            )
            for r in doc["regions"]
        )
        relations = tuple(
            (int(r["subject"]), int(r["object"]), str(r["kind"]))
            for r in doc["relations"]
        )
        return cls(
            regions=regions,
            relations=relations,
            ground=doc.get("ground"),
            background=doc.get("background"),
        )


@dataclass(frozen=True)
class AccuracyReport:
    """Pipeline-vs-truth comparison produced by :func:`evaluate`."""

    n_regions: int
    direction_correct: int
    direction_accuracy: float
    relation_tp: int
    relation_fp: int
    relation_fn: int
    relation_precision: float
    relation_recall: float
    ground_correct: bool
    background_correct: bool


def _true_theta(x_w: float, z: float) -> float:
    """Direction angle from world coordinates; local twin of the definition."""
    if x_w == 0.0:
        return 90.0
    t = math.degrees(math.atan2(z, x_w))
    return t - 180.0 if t > 90.0 else t


def _true_field(theta: float) -> str:
    if 0.0 <= theta <= 75.0:
        return "right"
    if -75.0 <= theta < 0.0:
        return "left"
    return "front"


def _true_relation(
    a: tuple[Rect, float, float], b: tuple[Rect, float, float], t: RelationThresholds
) -> Optional[str]:
    """Rule table over analytic boxes, subject = the first argument.

    Local reimplementation on (rect, z_min, z_max) tuples; kept free of the
    relations module so fixtures check the pipeline rather than echo it.
    """
    (ra, alo, ahi), (rb, blo, bhi) = a, b
    inside_a = (
        ra.x1 >= rb.x1 and ra.x2 <= rb.x2 and ra.y1 >= rb.y1 and ra.y2 <= rb.y2
        and alo >= blo and ahi <= bhi
    )
    inside_b = (
        rb.x1 >= ra.x1 and rb.x2 <= ra.x2 and rb.y1 >= ra.y1 and rb.y2 <= ra.y2
        and blo >= alo and bhi <= ahi
    )
    if inside_a or inside_b:
        return None

    def frac_overlap(lo1, hi1, lo2, hi2):
        return min(hi1, hi2) - max(lo1, lo2) >= t.overlap_min * min(
            hi1 - lo1, hi2 - lo2
        )

    x_ok = frac_overlap(ra.x1, ra.x2, rb.x1, rb.x2)
    y_ok = frac_overlap(ra.y1, ra.y2, rb.y1, rb.y2)
    if x_ok and y_ok:
        if ahi < blo:
            return "in_front_of"
        if bhi < alo:
            return "behind"
    z_near = max(alo, blo) - min(ahi, bhi) <= t.near_z_mm
    if z_near and x_ok:
        if abs(ra.y2 - rb.y1) <= t.touch_tol_px:
            return "on"
        if abs(rb.y2 - ra.y1) <= t.touch_tol_px:
            return "under"
        if ra.y2 < rb.y1 - t.touch_tol_px:
            return "above"
        if rb.y2 < ra.y1 - t.touch_tol_px:
            return "under"
    if z_near and y_ok and max(ra.x1, rb.x1) - min(ra.x2, rb.x2) <= t.touch_tol_px:
        return "next_to"
    return None


def _captions(rng: np.random.Generator, n: int) -> list[str]:
    combos = [
        f"an {c} {m}" if c[0] in "aeiou" else f"a {c} {m}"
        for c in _COLORS
        for m in _NOUNS
    ]
    if n <= len(combos):
        picks = rng.choice(len(combos), size=n, replace=False)
        return [combos[int(i)] for i in picks]
    return [f"object {i}" for i in range(n)]


def _slab_zspan(slab: SlabSpec) -> tuple[int, int]:
    if slab.ramp_axis:
        return (
            min(slab.z0, slab.z0 + slab.ramp_delta),
            max(slab.z0, slab.z0 + slab.ramp_delta),
        )
    return slab.z0, slab.z0


def _intersects(a: SlabSpec, b: SlabSpec) -> bool:
    return not (a.x2 < b.x1 or b.x2 < a.x1 or a.y2 < b.y1 or b.y2 < a.y1)


def _random_placements(spec: SceneSpec, rng: np.random.Generator) -> list[SlabSpec]:
    w, h = spec.width, spec.height
    cam = spec.camera
    smin, smax = spec.size_range
    zlo, zhi = spec.z_range
    placed: list[SlabSpec] = []
    for _ in range(spec.n_regions):
        for attempt in range(spec.max_attempts):
            mode = float(rng.random())
            sw = int(rng.integers(smin, smax + 1))
            sh = int(rng.integers(smin, smax + 1))
            base = placed[int(rng.integers(len(placed)))] if placed else None
            if base is None or mode < 0.5:
                x1 = int(rng.integers(0, w - sw + 1))
                y1 = int(rng.integers(0, h - sh + 1))
                z0 = int(rng.integers(zlo, zhi + 1))
            elif mode < 0.75:
                # Stack on top of an existing slab, footprints touching.
                x1 = int(base.x1 + rng.integers(-sw // 2, max(1, base.x2 - base.x1)))
                y1 = base.y1 - sh
                bz = _slab_zspan(base)
                z0 = int(bz[0] + rng.integers(-100, 101))
            else:
                # Side-by-side with an existing slab.
                if rng.random() < 0.5:
                    x1 = base.x2 + 1
                else:
                    x1 = base.x1 - sw
                y1 = int(base.y1 + rng.integers(-sh // 3, max(1, (base.y2 - base.y1) // 2)))
                bz = _slab_zspan(base)
                z0 = int(bz[0] + rng.integers(-100, 101))
            slab = SlabSpec(x1=x1, y1=y1, x2=x1 + sw - 1, y2=y1 + sh - 1, z0=z0)
            if slab.x1 < 0 or slab.y1 < 0 or slab.x2 >= w or slab.y2 >= h:
                continue
            if not (zlo <= z0 <= zhi):
                continue
            if rng.random() < spec.ramp_prob:
                delta = int(rng.integers(-spec.ramp_max_mm, spec.ramp_max_mm + 1))
                delta -= delta % 10
                if zlo <= z0 + delta <= zhi:
                    slab = SlabSpec(
                        x1=slab.x1, y1=slab.y1, x2=slab.x2, y2=slab.y2,
                        z0=z0, ramp_axis="x" if rng.random() < 0.5 else "y",
                        ramp_delta=delta,
                    )
            if any(_intersects(slab, p) for p in placed):
                continue
            # Resample placements too close to a field boundary.
            inset = spec.edge_inset_px
            cx = (slab.x1 + inset + slab.x2 - inset) / 2.0
            zspan = _slab_zspan(slab)
            z_mid = (zspan[0] + zspan[1]) / 2.0
            x_w = (cx - cam.principal_x) * z_mid / cam.focal_px
            theta = _true_theta(x_w, z_mid)
            margin = min(abs(theta - 75.0), abs(theta + 75.0), abs(theta))
            # Pixel rounding while painting can shave a few millidegrees off
            # the planned angle, so demand a whisker more than promised.
            if margin < spec.boundary_margin_deg + 0.05:
                continue
            placed.append(slab)
            break
        else:
            raise GenerationError(
                f"could not place region {len(placed)} after {spec.max_attempts} attempts"
            )
    return placed


def _paint(spec: SceneSpec, slabs: Sequence[SlabSpec]) -> tuple[np.ndarray, np.ndarray]:
    zhi = spec.z_range[1]
    backdrop = min(SENSOR_MAX_MM, zhi + 300)
    canvas = np.full((spec.height, spec.width), backdrop, dtype=np.int64)
    labels = np.full((spec.height, spec.width), MASK_BACKGROUND, dtype=np.uint16)
    order = sorted(
        range(len(slabs)),
        key=lambda i: (-(sum(_slab_zspan(slabs[i])) / 2.0), i),
    )
    for i in order:
        s = slabs[i]
        hgt = s.y2 - s.y1 + 1
        wdt = s.x2 - s.x1 + 1
        if s.ramp_axis == "x":
            ramp = s.z0 + s.ramp_delta * np.arange(wdt) / max(1, wdt - 1)
            block = np.floor(ramp + 0.5)[None, :].repeat(hgt, axis=0)
        elif s.ramp_axis == "y":
            ramp = s.z0 + s.ramp_delta * np.arange(hgt) / max(1, hgt - 1)
            block = np.floor(ramp + 0.5)[:, None].repeat(wdt, axis=1)
        else:
            block = np.full((hgt, wdt), s.z0, dtype=np.int64)
        canvas[s.y1 : s.y2 + 1, s.x1 : s.x2 + 1] = block.astype(np.int64)
        labels[s.y1 : s.y2 + 1, s.x1 : s.x2 + 1] = i
    return canvas, labels


def generate(
    spec: SceneSpec,
) -> tuple[DepthMap, SegmentMask, list[Segment], GroundTruth]:
    """Build one scene: depth map, label mask, annotations, and its truth.

    Deterministic for a fixed spec: the random stream is a PCG64 generator
    seeded with ``spec.seed``, so outputs are identical across platforms.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.placements:
        slabs = list(spec.placements)
        for s in slabs:
            if s.x1 < 0 or s.y1 < 0 or s.x2 >= spec.width or s.y2 >= spec.height:
                raise GenerationError(f"explicit slab {s} outside the image")
        for i, a in enumerate(slabs):
            for b in slabs[i + 1 :]:
                if _intersects(a, b):
                    raise GenerationError("explicit slabs overlap in the image plane")
    else:
        slabs = _random_placements(spec, rng)
    caps = _captions(rng, len(slabs))
    for i, s in enumerate(slabs):
        if s.caption is not None:
            caps[i] = s.caption

    canvas, labels = _paint(spec, slabs)

    inset = spec.edge_inset_px
    cam = spec.camera
    shapes = []
    truths: list[RegionTruth] = []
    boxes: list[tuple[Rect, float, float]] = []
    for i, s in enumerate(slabs):
        bx1, by1 = s.x1 + inset, s.y1 + inset
        bx2, by2 = s.x2 - inset, s.y2 - inset
        shapes.append(
            {
                "label": caps[i],
                "points": [
                    [float(bx1), float(by1)],
                    [float(bx2), float(by1)],
                    [float(bx2), float(by2)],
                    [float(bx1), float(by2)],
                ],
            }
        )
        region = canvas[by1 : by2 + 1, bx1 : bx2 + 1]
        z_mean = float(region.mean())
        z_min = int(region.min())
        z_max = int(region.max())
        xs = np.arange(bx1, bx2 + 1, dtype=float)
        # Mean world x over the region's surface points.
        col_means = region.mean(axis=0)
        x_w = float(np.mean((xs - cam.principal_x) * col_means / cam.focal_px))
        theta = _true_theta(x_w, z_mean)
        truths.append(
            RegionTruth(
                id=i,
                caption=caps[i],
                x_w=x_w,
                z_mean=z_mean,
                theta_deg=theta,
                field=_true_field(theta),
                centroid_y=(by1 + by2) / 2.0,
                z_min=z_min,
                z_max=z_max,
            )
        )
        boxes.append((Rect(bx1, by1, bx2, by2), float(z_min), float(z_max)))

    relations: list[tuple[int, int, str]] = []
    for i in range(len(slabs)):
        for j in range(i + 1, len(slabs)):
            if truths[i].field != truths[j].field:
                continue
            kind = _true_relation(boxes[i], boxes[j], spec.thresholds)
            if kind is not None:
                relations.append((i, j, kind))

    ground = background = None
    if truths:
        ground = max(truths, key=lambda r: (r.centroid_y, -r.id)).id
        background = max(truths, key=lambda r: (r.z_mean, -r.id)).id

    truth = GroundTruth(
        regions=tuple(truths),
        relations=tuple(relations),
        ground=ground,
        background=background,
    )

    if spec.noise > 0:
        drop = rng.random(canvas.shape) < spec.noise
        canvas = np.where(drop, 0, canvas)

    document = {
        "imageWidth": spec.width,
        "imageHeight": spec.height,
        "shapes": shapes,
    }
    segments = parse_annotations(document)
    depth = DepthMap(values=canvas.astype(np.uint16))
    mask = SegmentMask(labels=labels, background=MASK_BACKGROUND)
    return depth, mask, segments, truth


def annotations_document(segments: Sequence[Segment], width: int, height: int) -> dict:
    """Serialize segments back into the annotation document layout."""
    return {
        "imageWidth": width,
        "imageHeight": height,
        "shapes": [
            {
                "label": s.caption,
                "points": [[float(x), float(y)] for x, y in s.polygon],
            }
            for s in segments
        ],
    }


def write_scene(
    out_dir: str | Path,
    depth: DepthMap,
    mask: SegmentMask,
    segments: Sequence[Segment],
    truth: GroundTruth,
) -> dict[str, Path]:
    """Write a generated scene to a directory in the formats the CLI reads."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "depth": out / "depth.png",
        "mask": out / "mask.png",
        "annotations": out / "annotations.json",
        "truth": out / "truth.json",
    }
    save_depth(depth, paths["depth"])
    save_mask(mask, paths["mask"])
    doc = annotations_document(segments, depth.width, depth.height)
    paths["annotations"].write_text(
        json.dumps(doc, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    paths["truth"].write_text(
        json.dumps(truth.to_json_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    return paths


def load_truth(path: str | Path) -> GroundTruth:
    return GroundTruth.from_json_dict(
        json.loads(Path(path).read_text(encoding="utf-8"))
    )


def evaluate(report: dict, truth: GroundTruth) -> AccuracyReport:
    """Compare a pipeline report against ground truth.

    Direction accuracy counts per-region field matches; relation precision
    and recall compare canonical (subject, object, kind) triples; ground and
    background are single-id checks.

    Raises:
        ValueError: region ids disagree between report and truth.
    """
    pred_fields = {int(s["id"]): str(s["field"]) for s in report.get("segments", [])}
    true_fields = {r.id: r.field for r in truth.regions}
    if set(pred_fields) != set(true_fields):
        raise ValueError(
            f"region ids differ: report {sorted(pred_fields)} vs truth {sorted(true_fields)}"
        )
    n = len(true_fields)
    correct = sum(1 for i, f in true_fields.items() if pred_fields[i] == f)

    pred_rel = {
        (int(r["subject"]), int(r["object"]), str(r["kind"]))
        for r in report.get("relations", [])
    }
    true_rel = set(truth.relations)
    tp = len(pred_rel & true_rel)
    fp = len(pred_rel - true_rel)
    fn = len(true_rel - pred_rel)
    precision = tp / (tp + fp) if (tp + fp) else 1.0
    recall = tp / (tp + fn) if (tp + fn) else 1.0

    return AccuracyReport(
        n_regions=n,
        direction_correct=correct,
        direction_accuracy=correct / n if n else 1.0,
        relation_tp=tp,
        relation_fp=fp,
        relation_fn=fn,
        relation_precision=precision,
        relation_recall=recall,
        ground_correct=report.get("ground") == truth.ground,
        background_correct=report.get("background") == truth.background,
    )
