"""Polygon annotations, point-in-hull tests, mask components, and box matching.

Annotation documents follow the LabelMe layout: a JSON object with a
``shapes`` array whose entries carry a ``label`` string and a ``points``
vertex list. Segment ids are assigned by order of appearance starting at 0.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy import ndimage
from scipy.optimize import linprog


class Rect(NamedTuple):
    """Axis-aligned rectangle, corners included: (x1, y1) to (x2, y2)."""

    x1: float
    y1: float
    x2: float
    y2: float


class AnnotationParseError(ValueError):
    """Raised for malformed annotation documents; message names the spot."""


@dataclass(frozen=True)
class Segment:
    """One annotated region: caption, polygon outline, and its tight bbox."""

    id: int
    caption: str
    polygon: tuple[tuple[float, float], ...]
    bbox: Rect


@dataclass(frozen=True)
class SegmentMask:
    """Per-pixel segment labels; ``background`` is the non-segment code."""

    labels: np.ndarray
    background: int = 65535

    def __post_init__(self) -> None:
        arr = np.asarray(self.labels)
        if arr.ndim != 2 or arr.dtype.kind not in "ui":
            raise ValueError("mask labels must be a 2D integer grid")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


def _bbox_of(points: np.ndarray) -> Rect:
    x1 = float(np.floor(points[:, 0].min()))
    y1 = float(np.floor(points[:, 1].min()))
    x2 = float(np.ceil(points[:, 0].max()))
    y2 = float(np.ceil(points[:, 1].max()))
    return Rect(int(x1), int(y1), int(x2), int(y2))


def parse_annotations(document: str | bytes | dict) -> list[Segment]:
    """Parse a LabelMe-style document into segments.

    Vertices outside the stated image bounds (when ``imageWidth`` and
    ``imageHeight`` are present) are clamped with a warning. Shapes with
    fewer than three vertices are rejected with the shape index named.

    Raises:
        AnnotationParseError: malformed JSON, missing keys, bad shapes.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise AnnotationParseError(
                f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
    else:
        doc = document
    if not isinstance(doc, dict) or "shapes" not in doc:
        raise AnnotationParseError("document must be an object with a 'shapes' array")
    shapes = doc["shapes"]
    if not isinstance(shapes, list):
        raise AnnotationParseError("'shapes' must be an array")
    width = doc.get("imageWidth")
    height = doc.get("imageHeight")
    segments: list[Segment] = []
    for idx, shape in enumerate(shapes):
        if not isinstance(shape, dict) or "points" not in shape or "label" not in shape:
            raise AnnotationParseError(f"shape {idx}: missing 'label' or 'points'")
        raw = shape["points"]
        if not isinstance(raw, list) or len(raw) < 3:
            raise AnnotationParseError(
                f"shape {idx}: polygon needs at least 3 points, got {len(raw) if isinstance(raw, list) else 'non-list'}"
            )
        try:
            pts = np.asarray(raw, dtype=float)
        except (TypeError, ValueError) as exc:
            raise AnnotationParseError(f"shape {idx}: non-numeric points") from exc
        if pts.ndim != 2 or pts.shape[1] != 2 or not np.isfinite(pts).all():
            raise AnnotationParseError(f"shape {idx}: points must be finite (x, y) pairs")
        if width is not None and height is not None:
            clipped = np.clip(pts, [0.0, 0.0], [float(width) - 1, float(height) - 1])
            if not np.array_equal(clipped, pts):
                warnings.warn(
                    f"shape {idx} ('{shape['label']}'): vertices outside "
                    f"{width}x{height} image clamped",
                    stacklevel=2,
                )
                pts = clipped
        bbox = _bbox_of(pts)
        if not (bbox.x1 < bbox.x2 and bbox.y1 < bbox.y2):
            raise AnnotationParseError(
                f"shape {idx}: degenerate polygon, zero-area bounding box"
            )
        segments.append(
            Segment(
                id=len(segments),
                caption=str(shape["label"]),
                polygon=tuple((float(x), float(y)) for x, y in pts),
                bbox=bbox,
            )
        )
    return segments


def load_annotations(path: str | Path) -> list[Segment]:
    """Read and parse an annotation JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_annotations(text)


def in_hull(point: Sequence[float], vertices: Sequence[Sequence[float]]) -> bool:
    """True when ``point`` lies in the convex hull of ``vertices``.

    Solved as a linear feasibility problem: the point is inside iff it is a
    convex combination of the vertices (weights sum to 1, all >= 0).
    Boundary points count as inside.

    Raises:
        ValueError: fewer than 3 vertices or non-finite input.
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
        raise ValueError("need at least 3 two-dimensional vertices")
    p = np.asarray(point, dtype=float)
    if p.shape != (2,) or not np.isfinite(p).all() or not np.isfinite(verts).all():
        raise ValueError("point and vertices must be finite 2D coordinates")
    n = verts.shape[0]
    a_eq = np.vstack([verts.T, np.ones(n)])
    b_eq = np.concatenate([p, [1.0]])
    res = linprog(np.zeros(n), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return bool(res.status == 0)


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull vertices in counter-clockwise order (monotone chain).

    Returns fewer than 3 points when the input is degenerate (collinear).
    """
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        # Collinear input: the lexsorted extremes bound the segment.
        return np.array([pts[0], pts[-1]])
    return hull


def hull_contains_points(
    vertices: Sequence[Sequence[float]], points: np.ndarray
) -> np.ndarray:
    """Vectorized convex-hull membership for a batch of points.

    Equivalent to calling :func:`in_hull` per point but runs as half-plane
    checks against the hull edges, so it is usable per-pixel. Boundary
    points count as inside.

    Args:
        vertices: polygon vertex list (>= 3 entries).
        points: (n, 2) float or int array of query points.

    Returns:
        Boolean array of length n.
    """
    verts = np.asarray(vertices, dtype=float)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array")
    hull = _convex_hull(verts)
    scale = max(1.0, float(np.abs(verts).max()))
    eps = 1e-9 * scale * scale
    if len(hull) < 3:
        # Degenerate hull: membership means lying on the segment (or point).
        a, b = hull[0], hull[-1]
        d = b - a
        rel = pts - a
        cross = rel[:, 0] * d[1] - rel[:, 1] * d[0]
        on_line = np.abs(cross) <= eps
        t = rel @ d
        return on_line & (t >= -eps) & (t <= d @ d + eps)
    inside = np.ones(len(pts), dtype=bool)
    for i in range(len(hull)):
        a = hull[i]
        d = hull[(i + 1) % len(hull)] - a
        # Counter-clockwise hull: a point is inside when it sits on or left
        # of every directed edge.
        cross = d[0] * (pts[:, 1] - a[1]) - d[1] * (pts[:, 0] - a[0])
        inside &= cross >= -eps
        if not inside.any():
            break
    return inside


def mask_to_bbox(mask: SegmentMask, segment_id: int) -> Rect:
    """Tight bbox of the largest 4-connected component labeled ``segment_id``.

    Ties between equally large components resolve to the one found first in
    raster order.

    Raises:
        KeyError: the id does not occur in the mask.
    """
    binary = mask.labels == segment_id
    if not binary.any():
        raise KeyError(f"segment id {segment_id} not present in mask")
    labeled, count = ndimage.label(binary)  # default structure = 4-connectivity
    if count > 1:
        sizes = np.bincount(labeled.ravel())
        sizes[0] = 0
        keep = int(sizes.argmax())
        binary = labeled == keep
    ys, xs = np.nonzero(binary)
    return Rect(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))


def load_mask(path: str | Path, background: int = 65535) -> SegmentMask:
    """Read a 16-bit label image as a segment mask."""
    from .depth import load_depth

    depth = load_depth(path, sentinels=frozenset())
    return SegmentMask(labels=depth.values, background=background)


def save_mask(mask: SegmentMask, path: str | Path) -> None:
    """Write a segment mask as a 16-bit grayscale image."""
    from .depth import DepthMap, save_depth

    save_depth(DepthMap(values=mask.labels, sentinels=frozenset()), path)


def iou(a: Rect | Sequence[float], b: Rect | Sequence[float]) -> float:
    """Intersection over union of two rectangles (areas as (x2-x1)*(y2-y1)).

    Raises:
        ValueError: a rectangle has zero or negative area.
    """
    ax1, ay1, ax2, ay2 = (float(v) for v in a)
    bx1, by1, bx2, by2 = (float(v) for v in b)
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    if ax2 <= ax1 or ay2 <= ay1 or bx2 <= bx1 or by2 <= by1:
        raise ValueError("degenerate rectangle in iou")
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (area_a + area_b - inter)


def best_box_match(
    candidates: Sequence[Rect | Sequence[float]],
    targets: Sequence[Rect | Sequence[float]],
) -> list[int]:
    """Index of the highest-IoU candidate for each target (ties: lowest index).

    Raises:
        ValueError: either list is empty.
    """
    if not candidates or not targets:
        raise ValueError("candidates and targets must be non-empty")
    out: list[int] = []
    for t in targets:
        best_i = 0
        best_v = -1.0
        for i, c in enumerate(candidates):
            v = iou(c, t)
            if v > best_v:
                best_i, best_v = i, v
        out.append(best_i)
    return out
