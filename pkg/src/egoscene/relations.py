"""Pairwise spatial relations between 3D-extended region boxes.

Each region is reduced to an image-plane rectangle plus a depth interval
(z_min estimate to z_max) and a pixel centroid height. Pairs within the
same visual field are classified by a fixed priority table; the first rule
that applies wins, and image y grows downward throughout:

1. In front of / behind: x and y projections overlap by at least
   ``overlap_min`` of the smaller extent on each axis and the z intervals
   are disjoint. The nearer box is in front of the farther.
2. On: z intervals overlap or their gap is at most ``near_z_mm``; x
   projections overlap; one box's bottom edge sits within ``touch_tol_px``
   of the other's top edge. The upper box is on the lower.
3. Above / under: same z and x conditions, but the upper box's bottom edge
   clears the lower's top edge by more than ``touch_tol_px``.
4. Next to: z near as above, y projections overlap, and the horizontal gap
   is at most ``touch_tol_px``.
5. Otherwise no relation. A box fully contained in another (x, y, and z)
   also emits no relation.

Within rules 2 and 3 the box pair is examined lower-id first, which makes
the outcome order-independent; ``relate(a, b)`` and ``relate(b, a)`` always
agree up to inversion (in-front-of <-> behind, on -> under, above -> under,
next-to symmetric).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Mapping, Optional, Sequence

import numpy as np

from .annotations import Segment
from .depth import DepthMap, region_depth_stats
from .geometry import Field, polygon_pixel_coords


class RelationKind(IntEnum):
    IN_FRONT_OF = 1
    BEHIND = 2
    ON = 3
    ABOVE = 4
    UNDER = 5
    NEXT_TO = 6


INVERSE_KIND: dict[RelationKind, RelationKind] = {
    RelationKind.IN_FRONT_OF: RelationKind.BEHIND,
    RelationKind.ON: RelationKind.UNDER,
    RelationKind.ABOVE: RelationKind.UNDER,
    RelationKind.NEXT_TO: RelationKind.NEXT_TO,
}


@dataclass(frozen=True)
class RelationThresholds:
    """Tolerances for the relation rules.

    touch_tol_px: contact tolerance for edge adjacency, pixels.
    near_z_mm: maximum depth gap for two boxes to count as depth-near.
    overlap_min: fraction (of the smaller extent) a 1D projection overlap
        must reach to count as overlapping.
    """

    touch_tol_px: float = 5.0
    near_z_mm: float = 150.0
    overlap_min: float = 0.3

    def __post_init__(self) -> None:
        if self.touch_tol_px < 0 or self.near_z_mm < 0:
            raise ValueError("tolerances must be non-negative")
        if not (0.0 <= self.overlap_min <= 1.0):
            raise ValueError(f"overlap_min must be in [0, 1], got {self.overlap_min}")


@dataclass(frozen=True)
class Relation:
    """A directed relation: ``subject`` holds ``kind`` relative to ``object``."""

    kind: RelationKind
    subject: int
    object: int


@dataclass(frozen=True)
class Box3D:
    """Image-plane bounds plus depth interval and centroid height of a region."""

    id: int
    x1: float
    y1: float
    x2: float
    y2: float
    z_min: float
    z_max: float
    z_mean: float
    centroid_y: float

    def __post_init__(self) -> None:
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"box {self.id}: degenerate image rectangle")
        if not (self.z_min <= self.z_mean <= self.z_max):
            raise ValueError(
                f"box {self.id}: depth interval violated "
                f"({self.z_min}, {self.z_mean}, {self.z_max})"
            )


def build_box3d(
    segment: Segment, depth: DepthMap, centroid_y: float | None = None
) -> Box3D:
    """Assemble a Box3D from a segment's bbox and the depth map.

    ``centroid_y`` may be passed in when the caller already computed the
    region centroid; otherwise it is the mean y over the polygon envelope.
    """
    stats = region_depth_stats(
        depth, (segment.bbox.x1, segment.bbox.y1, segment.bbox.x2, segment.bbox.y2)
    )
    if centroid_y is None:
        _, ys = polygon_pixel_coords(segment.polygon, depth.width, depth.height)
        if len(ys) == 0:
            raise ValueError(f"segment {segment.id}: polygon encloses no pixels")
        centroid_y = float(ys.mean())
    return Box3D(
        id=segment.id,
        x1=float(segment.bbox.x1),
        y1=float(segment.bbox.y1),
        x2=float(segment.bbox.x2),
        y2=float(segment.bbox.y2),
        z_min=float(stats.z_min_est),
        z_max=float(stats.z_max),
        z_mean=stats.z_mean,
        centroid_y=centroid_y,
    )


def _overlap_ok(lo1, hi1, lo2, hi2, frac) -> bool:
    length = min(hi1, hi2) - max(lo1, lo2)
    return length >= frac * min(hi1 - lo1, hi2 - lo2)


def _contains(inner: Box3D, outer: Box3D) -> bool:
    return (
        inner.x1 >= outer.x1
        and inner.x2 <= outer.x2
        and inner.y1 >= outer.y1
        and inner.y2 <= outer.y2
        and inner.z_min >= outer.z_min
        and inner.z_max <= outer.z_max
    )


def _classify_pair(
    p: Box3D, q: Box3D, t: RelationThresholds
) -> Optional[tuple[RelationKind, int]]:
    """Canonical classification of an id-ordered pair.

    Returns (kind, subject id) with kind one of IN_FRONT_OF, ON, ABOVE,
    NEXT_TO, or None. Callers re-express the result for their own subject.
    """
    if _contains(p, q) or _contains(q, p):
        return None
    tol = t.touch_tol_px
    x_ok = _overlap_ok(p.x1, p.x2, q.x1, q.x2, t.overlap_min)
    y_ok = _overlap_ok(p.y1, p.y2, q.y1, q.y2, t.overlap_min)
    if x_ok and y_ok:
        if p.z_max < q.z_min:
            return (RelationKind.IN_FRONT_OF, p.id)
        if q.z_max < p.z_min:
            return (RelationKind.IN_FRONT_OF, q.id)
    z_near = max(p.z_min, q.z_min) - min(p.z_max, q.z_max) <= t.near_z_mm
    if z_near and x_ok:
        if abs(p.y2 - q.y1) <= tol:
            return (RelationKind.ON, p.id)
        if abs(q.y2 - p.y1) <= tol:
            return (RelationKind.ON, q.id)
        if p.y2 < q.y1 - tol:
            return (RelationKind.ABOVE, p.id)
        if q.y2 < p.y1 - tol:
            return (RelationKind.ABOVE, q.id)
    if z_near and y_ok and (max(p.x1, q.x1) - min(p.x2, q.x2) <= tol):
        return (RelationKind.NEXT_TO, p.id)
    return None


def relate(a: Box3D, b: Box3D, thresholds: RelationThresholds) -> Optional[Relation]:
    """Relation of ``a`` (subject) to ``b``, or None.

    Raises:
        ValueError: the boxes share an id.
    """
    if a.id == b.id:
        raise ValueError("relate needs two distinct boxes")
    p, q = (a, b) if a.id < b.id else (b, a)
    res = _classify_pair(p, q, thresholds)
    if res is None:
        return None
    kind, subject = res
    if kind is RelationKind.NEXT_TO:
        return Relation(RelationKind.NEXT_TO, a.id, b.id)
    if subject == a.id:
        return Relation(kind, a.id, b.id)
    return Relation(INVERSE_KIND[kind], a.id, b.id)


def _classify_codes(
    x1: np.ndarray,
    y1: np.ndarray,
    x2: np.ndarray,
    y2: np.ndarray,
    z_min: np.ndarray,
    z_max: np.ndarray,
    t: RelationThresholds,
) -> np.ndarray:
    """All-pairs relation kind codes, cell (i, j) = kind of subject i vs j.

    Vectorized twin of :func:`relate` over index-ordered boxes (callers pass
    arrays sorted by id). 0 means no relation.
    """
    n = len(x1)
    c = lambda v: v[:, None]  # noqa: E731  column view
    r = lambda v: v[None, :]  # noqa: E731  row view
    tol = t.touch_tol_px
    w = x2 - x1
    h = y2 - y1

    xover = np.minimum(c(x2), r(x2)) - np.maximum(c(x1), r(x1))
    x_ok = xover >= t.overlap_min * np.minimum(c(w), r(w))
    yover = np.minimum(c(y2), r(y2)) - np.maximum(c(y1), r(y1))
    y_ok = yover >= t.overlap_min * np.minimum(c(h), r(h))

    dis = c(z_max) < r(z_min)  # i entirely nearer than j
    z_near = (
        np.maximum(c(z_min), r(z_min)) - np.minimum(c(z_max), r(z_max))
    ) <= t.near_z_mm

    contain = (
        (c(x1) >= r(x1))
        & (c(x2) <= r(x2))
        & (c(y1) >= r(y1))
        & (c(y2) <= r(y2))
        & (c(z_min) >= r(z_min))
        & (c(z_max) <= r(z_max))
    )

    on = np.abs(c(y2) - r(y1)) <= tol  # i's bottom touches j's top
    above = c(y2) < r(y1) - tol
    nxt = xover >= -tol  # image-plane gap along x is within the touch band

    idx = np.arange(n)
    lower = c(idx) < r(idx)  # i is the canonical first of the pair
    on_subj = on & (lower | ~on.T)
    above_subj = above & (lower | ~above.T)

    k = RelationKind
    code = np.zeros((n, n), dtype=np.int8)
    # Lowest priority written first; later rules overwrite.
    np.copyto(code, np.int8(k.NEXT_TO), where=z_near & y_ok & nxt)
    base = z_near & x_ok
    r3 = base & (above | above.T)
    np.copyto(code, np.int8(k.UNDER), where=r3)
    np.copyto(code, np.int8(k.ABOVE), where=r3 & above_subj)
    r2 = base & (on | on.T)
    np.copyto(code, np.int8(k.UNDER), where=r2)
    np.copyto(code, np.int8(k.ON), where=r2 & on_subj)
    r1 = x_ok & y_ok & (dis | dis.T)
    np.copyto(code, np.int8(k.BEHIND), where=r1)
    np.copyto(code, np.int8(k.IN_FRONT_OF), where=r1 & dis)
    np.copyto(code, np.int8(0), where=contain | contain.T)
    code.reshape(-1)[:: n + 1] = 0  # no self relation
    return code


@dataclass(frozen=True)
class FieldAdjacency:
    """Relation matrix of one visual field.

    ``matrix[i, j]`` holds the RelationKind code of region index i relative
    to index j (0 = none); ``region_ids`` maps indexes back to segment ids.
    """

    field: Field
    matrix: np.ndarray
    region_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.int8)
        n = len(self.region_ids)
        if m.shape != (n, n):
            raise ValueError("matrix shape must match region count")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "region_ids", tuple(int(i) for i in self.region_ids))

    def relation_at(self, i: int, j: int) -> Optional[Relation]:
        code = int(self.matrix[i, j])
        if code == 0:
            return None
        return Relation(RelationKind(code), self.region_ids[i], self.region_ids[j])

    def relations(self) -> list[Relation]:
        """Canonical relation list: one entry per pair, lower index as subject."""
        out = []
        ii, jj = np.nonzero(np.triu(self.matrix, k=1))
        for i, j in zip(ii.tolist(), jj.tolist()):
            out.append(self.relation_at(i, j))
        return out

    def edges(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(np.triu(self.matrix, k=1))
        return list(zip(ii.tolist(), jj.tolist()))


def build_adjacency(
    boxes_by_field: Mapping[Field, Sequence[Box3D]],
    thresholds: RelationThresholds,
) -> dict[Field, FieldAdjacency]:
    """Per-field relation matrices; cross-field pairs are never evaluated.

    Boxes within a field must arrive in ascending id order.
    """
    ordered: list[tuple[int, Box3D]] = []
    for fi, field in enumerate(Field):
        boxes = boxes_by_field.get(field, ())
        ids = [b.id for b in boxes]
        if any(ids[i] >= ids[i + 1] for i in range(len(ids) - 1)):
            raise ValueError(f"{field.value}: boxes must be in ascending id order")
        ordered.extend((fi, b) for b in boxes)
    # Every check is pairwise, so one classification pass over all boxes with
    # cross-field cells zeroed afterwards equals three per-field passes, at a
    # third of the numpy dispatch cost.
    ordered.sort(key=lambda fb: fb[1].id)
    n = len(ordered)
    fcodes = np.fromiter((fi for fi, _ in ordered), dtype=np.int8, count=n)
    if n:
        arrs = [
            np.array([getattr(b, name) for _, b in ordered], dtype=float)
            for name in ("x1", "y1", "x2", "y2", "z_min", "z_max")
        ]
        codes = _classify_codes(*arrs, thresholds)
        codes[fcodes[:, None] != fcodes[None, :]] = 0
    out: dict[Field, FieldAdjacency] = {}
    for fi, field in enumerate(Field):
        members = np.flatnonzero(fcodes == fi)
        if len(members) == 0:
            sub = np.zeros((0, 0), dtype=np.int8)
        else:
            sub = codes[np.ix_(members, members)]
        out[field] = FieldAdjacency(
            field=field,
            matrix=sub,
            region_ids=tuple(ordered[int(k)][1].id for k in members),
        )
    return out


def detect_ground_background(boxes: Sequence[Box3D]) -> tuple[int, int]:
    """Ids of the ground region (max centroid_y) and the background (max z_mean).

    Ties resolve to the lower id; the two may name the same region.

    Raises:
        ValueError: no boxes.
    """
    if not boxes:
        raise ValueError("need at least one box")
    ground = max(boxes, key=lambda b: b.centroid_y)
    background = max(boxes, key=lambda b: b.z_mean)
    for b in boxes:  # max() keeps the first of equals only if it is strictly greater
        if b.centroid_y == ground.centroid_y and b.id < ground.id:
            ground = b
        if b.z_mean == background.z_mean and b.id < background.id:
            background = b
    return ground.id, background.id
