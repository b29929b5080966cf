"""Pinhole back-projection and the direction-field classifier.

The horizontal direction of a region is the angle between the viewing axis
and the ray to the region's centroid, measured in the horizontal world
plane: theta = arctan(z / x_w), quadrant-adjusted so theta stays within
[-90, 90] degrees and a centroid straight ahead (x_w == 0) maps to exactly
90. Angles in [0, 75] read as Right, [-75, 0) as Left, and the remaining
30-degree cone around the axis as Front.

Using the naive image-plane angle arctan(y_i / x_i) instead would ignore
depth and misclassify off-axis regions; it exists only as a foil in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .annotations import hull_contains_points
from .depth import DepthMap, NoValidDepthError

RIGHT_LIMIT_DEG = 75.0
LEFT_LIMIT_DEG = -75.0


class Field(str, Enum):
    """Egocentric visual field of a region."""

    LEFT = "left"
    FRONT = "front"
    RIGHT = "right"


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics: focal length and principal point, in pixels."""

    focal_px: float = 580.0
    principal_x: float = 319.5
    principal_y: float = 239.5

    def __post_init__(self) -> None:
        if not (self.focal_px > 0):
            raise ValueError(f"focal length must be positive, got {self.focal_px}")
        if self.principal_x < 0 or self.principal_y < 0:
            raise ValueError("principal point must be non-negative")


@dataclass(frozen=True)
class Centroid3D:
    """Region centroid: image-plane means plus mean depth, world x optional.

    ``x_img``/``y_img`` average every pixel inside the polygon envelope;
    ``z`` averages only the non-sentinel depths among them. ``x_w`` is
    filled by back-projection once a camera is known.
    """

    x_img: float
    y_img: float
    z: float
    x_w: float | None = None


@dataclass(frozen=True)
class DirectionField:
    """A classified direction: the field plus the angle that produced it."""

    field: Field
    theta_deg: float


def polygon_pixel_coords(
    polygon, width: int, height: int
) -> tuple[np.ndarray, np.ndarray]:
    """Integer pixel coordinates inside a polygon's convex envelope.

    Returns (xs, ys) arrays. Membership matches ``in_hull`` over the vertex
    set; boundary pixels count as inside. Pixels outside the image are
    dropped.
    """
    verts = np.asarray(polygon, dtype=float)
    x1 = max(0, int(math.floor(verts[:, 0].min())))
    y1 = max(0, int(math.floor(verts[:, 1].min())))
    x2 = min(width - 1, int(math.ceil(verts[:, 0].max())))
    y2 = min(height - 1, int(math.ceil(verts[:, 1].max())))
    if x2 < x1 or y2 < y1:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    gx, gy = np.meshgrid(np.arange(x1, x2 + 1), np.arange(y1, y2 + 1))
    pts = np.column_stack([gx.ravel(), gy.ravel()]).astype(float)
    keep = hull_contains_points(verts, pts)
    return gx.ravel()[keep], gy.ravel()[keep]


def region_centroid(polygon, depth: DepthMap) -> Centroid3D:
    """Mean pixel position and mean valid depth over a polygon's interior.

    Raises:
        ValueError: polygon encloses no pixels.
        NoValidDepthError: every enclosed pixel is a sentinel.
    """
    xs, ys = polygon_pixel_coords(polygon, depth.width, depth.height)
    if len(xs) == 0:
        raise ValueError("polygon encloses no pixels")
    depths = depth.values[ys, xs].astype(np.int64)
    valid = np.ones(len(depths), dtype=bool)
    for s in depth.sentinels:
        valid &= depths != s
    if not valid.any():
        raise NoValidDepthError("polygon interior holds no non-sentinel depth")
    return Centroid3D(
        x_img=float(xs.mean()),
        y_img=float(ys.mean()),
        z=float(depths[valid].mean()),
    )


def back_project(x_img: float, z: float, camera: CameraModel) -> float:
    """World-frame horizontal offset of an image column at a given depth.

    x_w = (x_img - principal_x) * z / focal. Signed: negative is left of
    the camera axis. z must be non-negative.
    """
    if z < 0:
        raise ValueError(f"depth must be non-negative, got {z}")
    return (x_img - camera.principal_x) * z / camera.focal_px


def direction_angle(centroid: Centroid3D) -> float:
    """Angle arctan(z / x_w) in degrees, in [-90, 90].

    x_w == 0 maps to exactly 90 (straight ahead). Mirrored centroids get
    opposite angles.

    Raises:
        ValueError: both z and x_w are zero (direction undefined), or x_w
            was never filled in.
    """
    if centroid.x_w is None:
        raise ValueError("centroid has no world x; back-project first")
    x_w = centroid.x_w
    z = centroid.z
    if z == 0 and x_w == 0:
        raise ValueError("zero-length direction vector")
    if x_w == 0:
        return 90.0
    theta = math.degrees(math.atan2(z, x_w))
    if theta > 90.0:
        theta -= 180.0
    return theta


def classify_direction(theta_deg: float) -> DirectionField:
    """Map an angle to its visual field.

    [0, 75] -> Right, [-75, 0) -> Left, the rest of [-90, 90] -> Front.

    Raises:
        ValueError: angle outside [-90, 90].
    """
    t = float(theta_deg)
    if not (-90.0 <= t <= 90.0):
        raise ValueError(f"angle {theta_deg} outside [-90, 90]")
    if 0.0 <= t <= RIGHT_LIMIT_DEG:
        field = Field.RIGHT
    elif LEFT_LIMIT_DEG <= t < 0.0:
        field = Field.LEFT
    else:
        field = Field.FRONT
    return DirectionField(field=field, theta_deg=t)


def direction_angles_batch(x_w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`direction_angle` over arrays of x_w and z."""
    theta = np.degrees(np.arctan2(z, x_w))
    theta = np.where(theta > 90.0, theta - 180.0, theta)
    return np.where(x_w == 0.0, 90.0, theta)


def classify_directions_batch(theta_deg: np.ndarray) -> np.ndarray:
    """Vectorized field codes for angles: 0 left, 1 front, 2 right."""
    right = (theta_deg >= 0.0) & (theta_deg <= RIGHT_LIMIT_DEG)
    left = (theta_deg >= LEFT_LIMIT_DEG) & (theta_deg < 0.0)
    return np.where(right, 2, np.where(left, 0, 1)).astype(np.int8)


FIELD_BY_CODE = (Field.LEFT, Field.FRONT, Field.RIGHT)
