"""Depth map container, smoothing, and per-region depth statistics.

Depth values are millimeters stored in a 16-bit single-channel grid.
Sensor dropout shows up as sentinel codes (0 and 4000 by default); those
pixels are carried through filtering untouched in value but are excluded
from every statistic.

All functions here are pure: inputs are never mutated and the arrays held
by :class:`DepthMap` are frozen after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

DEFAULT_SENTINELS = frozenset({0, 4000})


class DepthFormatError(ValueError):
    """Raised when a depth image file is not 16-bit single-channel."""


class NoValidDepthError(ValueError):
    """Raised when a region contains no non-sentinel depth pixels."""


@dataclass(frozen=True)
class DepthMap:
    """A width x height grid of millimeter depths plus the sentinel set.

    Attributes:
        values: (height, width) array of non-negative integers, read-only.
        sentinels: depth codes treated as invalid measurements.
    """

    values: np.ndarray
    sentinels: frozenset[int] = DEFAULT_SENTINELS

    def __post_init__(self) -> None:
        arr = np.asarray(self.values)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("depth values must be a non-empty 2D grid")
        if arr.dtype.kind not in "ui":
            raise ValueError("depth values must be integers (millimeters)")
        if arr.dtype.kind == "i" and int(arr.min()) < 0:
            raise ValueError("depth values must be non-negative")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "sentinels", frozenset(int(s) for s in self.sentinels))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def valid_mask(self) -> np.ndarray:
        """Boolean (height, width) array, True where depth is not a sentinel."""
        mask = np.ones(self.values.shape, dtype=bool)
        for s in self.sentinels:
            mask &= self.values != s
        return mask


@dataclass(frozen=True)
class RegionDepthStats:
    """Depth summary of a rectangular region.

    ``z_min_est`` estimates the region's nearest depth from the mean and the
    maximum (``2 * z_mean - z_max``), which stays usable when dropout has
    eaten the true minimum. Negative estimates are clamped to zero and
    flagged via ``clamped``.
    """

    z_mean: float
    z_max: int
    z_min_est: float
    valid_count: int
    clamped: bool = field(default=False)


def mean_filter(depth: DepthMap, kernel: int) -> DepthMap:
    """Smooth a depth map with a kernel x kernel arithmetic mean.

    Border pixels are handled by edge replication. Sentinel pixels take part
    in the averaging with their raw stored values; handling residual zeros is
    the job of the downstream minimum estimator, not the filter.

    The mean is rounded half-up to an integer millimeter. With an odd kernel
    the exact mean can never land on .5, so the computation uses integer
    window sums and is exact.

    Args:
        depth: input map, unchanged.
        kernel: odd window side, >= 1 and <= min(width, height).

    Returns:
        A new DepthMap with the same sentinel set.
    """
    k = int(kernel)
    if k < 1 or k % 2 == 0:
        raise ValueError(f"kernel must be odd and >= 1, got {kernel}")
    if k > min(depth.width, depth.height):
        raise ValueError(
            f"kernel {k} exceeds map extent {depth.width}x{depth.height}"
        )
    if k == 1:
        return depth
    pad = k // 2
    padded = np.pad(depth.values.astype(np.int64), pad, mode="edge")
    # Integral image: window sums without accumulating float error.
    integ = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    np.cumsum(padded, axis=0, out=integ[1:, 1:])
    np.cumsum(integ[1:, 1:], axis=1, out=integ[1:, 1:])
    h, w = depth.values.shape
    sums = (
        integ[k : k + h, k : k + w]
        - integ[0:h, k : k + w]
        - integ[k : k + h, 0:w]
        + integ[0:h, 0:w]
    )
    area = k * k
    rounded = (2 * sums + area) // (2 * area)  # floor((sum + area/2) / area)
    return replace(depth, values=rounded.astype(depth.values.dtype))


def region_depth_stats(
    depth: DepthMap, box: tuple[int, int, int, int]
) -> RegionDepthStats:
    """Depth statistics over an inclusive pixel rectangle.

    Args:
        depth: the map to read.
        box: (x1, y1, x2, y2) with x1 <= x2, y1 <= y2, inside the map;
            both corners are included.

    Raises:
        ValueError: box malformed or out of bounds.
        NoValidDepthError: every pixel in the box is a sentinel.
    """
    x1, y1, x2, y2 = (int(v) for v in box)
    if x1 > x2 or y1 > y2:
        raise ValueError(f"malformed box {box}")
    if x1 < 0 or y1 < 0 or x2 >= depth.width or y2 >= depth.height:
        raise ValueError(
            f"box {box} outside {depth.width}x{depth.height} map"
        )
    window = depth.values[y1 : y2 + 1, x1 : x2 + 1]
    valid = np.ones(window.shape, dtype=bool)
    for s in depth.sentinels:
        valid &= window != s
    count = int(valid.sum())
    if count == 0:
        raise NoValidDepthError(f"box {box} holds no non-sentinel depth")
    vals = window[valid].astype(np.int64)
    z_mean = float(vals.sum()) / count
    z_max = int(vals.max())
    est = 2.0 * z_mean - z_max
    clamped = est < 0.0
    if clamped:
        est = 0.0
    return RegionDepthStats(
        z_mean=z_mean, z_max=z_max, z_min_est=est, valid_count=count, clamped=clamped
    )


def load_depth(
    path: str | Path, sentinels: frozenset[int] | set[int] = DEFAULT_SENTINELS
) -> DepthMap:
    """Read a 16-bit single-channel PNG or PGM depth image.

    Raises:
        DepthFormatError: wrong bit depth or channel count.
        OSError: unreadable file.
    """
    with Image.open(path) as im:
        if im.format not in ("PNG", "PPM"):
            raise DepthFormatError(
                f"{path}: expected PNG or PGM depth image, got {im.format}"
            )
        # Pillow maps 16-bit grayscale PNG to I;16 and 16-bit PGM to I.
        if im.mode not in ("I;16", "I;16B", "I"):
            raise DepthFormatError(
                f"{path}: expected 16-bit single-channel depth, got mode {im.mode}"
            )
        arr = np.asarray(im, dtype=np.int64)
    if arr.ndim != 2:
        raise DepthFormatError(f"{path}: depth image must be single-channel")
    if arr.min() < 0 or arr.max() > 65535:
        raise DepthFormatError(f"{path}: depth values outside 16-bit range")
    return DepthMap(values=arr.astype(np.uint16), sentinels=frozenset(sentinels))


def save_depth(depth: DepthMap, path: str | Path) -> None:
    """Write a depth map as a 16-bit grayscale image (format from suffix)."""
    path = Path(path)
    arr = depth.values.astype(np.uint16)
    if path.suffix.lower() in (".pgm", ".ppm"):
        # Pillow refuses to save I;16 as PGM on some versions; write P5 directly.
        with open(path, "wb") as fh:
            fh.write(f"P5\n{depth.width} {depth.height}\n65535\n".encode("ascii"))
            fh.write(arr.astype(">u2").tobytes())
    else:
        Image.fromarray(arr).save(path)
