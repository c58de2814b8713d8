"""Grid data model: geotransform, float bands, raster stacks, binary masks.

Coordinates live in a local meter-based planar frame. Column index increases
eastward, row index increases southward, so pixel centers sit at

    easting(col)  = origin_easting  + (col + 0.5) * pixel_size
    northing(row) = origin_northing - (row + 0.5) * pixel_size

with the origin at the outer corner of pixel (0, 0).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import BandNameError, ParameterError, ShapeError

BAND_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")

THRESHOLD_OPS = ("<", "<=", ">", ">=")


@dataclass(frozen=True)
class Geotransform:
    """Pixel-to-ground mapping: origin corner plus square pixel size in meters."""

    origin_easting: float
    origin_northing: float
    pixel_size: float = 10.0

    def __post_init__(self):
        if not (math.isfinite(self.origin_easting) and math.isfinite(self.origin_northing)):
            raise ParameterError("geotransform origin must be finite")
        if not (math.isfinite(self.pixel_size) and self.pixel_size > 0):
            raise ParameterError(f"pixel_size must be positive, got {self.pixel_size}")

    def pixel_centers(self, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
        """Center coordinates of every pixel as (eastings[w], northings[h])."""
        cols = np.arange(width, dtype=np.float64)
        rows = np.arange(height, dtype=np.float64)
        eastings = self.origin_easting + (cols + 0.5) * self.pixel_size
        northings = self.origin_northing - (rows + 0.5) * self.pixel_size
        return eastings, northings

    def extent(self, width: int, height: int) -> tuple[float, float, float, float]:
        """(min_easting, min_northing, max_easting, max_northing) of the grid."""
        return (
            self.origin_easting,
            self.origin_northing - height * self.pixel_size,
            self.origin_easting + width * self.pixel_size,
            self.origin_northing,
        )


class GridF32:
    """Single float32 band with an optional nodata sentinel.

    Immutable by convention: the backing array is set non-writeable.
    """

    __slots__ = ("values", "nodata")

    def __init__(self, values: np.ndarray, nodata: float | None = None):
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim != 2:
            raise ShapeError(f"grid must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"grid must be at least 1x1, got {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.values = arr
        self.nodata = None if nodata is None else float(nodata)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def valid_mask(self) -> np.ndarray:
        """Bool array: True where the pixel holds usable data."""
        valid = ~np.isnan(self.values)
        if self.nodata is not None and not math.isnan(self.nodata):
            valid &= self.values != np.float32(self.nodata)
        return valid

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridF32):
            return NotImplemented
        same_nodata = (self.nodata == other.nodata) or (
            self.nodata is not None
            and other.nodata is not None
            and math.isnan(self.nodata)
            and math.isnan(other.nodata)
        )
        return (
            same_nodata
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    def __repr__(self) -> str:
        return f"GridF32({self.width}x{self.height}, nodata={self.nodata})"


@dataclass(frozen=True)
class RasterStack:
    """Co-registered named bands sharing one geotransform."""

    geotransform: Geotransform
    bands: dict[str, GridF32] = field(default_factory=dict)

    def __post_init__(self):
        if not self.bands:
            raise ParameterError("raster stack needs at least one band")
        shape = None
        for name, grid in self.bands.items():
            if not BAND_NAME_RE.match(name):
                raise ParameterError(f"invalid band name {name!r}")
            if shape is None:
                shape = grid.values.shape
            elif grid.values.shape != shape:
                raise ShapeError(
                    f"band {name!r} shape {grid.values.shape} != {shape}"
                )

    @property
    def width(self) -> int:
        return next(iter(self.bands.values())).width

    @property
    def height(self) -> int:
        return next(iter(self.bands.values())).height

    @property
    def pixel_size(self) -> float:
        return self.geotransform.pixel_size

    def band(self, name: str) -> GridF32:
        try:
            return self.bands[name]
        except KeyError:
            raise BandNameError(
                f"unknown band {name!r}; available: {sorted(self.bands)}"
            ) from None


class BitMask:
    """Binary grid of candidate pixels, aligned to a raster stack."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        arr = np.ascontiguousarray(np.asarray(data, dtype=bool))
        if arr.ndim != 2:
            raise ShapeError(f"mask must be 2-D, got shape {arr.shape}")
        arr.flags.writeable = False
        self.data = arr

    @classmethod
    def full(cls, width: int, height: int, value: bool = False) -> "BitMask":
        return cls(np.full((height, width), bool(value)))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def count(self) -> int:
        return int(self.data.sum())

    def same_shape(self, other: "BitMask") -> bool:
        return self.data.shape == other.data.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMask):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        return f"BitMask({self.width}x{self.height}, set={self.count()})"


def _require_same_shape(a: BitMask, b: BitMask) -> None:
    if not a.same_shape(b):
        raise ShapeError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def gradient_magnitude(stack: RasterStack, band: str) -> GridF32:
    """Per-pixel gradient magnitude of a band, in band units per meter.

    Central differences scaled by pixel size, one-sided at the borders.
    Pixels that are nodata, or whose stencil touches a nodata pixel, come
    back as nodata (NaN unless the band carries its own sentinel).
    """
    grid = stack.band(band)
    if grid.width < 2 or grid.height < 2:
        raise ParameterError("gradient needs a band of at least 2x2 pixels")
    ps = stack.pixel_size
    v = grid.values.astype(np.float64)

    gx = np.empty_like(v)
    gx[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2.0 * ps)
    gx[:, 0] = (v[:, 1] - v[:, 0]) / ps
    gx[:, -1] = (v[:, -1] - v[:, -2]) / ps

    gy = np.empty_like(v)
    gy[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2.0 * ps)
    gy[0, :] = (v[1, :] - v[0, :]) / ps
    gy[-1, :] = (v[-1, :] - v[-2, :]) / ps

    mag = np.hypot(gx, gy).astype(np.float32)

    invalid = ~grid.valid_mask()
    if invalid.any():
        poisoned = invalid.copy()
        poisoned[:, 1:] |= invalid[:, :-1]
        poisoned[:, :-1] |= invalid[:, 1:]
        poisoned[1:, :] |= invalid[:-1, :]
        poisoned[:-1, :] |= invalid[1:, :]
        sentinel = grid.nodata if grid.nodata is not None else float("nan")
        mag = mag.copy()
        mag[poisoned] = np.float32(sentinel)
        return GridF32(mag, nodata=sentinel)
    return GridF32(mag, nodata=grid.nodata)


def threshold(grid: GridF32, op: str, value: float) -> BitMask:
    """Binary mask where `pixel <op> value` holds; nodata pixels stay unset."""
    if op not in THRESHOLD_OPS:
        raise ParameterError(f"unknown comparison {op!r}; use one of {THRESHOLD_OPS}")
    if not math.isfinite(value):
        raise ParameterError(f"threshold value must be finite, got {value}")
    v = grid.values
    if op == "<":
        bits = v < value
    elif op == "<=":
        bits = v <= value
    elif op == ">":
        bits = v > value
    else:
        bits = v >= value
    return BitMask(bits & grid.valid_mask())
