"""Vector clipping and searchable-area accounting.

Polygons and disks rasterize by testing pixel centers (not area-weighted
coverage), which matches count-pixels-times-pixel-area arithmetic exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ParameterError
from .grid import BitMask, Geotransform


@dataclass(frozen=True)
class Polygon:
    """Planar polygon in meters: one exterior ring plus optional hole rings.

    Rings are implicitly closed (do not repeat the first vertex).
    """

    exterior: tuple[tuple[float, float], ...]
    holes: tuple[tuple[tuple[float, float], ...], ...] = ()

    def __post_init__(self):
        for ring in (self.exterior, *self.holes):
            if len(ring) < 3:
                raise GeometryError(f"ring needs at least 3 vertices, got {len(ring)}")
            for x, y in ring:
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise GeometryError(f"non-finite vertex ({x}, {y})")

    def rings(self):
        yield self.exterior
        yield from self.holes

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [x for ring in self.rings() for x, _ in ring]
        ys = [y for ring in self.rings() for _, y in ring]
        return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True)
class ObfuscationDisk:
    """Published coordinate plus the obfuscation radius that hides the camera."""

    center_easting: float
    center_northing: float
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ParameterError(f"disk radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class AreaReport:
    """Searchable-area summary: pixel counts, ground area, and reductions."""

    pixel_count: int
    pixel_area_m2: float
    area_m2: float
    area_km2: float
    baselines: dict[str, float] = field(default_factory=dict)
    reductions: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pixel_count": self.pixel_count,
            "pixel_area_m2": self.pixel_area_m2,
            "area_m2": self.area_m2,
            "area_km2": self.area_km2,
            "baselines": {k: self.baselines[k] for k in sorted(self.baselines)},
            "reductions": {k: self.reductions[k] for k in sorted(self.reductions)},
        }


def rasterize_polygon(poly: Polygon, gt: Geotransform, width: int, height: int) -> BitMask:
    """Mask of pixels whose centers fall inside the polygon (even-odd rule).

    Hole rings subtract naturally: a center inside an odd number of rings is in.
    """
    eastings, northings = gt.pixel_centers(width, height)
    px = eastings[None, :]  # (1, w)
    py = northings[:, None]  # (h, 1)
    crossings = np.zeros((height, width), dtype=np.int64)
    for ring in poly.rings():
        n = len(ring)
        for k in range(n):
            x1, y1 = ring[k]
            x2, y2 = ring[(k + 1) % n]
            if y1 == y2:
                continue  # horizontal edges never cross a half-open scan ray
            straddles = (y1 > py) != (y2 > py)
            with np.errstate(invalid="ignore"):
                x_at = (py - y1) * (x2 - x1) / (y2 - y1) + x1
            crossings += straddles & (px < x_at)
    return BitMask((crossings & 1).astype(bool))


def disk_mask(disk: ObfuscationDisk, gt: Geotransform, width: int, height: int) -> BitMask:
    """Mask of pixels whose centers lie within the disk radius of its center."""
    eastings, northings = gt.pixel_centers(width, height)
    dx = eastings[None, :] - disk.center_easting
    dy = northings[:, None] - disk.center_northing
    return BitMask(dx * dx + dy * dy <= disk.radius * disk.radius)


def searchable_area(
    mask: BitMask, gt: Geotransform, baselines: dict[str, float] | None = None
) -> AreaReport:
    """Ground area covered by a mask, with optional reduction-vs-baseline ratios.

    Baselines are labelled areas in km^2; each reduction is 1 - area/baseline.
    """
    baselines = dict(baselines or {})
    for label, km2 in baselines.items():
        if not (math.isfinite(km2) and km2 > 0):
            raise ParameterError(f"baseline {label!r} must be positive km^2, got {km2}")
    count = mask.count()
    pixel_area = gt.pixel_size * gt.pixel_size
    area_m2 = count * pixel_area
    area_km2 = area_m2 / 1e6
    reductions = {label: 1.0 - area_km2 / km2 for label, km2 in baselines.items()}
    return AreaReport(
        pixel_count=count,
        pixel_area_m2=pixel_area,
        area_m2=area_m2,
        area_km2=area_km2,
        baselines=baselines,
        reductions=reductions,
    )
