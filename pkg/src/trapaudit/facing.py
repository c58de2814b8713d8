"""Camera-facing heuristics: solar azimuth and bearing-wedge filtering.

A camera photographing sunrise and sunset light constrains its facing. The
sun's azimuth at the frame timestamps comes from the standard low-accuracy
solar-position algorithm (fractional-year declination plus equation of time
plus hour angle); combining "which side of the frame the sun was on" at two
events yields a bearing interval, which in turn filters candidate pixels by
the bearing toward the nearest landmark pixel.

Bearings are degrees clockwise from true north. Timestamps are RFC 3339 UTC.
Atmospheric refraction and magnetic declination are ignored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import FacingInconsistencyError, ParameterError
from .grid import BitMask, Geotransform, _require_same_shape
from .morphology import nearest_site

SIDES = ("left", "right", "center")


def parse_utc(text: str) -> datetime:
    """Parse an RFC 3339 timestamp; naive inputs are taken as UTC."""
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00").replace("z", "+00:00"))
    except ValueError as exc:
        raise ParameterError(f"bad RFC 3339 timestamp {text!r}: {exc}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class SolarQuery:
    """When and where to evaluate the sun's position."""

    timestamp: datetime
    latitude: float
    longitude: float

    def __post_init__(self):
        if abs(self.latitude) > 90:
            raise ParameterError(f"latitude out of range: {self.latitude}")
        if abs(self.longitude) > 180:
            raise ParameterError(f"longitude out of range: {self.longitude}")
        if self.timestamp.tzinfo is None:
            raise ParameterError("timestamp must be timezone-aware UTC")


@dataclass(frozen=True)
class BearingInterval:
    """Closed arc of bearings [min_deg, max_deg], possibly crossing north.

    min_deg == max_deg is only legal with wraps=True, which denotes the full
    circle (no constraint).
    """

    min_deg: float
    max_deg: float
    wraps: bool = False

    def __post_init__(self):
        for v in (self.min_deg, self.max_deg):
            if not (0 <= v < 360):
                raise ParameterError(f"bearing {v} outside [0, 360)")
        if self.min_deg == self.max_deg and not self.wraps:
            raise ParameterError("zero-width interval; flag wraps=True for full circle")
        if not self.wraps and self.min_deg > self.max_deg:
            raise ParameterError("min_deg > max_deg requires wraps=True")

    @classmethod
    def full_circle(cls) -> "BearingInterval":
        return cls(0.0, 0.0, wraps=True)

    @property
    def is_full(self) -> bool:
        return self.wraps and self.min_deg == self.max_deg

    def contains(self, bearing) -> np.ndarray | bool:
        b = np.asarray(bearing, dtype=np.float64) % 360.0
        if self.is_full:
            out = np.ones_like(b, dtype=bool)
        elif self.wraps:
            out = (b >= self.min_deg) | (b <= self.max_deg)
        else:
            out = (b >= self.min_deg) & (b <= self.max_deg)
        return out if out.ndim else bool(out)


def _declination_eqtime(ts: datetime) -> tuple[float, float]:
    """Sun declination (radians) and equation of time (minutes) at a UTC instant.

    Julian-century series as used by the NOAA solar calculator; accuracy is
    on the order of arcminutes, far inside what facing intervals need.
    """
    jd = ts.timestamp() / 86400.0 + 2440587.5
    jc = (jd - 2451545.0) / 36525.0

    gml = math.radians((280.46646 + jc * (36000.76983 + 0.0003032 * jc)) % 360.0)
    gma = math.radians(357.52911 + jc * (35999.05029 - 0.0001537 * jc))
    ecc = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc)
    center = math.radians(
        math.sin(gma) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
        + math.sin(2 * gma) * (0.019993 - 0.000101 * jc)
        + math.sin(3 * gma) * 0.000289
    )
    true_long = gml + center
    omega = math.radians(125.04 - 1934.136 * jc)
    apparent_long = true_long - math.radians(0.00569 + 0.00478 * math.sin(omega))
    mean_obliq = 23.0 + (
        26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0
    ) / 60.0
    obliq = math.radians(mean_obliq + 0.00256 * math.cos(omega))

    decl = math.asin(math.sin(obliq) * math.sin(apparent_long))
    var_y = math.tan(obliq / 2.0) ** 2
    eqtime = 4.0 * math.degrees(
        var_y * math.sin(2 * gml)
        - 2.0 * ecc * math.sin(gma)
        + 4.0 * ecc * var_y * math.sin(gma) * math.cos(2 * gml)
        - 0.5 * var_y * var_y * math.sin(4 * gml)
        - 1.25 * ecc * ecc * math.sin(2 * gma)
    )
    return decl, eqtime


def _solar_azimuth_raw(ts: datetime, lat: float, lon: float) -> float:
    t = ts.astimezone(timezone.utc)
    decl, eqtime = _declination_eqtime(t)
    minutes = (
        t.hour * 60.0 + t.minute + t.second / 60.0 + t.microsecond / 6e7
    )
    tst = (minutes + eqtime + 4.0 * lon) % 1440.0  # true solar time, minutes
    ha = math.radians(tst / 4.0 - 180.0)

    latr = math.radians(lat)
    east = -math.cos(decl) * math.sin(ha)
    north = math.cos(latr) * math.sin(decl) - math.sin(latr) * math.cos(decl) * math.cos(ha)
    if abs(east) < 1e-12 and abs(north) < 1e-12:
        # zenith degeneracy: pick the east/west branch by hour-angle sign
        return 90.0 if ha <= 0 else 270.0
    return math.degrees(math.atan2(east, north)) % 360.0


def solar_azimuth(query: SolarQuery) -> float:
    """Topocentric solar azimuth in degrees clockwise from true north.

    At the exact zenith the azimuth is degenerate; the east branch (90) is
    returned before local solar noon and the west branch (270) after.
    """
    return _solar_azimuth_raw(query.timestamp, query.latitude, query.longitude)


def _side_constraint(azimuth: float, side: str, fov: float) -> tuple[float, float]:
    """(start, width) arc of facings consistent with the sun on one frame side.

    center: the sun sits inside the horizontal field of view.
    left/right: the sun is beyond that frame edge (lighting, shadows, or glare
    reveal it without the disk being in frame).
    """
    if side == "center":
        return azimuth - fov / 2.0, fov
    if side == "left":
        return azimuth + fov / 2.0, 180.0 - fov / 2.0
    if side == "right":
        return azimuth - 180.0, 180.0 - fov / 2.0
    raise ParameterError(f"sun side must be one of {SIDES}, got {side!r}")


def _intersect_arcs(a: tuple[float, float], b: tuple[float, float]) -> tuple[float, float] | None:
    """Intersect two circular arcs given as (start, width); widths < 180 each,
    so the intersection is a single arc or empty."""
    a_start = a[0] % 360.0
    shifted = (b[0] - a_start) % 360.0
    best = None
    for b_start in (shifted, shifted - 360.0):
        lo = max(0.0, b_start)
        hi = min(a[1], b_start + b[1])
        if hi > lo and (best is None or hi - lo > best[1] - best[0]):
            best = (lo, hi)
    if best is None:
        return None
    return (a_start + best[0]) % 360.0, best[1] - best[0]


def facing_interval(
    sunrise_azimuth: float,
    sunset_azimuth: float,
    sun_side_at_sunrise: str,
    sun_side_at_sunset: str,
    horizontal_fov: float = 40.0,
) -> BearingInterval:
    """Camera-facing bearings consistent with both sun-side observations.

    Raises FacingInconsistencyError when no facing satisfies both.
    """
    if not (0 < horizontal_fov < 180):
        raise ParameterError(f"horizontal fov must be in (0, 180), got {horizontal_fov}")
    c1 = _side_constraint(sunrise_azimuth % 360.0, sun_side_at_sunrise, horizontal_fov)
    c2 = _side_constraint(sunset_azimuth % 360.0, sun_side_at_sunset, horizontal_fov)
    arc = _intersect_arcs(c1, c2)
    if arc is None or arc[1] <= 0:
        raise FacingInconsistencyError(
            f"no facing puts the sun {sun_side_at_sunrise} at sunrise "
            f"({sunrise_azimuth:.1f} deg) and {sun_side_at_sunset} at sunset "
            f"({sunset_azimuth:.1f} deg) with fov {horizontal_fov} deg"
        )
    start, width = arc
    return BearingInterval(start % 360.0, (start + width) % 360.0, wraps=(start + width) >= 360.0)


def bearing_filter(
    candidates: BitMask,
    landmark: BitMask,
    interval: BearingInterval,
    gt: Geotransform,
) -> BitMask:
    """Keep candidates whose bearing toward the nearest landmark pixel fits.

    Nearest is Euclidean with deterministic tie-breaking (see nearest_site).
    Candidates lying on the landmark itself have no defined bearing and are
    always kept. A full-circle interval is the identity.
    """
    _require_same_shape(candidates, landmark)
    if not landmark.data.any():
        raise ParameterError("bearing filter needs a nonempty landmark mask")
    if interval.is_full:
        return candidates
    site_row, site_col, dist_sq = nearest_site(landmark.data)
    h, w = candidates.data.shape
    d_east = site_col - np.arange(w, dtype=np.int64)[None, :]
    d_north = np.arange(h, dtype=np.int64)[:, None] - site_row  # row grows southward
    bearings = np.degrees(np.arctan2(d_east, d_north)) % 360.0
    keep = interval.contains(bearings) | (dist_sq == 0)
    return BitMask(candidates.data & keep)
