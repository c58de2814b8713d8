"""Independent reference implementations the test suite compares against.

Everything here is deliberately naive: explicit loops, textbook formulas,
no shared code with the package beyond numpy. If an oracle and the library
disagree, trust neither until the difference is understood.
"""
from __future__ import annotations

import math

import numpy as np


# ---------------------------------------------------------------------------
# Morphology: O(n * k^2) structuring-element scans


def _offsets(metric: str, r: float) -> list[tuple[int, int]]:
    rr = int(math.ceil(r))
    out = []
    for dy in range(-rr, rr + 1):
        for dx in range(-rr, rr + 1):
            if metric == "chebyshev":
                if max(abs(dy), abs(dx)) <= r:
                    out.append((dy, dx))
            else:
                if dy * dy + dx * dx <= r * r:
                    out.append((dy, dx))
    return out


def brute_dilate(mask: np.ndarray, metric: str, r: float) -> np.ndarray:
    h, w = mask.shape
    out = np.zeros_like(mask, dtype=bool)
    for dy, dx in _offsets(metric, r):
        ys, xs = np.nonzero(mask)
        ny, nx = ys + dy, xs + dx
        ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        out[ny[ok], nx[ok]] = True
    return out


def _shift(mask: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """out[y, x] = mask[y + dy, x + dx], False where that falls off the grid."""
    h, w = mask.shape
    out = np.zeros_like(mask, dtype=bool)
    ys = slice(max(0, -dy), min(h, h - dy))
    xs = slice(max(0, -dx), min(w, w - dx))
    if ys.start < ys.stop and xs.start < xs.stop:
        out[ys, xs] = mask[ys.start + dy : ys.stop + dy, xs.start + dx : xs.stop + dx]
    return out


def brute_erode(mask: np.ndarray, metric: str, r: float) -> np.ndarray:
    """A pixel survives only if the whole structuring element fits in the mask
    (neighborhoods beyond the border count as unset). One shifted-AND per
    offset; see brute_erode_pixelloop for the loop form this was checked
    against."""
    out = mask.copy()
    for dy, dx in _offsets(metric, r):
        out &= _shift(mask, dy, dx)
    return out


def brute_erode_pixelloop(mask: np.ndarray, metric: str, r: float) -> np.ndarray:
    """Triple-loop erosion kept as a guard on brute_erode itself."""
    h, w = mask.shape
    out = np.zeros_like(mask, dtype=bool)
    offs = _offsets(metric, r)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            keep = True
            for dy, dx in offs:
                ny, nx = y + dy, x + dx
                if ny < 0 or ny >= h or nx < 0 or nx >= w or not mask[ny, nx]:
                    keep = False
                    break
            out[y, x] = keep
    return out


def brute_closing(mask: np.ndarray, metric: str, r: float) -> np.ndarray:
    return brute_erode(brute_dilate(mask, metric, r), metric, r)


def brute_donut(
    mask: np.ndarray,
    min_px: float,
    max_px: float,
    metric: str,
    close_px: float,
) -> np.ndarray:
    closed = brute_closing(mask, metric, close_px) if close_px > 0 else mask
    outer = brute_dilate(closed, metric, max_px)
    inner = brute_dilate(closed, metric, min_px)
    return outer & ~inner


def brute_nearest_site(mask: np.ndarray):
    """Per-pixel nearest set pixel, ties by (dist^2, column, row)."""
    h, w = mask.shape
    sites = np.argwhere(mask)
    site_row = np.zeros((h, w), dtype=np.int64)
    site_col = np.zeros((h, w), dtype=np.int64)
    dist_sq = np.zeros((h, w), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            best = None
            for sy, sx in sites:
                d2 = (int(sy) - y) ** 2 + (int(sx) - x) ** 2
                key = (d2, int(sx), int(sy))
                if best is None or key < best:
                    best = key
            dist_sq[y, x], site_col[y, x], site_row[y, x] = best
    return site_row, site_col, dist_sq


# ---------------------------------------------------------------------------
# Geometry: scalar even-odd point-in-polygon


def point_in_rings(px: float, py: float, rings) -> bool:
    """Even-odd ray cast over every ring; a hole ring flips the vertex back out."""
    inside = False
    for ring in rings:
        n = len(ring)
        for k in range(n):
            x1, y1 = ring[k]
            x2, y2 = ring[(k + 1) % n]
            if (y1 > py) != (y2 > py):
                x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
                if px < x_at:
                    inside = not inside
    return inside


def random_convex_polygon(rng: np.random.Generator, center, radius: float, n: int):
    """Convex vertex fan: sorted angles at jittered radii around a center."""
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, n))
    radii = radius * rng.uniform(0.6, 1.0, n)
    cx, cy = center
    return tuple(
        (cx + r * math.cos(a), cy + r * math.sin(a)) for a, r in zip(angles, radii)
    )


# ---------------------------------------------------------------------------
# Solar position: low-accuracy fractional-year series (independent of the
# Julian-century formulation in the package; agreement only to ~a degree)


def solar_azimuth_lowacc(ts, lat: float, lon: float) -> float:
    doy = ts.timetuple().tm_yday
    hours = ts.hour + ts.minute / 60.0 + ts.second / 3600.0
    gamma = 2.0 * math.pi / 365.0 * (doy - 1 + (hours - 12.0) / 24.0)
    eqtime = 229.18 * (
        0.000075
        + 0.001868 * math.cos(gamma)
        - 0.032077 * math.sin(gamma)
        - 0.014615 * math.cos(2 * gamma)
        - 0.040849 * math.sin(2 * gamma)
    )
    decl = (
        0.006918
        - 0.399912 * math.cos(gamma)
        + 0.070257 * math.sin(gamma)
        - 0.006758 * math.cos(2 * gamma)
        + 0.000907 * math.sin(2 * gamma)
        - 0.002697 * math.cos(3 * gamma)
        + 0.00148 * math.sin(3 * gamma)
    )
    tst = hours * 60.0 + eqtime + 4.0 * lon
    ha = math.radians(tst / 4.0 - 180.0)
    latr = math.radians(lat)
    east = -math.cos(decl) * math.sin(ha)
    north = math.cos(latr) * math.sin(decl) - math.sin(latr) * math.cos(decl) * math.cos(ha)
    return math.degrees(math.atan2(east, north)) % 360.0


# ---------------------------------------------------------------------------
# DSL: random AST generation and a memo-free evaluator


def random_ast(rng: np.random.Generator, depth: int, bands=("red", "elevation"), polygons=("park",)):
    """Random well-typed mask AST, depth-bounded; leaves resolve in the
    synthetic reference scenario."""
    from trapaudit import dsl

    def grid():
        band = bands[rng.integers(len(bands))]
        if rng.random() < 0.4:
            return dsl.GradientOf(band)
        return dsl.BandRef(band)

    def leaf():
        roll = rng.random()
        if roll < 0.55:
            op = ("<", "<=", ">", ">=")[rng.integers(4)]
            value = round(float(rng.uniform(-2.0, 2.0)), 3)
            return dsl.Compare(grid(), op, value)
        if roll < 0.8:
            return dsl.WithinPolygon(polygons[rng.integers(len(polygons))])
        e = round(float(rng.uniform(100000.0, 102000.0)), 1)
        n = round(float(rng.uniform(100000.0, 102000.0)), 1)
        return dsl.WithinDisk(e, n, round(float(rng.uniform(50.0, 800.0)), 1))

    def node(d: int):
        if d <= 0:
            return leaf()
        roll = rng.random()
        if roll < 0.25:
            return dsl.And(node(d - 1), node(d - 1))
        if roll < 0.5:
            return dsl.Or(node(d - 1), node(d - 1))
        if roll < 0.65:
            return dsl.Not(node(d - 1))
        if roll < 0.85:
            lo = round(float(rng.uniform(0.0, 80.0)), 1)
            hi = lo + round(float(rng.uniform(10.0, 200.0)), 1)
            metric = ("euclidean", "chebyshev")[rng.integers(2)]
            close = float(rng.choice([0.0, 10.0, 20.0]))
            return dsl.Near(node(d - 1), lo, hi, metric, close)
        return leaf()

    return node(depth)


def naive_evaluate(node, scenario):
    """Memo-free evaluation by direct recursion over public module calls."""
    from trapaudit import dsl
    from trapaudit.facing import BearingInterval, bearing_filter
    from trapaudit.geometry import ObfuscationDisk, disk_mask, rasterize_polygon
    from trapaudit.grid import BitMask, gradient_magnitude, threshold
    from trapaudit.morphology import Metric, donut, mask_and, mask_not, mask_or

    stack = scenario.stack
    gt = stack.geotransform
    w, h = stack.width, stack.height

    def grid(g):
        if isinstance(g, dsl.BandRef):
            return stack.band(g.name)
        return gradient_magnitude(stack, g.band)

    def ev(n):
        if isinstance(n, dsl.Compare):
            return threshold(grid(n.grid), n.op, n.value)
        if isinstance(n, dsl.And):
            return mask_and(ev(n.left), ev(n.right))
        if isinstance(n, dsl.Or):
            return mask_or(ev(n.left), ev(n.right))
        if isinstance(n, dsl.Not):
            return mask_not(ev(n.expr))
        if isinstance(n, dsl.Near):
            if n.metric == "chebyshev":
                close = Metric.chebyshev_from_meters(n.close_m, gt.pixel_size)
            else:
                close = Metric("euclidean", n.close_m)
            return donut(ev(n.expr), n.min_m, n.max_m, n.metric, close, pixel_size=gt.pixel_size)
        if isinstance(n, dsl.Bearing):
            if n.min_deg == n.max_deg:
                iv = BearingInterval.full_circle()
            else:
                iv = BearingInterval(n.min_deg, n.max_deg, wraps=n.min_deg > n.max_deg)
            return bearing_filter(BitMask.full(w, h, True), ev(n.expr), iv, gt)
        if isinstance(n, dsl.WithinPolygon):
            return rasterize_polygon(scenario.polygons[n.polygon_id], gt, w, h)
        if isinstance(n, dsl.WithinDisk):
            return disk_mask(
                ObfuscationDisk(n.center_easting, n.center_northing, n.radius_m), gt, w, h
            )
        raise AssertionError(f"unhandled node {type(n).__name__}")

    return ev(node)
