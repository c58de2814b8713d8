"""Scenario assembly and synthetic test-area generation.

A scenario bundles a raster stack, named boundary polygons, and camera
records (published location, obfuscation radius, optionally the true
location for audits). Geographic coordinates are converted to the local
planar frame with an equirectangular approximation about the scenario
anchor, which is pinned to the raster center; at study-area scales the
approximation error is far below one pixel.

The synthetic generator builds a deterministic landscape (smooth noise,
one steep ridge, reflectance blobs laid out near the ridge) plus a park
polygon and a single camera placed uniformly at random among the pixels
matching a target expression, so end-to-end audits have a known answer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dsl
from .errors import ScenarioError
from .geometry import Polygon
from .grid import Geotransform, GridF32, RasterStack
from .tiff import load_stack, save_stack, write_manifest

METERS_PER_DEGREE = 111320.0


@dataclass(frozen=True)
class CameraRecord:
    """One deployed camera: what the public sees, and (optionally) the truth."""

    id: str
    published_location: tuple[float, float]  # (easting, northing) m
    obfuscation_radius: float
    true_location: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.id:
            raise ScenarioError("camera id must be a non-empty string")
        if not (math.isfinite(self.obfuscation_radius) and self.obfuscation_radius > 0):
            raise ScenarioError(
                f"camera {self.id!r}: obfuscation radius must be positive, "
                f"got {self.obfuscation_radius}"
            )


@dataclass(frozen=True)
class Scenario:
    """Immutable audit scenario: rasters + polygons + cameras + anchor."""

    stack: RasterStack
    polygons: dict[str, Polygon] = field(default_factory=dict)
    cameras: tuple[CameraRecord, ...] = ()
    anchor: tuple[float, float] = (0.0, 0.0)  # (lat, lon)

    def camera(self, camera_id: str) -> CameraRecord:
        for cam in self.cameras:
            if cam.id == camera_id:
                return cam
        known = sorted(c.id for c in self.cameras)
        raise ScenarioError(f"unknown camera {camera_id!r}; available: {known}")


@dataclass(frozen=True)
class SyntheticParams:
    """Knobs for the synthetic landscape; defaults produce the reference area."""

    pixel_size_m: float = 10.0
    anchor: tuple[float, float] = (0.25, 30.5)
    obfuscation_radius_m: float = 1000.0
    noise_amplitude_m: float = 40.0
    ridge_height_m: float = 60.0
    ridge_width_px: float = 3.0
    blob_count: int = 3
    blob_radius_px: float = 6.0
    blob_offset_px: float = 8.0
    red_threshold: float = 0.65
    grad_threshold: float = 0.25
    near_min_m: float = 20.0
    near_max_m: float = 160.0

    def target_expr(self) -> str:
        """Filter text the generated camera is guaranteed to satisfy."""
        fmt = dsl.format_number
        return (
            f"near(red > {fmt(self.red_threshold)}, "
            f"min={fmt(self.near_min_m)}, max={fmt(self.near_max_m)}, "
            f"metric=euclidean, close=0) "
            f"& grad(elevation) > {fmt(self.grad_threshold)}"
        )


@dataclass(frozen=True)
class GroundTruth:
    """What the generator knows and an auditor is trying to recover."""

    seed: int
    target_expr: str
    camera_id: str
    camera_pixel: tuple[int, int]  # (row, col)


# ---------------------------------------------------------------------------
# Coordinate conversion


def geographic_to_local(
    lat: float, lon: float, anchor: tuple[float, float], center: tuple[float, float]
) -> tuple[float, float]:
    """Equirectangular (lat, lon) -> (easting, northing); anchor maps to center."""
    alat, alon = anchor
    ce, cn = center
    east = ce + (lon - alon) * math.cos(math.radians(alat)) * METERS_PER_DEGREE
    north = cn + (lat - alat) * METERS_PER_DEGREE
    return east, north


def local_to_geographic(
    east: float, north: float, anchor: tuple[float, float], center: tuple[float, float]
) -> tuple[float, float]:
    alat, alon = anchor
    ce, cn = center
    lat = alat + (north - cn) / METERS_PER_DEGREE
    lon = alon + (east - ce) / (math.cos(math.radians(alat)) * METERS_PER_DEGREE)
    return lat, lon


def raster_center(stack: RasterStack) -> tuple[float, float]:
    gt = stack.geotransform
    return (
        gt.origin_easting + stack.width * gt.pixel_size / 2.0,
        gt.origin_northing - stack.height * gt.pixel_size / 2.0,
    )


def _looks_geographic(pairs, lat_index: int) -> bool:
    """True when every coordinate pair fits in lat/lon ranges.

    Planar scenarios should sit on a false origin (coordinates above a few
    hundred meters) so small local coordinates are not mistaken for degrees.
    """
    lat_ok = all(abs(p[lat_index]) <= 90.0 for p in pairs)
    lon_ok = all(abs(p[1 - lat_index]) <= 180.0 for p in pairs)
    return lat_ok and lon_ok


# ---------------------------------------------------------------------------
# Manifest loading


def _load_polygon(path: Path, anchor, center) -> Polygon:
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read polygon file {path}: {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(f"polygon file {path} is not valid JSON: {exc}") from exc
    rings = _geojson_rings(obj, path)
    # GeoJSON positions are [lon, lat] (or already-projected [e, n])
    geographic = _looks_geographic([pt for ring in rings for pt in ring], lat_index=1)
    converted = []
    for ring in rings:
        pts = list(ring)
        if len(pts) > 1 and pts[0] == pts[-1]:
            pts = pts[:-1]  # rings arrive explicitly closed; ours are implicit
        if geographic:
            pts = [geographic_to_local(lat, lon, anchor, center) for lon, lat in pts]
        else:
            pts = [(float(x), float(y)) for x, y in pts]
        converted.append(tuple(pts))
    # Even-odd rasterization treats every ring the same, so a MultiPolygon
    # flattens to one exterior plus the remaining rings without losing area.
    return Polygon(exterior=converted[0], holes=tuple(converted[1:]))


def _geojson_rings(obj, path: Path) -> list:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected a GeoJSON object")
    kind = obj.get("type")
    if kind == "FeatureCollection":
        features = obj.get("features") or []
        if len(features) != 1:
            raise ScenarioError(
                f"{path}: need exactly one feature per polygon file, got {len(features)}"
            )
        return _geojson_rings(features[0], path)
    if kind == "Feature":
        return _geojson_rings(obj.get("geometry") or {}, path)
    if kind == "Polygon":
        rings = obj.get("coordinates") or []
        if not rings:
            raise ScenarioError(f"{path}: polygon has no rings")
        return rings
    if kind == "MultiPolygon":
        rings = [ring for part in obj.get("coordinates") or [] for ring in part]
        if not rings:
            raise ScenarioError(f"{path}: multipolygon has no rings")
        return rings
    raise ScenarioError(f"{path}: unsupported GeoJSON type {kind!r}")


def _camera_point(raw, label: str, camera_id: str, anchor, center) -> tuple[float, float]:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not all(isinstance(v, (int, float)) for v in raw)
    ):
        raise ScenarioError(
            f"camera {camera_id!r}: {label} must be [lat, lon] or [easting, northing]"
        )
    a, b = float(raw[0]), float(raw[1])
    if _looks_geographic([(a, b)], lat_index=0):
        return geographic_to_local(a, b, anchor, center)
    return a, b


def validate_scenario(scenario: Scenario) -> None:
    """Check the documented invariants; raises ScenarioError on violation."""
    ids = [c.id for c in scenario.cameras]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ScenarioError(f"duplicate camera ids: {dupes}")
    min_e, min_n, max_e, max_n = scenario.stack.geotransform.extent(
        scenario.stack.width, scenario.stack.height
    )
    for cam in scenario.cameras:
        r = cam.obfuscation_radius
        pe, pn = cam.published_location
        if not (min_e - r <= pe <= max_e + r and min_n - r <= pn <= max_n + r):
            raise ScenarioError(
                f"camera {cam.id!r}: published location ({pe:.1f}, {pn:.1f}) lies "
                f"more than one obfuscation radius outside the raster extent"
            )
        if cam.true_location is not None:
            te, tn = cam.true_location
            d = math.hypot(te - pe, tn - pn)
            if d > r * (1.0 + 1e-9) + 1e-6:
                raise ScenarioError(
                    f"camera {cam.id!r}: true location is {d:.1f} m from the "
                    f"published point, beyond the {r:.1f} m obfuscation radius"
                )


def load_scenario(manifest_path: str | Path) -> Scenario:
    """Read a scenario manifest (JSON) and resolve every referenced file.

    Relative paths resolve against the manifest's directory. Coordinates in
    lat/lon range are treated as geographic and projected about the anchor;
    anything else is taken as local meters.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict):
        raise ScenarioError(f"manifest {manifest_path} must be a JSON object")
    for key in ("raster", "bands_manifest", "anchor", "cameras"):
        if key not in manifest:
            raise ScenarioError(f"manifest is missing required key {key!r}")
    base = manifest_path.parent

    def resolve(p) -> Path:
        path = Path(p)
        return path if path.is_absolute() else base / path

    try:
        stack = load_stack(resolve(manifest["raster"]), resolve(manifest["bands_manifest"]))
    except OSError as exc:
        raise ScenarioError(f"cannot read raster: {exc}") from exc

    anchor_raw = manifest["anchor"]
    if (
        not isinstance(anchor_raw, (list, tuple))
        or len(anchor_raw) != 2
        or not all(isinstance(v, (int, float)) for v in anchor_raw)
    ):
        raise ScenarioError("anchor must be [lat, lon]")
    anchor = (float(anchor_raw[0]), float(anchor_raw[1]))
    if not (abs(anchor[0]) <= 90 and abs(anchor[1]) <= 180):
        raise ScenarioError(f"anchor out of range: {anchor}")
    center = raster_center(stack)

    polygons: dict[str, Polygon] = {}
    for pid, ppath in (manifest.get("polygons") or {}).items():
        polygons[pid] = _load_polygon(resolve(ppath), anchor, center)

    cameras = []
    for entry in manifest["cameras"]:
        if not isinstance(entry, dict) or "id" not in entry:
            raise ScenarioError("each camera entry needs at least an 'id'")
        cid = str(entry["id"])
        for key in ("published", "radius_m"):
            if key not in entry:
                raise ScenarioError(f"camera {cid!r} is missing {key!r}")
        published = _camera_point(entry["published"], "published", cid, anchor, center)
        true_loc = None
        if entry.get("true") is not None:
            true_loc = _camera_point(entry["true"], "true", cid, anchor, center)
        cameras.append(
            CameraRecord(
                id=cid,
                published_location=published,
                obfuscation_radius=float(entry["radius_m"]),
                true_location=true_loc,
            )
        )

    scenario = Scenario(
        stack=stack, polygons=polygons, cameras=tuple(cameras), anchor=anchor
    )
    validate_scenario(scenario)
    return scenario


# ---------------------------------------------------------------------------
# Obfuscation


def obfuscate(
    true_location: tuple[float, float],
    radius: float,
    rng: int | np.random.Generator,
) -> tuple[float, float]:
    """Publishable point, uniform over the disk of `radius` m around the truth.

    Polar sampling with the sqrt-radial transform; the result is always
    within the closed disk, so the disk about the published point is
    guaranteed to contain the true location.
    """
    if not (math.isfinite(radius) and radius > 0):
        raise ScenarioError(f"obfuscation radius must be positive, got {radius}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    u, v = rng.random(2)
    d = radius * math.sqrt(u)
    theta = 2.0 * math.pi * v
    return true_location[0] + d * math.cos(theta), true_location[1] + d * math.sin(theta)


# ---------------------------------------------------------------------------
# Synthetic generation


def _smooth_field(rng: np.random.Generator, size: int, cell: int) -> np.ndarray:
    """Smooth random field in [0, 1]: bilinear upsample of a coarse lattice."""
    coarse = rng.standard_normal((size // cell + 2, size // cell + 2))
    pos = np.arange(size, dtype=np.float64) / cell
    i0 = pos.astype(np.intp)
    t = pos - i0
    rows = coarse[i0] * (1.0 - t)[:, None] + coarse[i0 + 1] * t[:, None]
    out = rows[:, i0] * (1.0 - t)[None, :] + rows[:, i0 + 1] * t[None, :]
    lo, hi = out.min(), out.max()
    if hi <= lo:
        return np.zeros_like(out)
    return (out - lo) / (hi - lo)


def generate_synthetic(
    seed: int, size: int = 256, params: SyntheticParams | None = None
) -> tuple[Scenario, GroundTruth]:
    """Deterministic audit scenario with a known camera placement.

    The landscape has a ridge (steep elevation band) crossing the image and
    reflectance blobs offset a few pixels from the ridge line, so the target
    expression (red blobs near steep ground) always has candidate pixels.
    One camera is placed uniformly at random among those pixels and its
    published location is drawn uniformly from the obfuscation disk.
    """
    if size < 64:
        raise ScenarioError(f"size must be >= 64 pixels, got {size}")
    params = params or SyntheticParams()
    ps = params.pixel_size_m
    rng = np.random.default_rng(seed)

    # pixel-center coordinates in pixels, x=col, y=row
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    cx = cy = (size - 1) / 2.0

    base = _smooth_field(rng, size, cell=max(8, size // 16))
    theta = rng.uniform(0.0, math.pi)
    ux, uy = math.cos(theta), math.sin(theta)
    # signed distance (pixels) from the ridge line through the image center
    d_perp = (xs - cx) * (-uy) + (ys - cy) * ux
    ridge = 1.0 / (1.0 + np.exp(-d_perp / params.ridge_width_px))
    elevation = 500.0 + params.noise_amplitude_m * base + params.ridge_height_m * ridge

    red_noise = _smooth_field(rng, size, cell=max(8, size // 16))
    margin = size // 8
    along = rng.uniform(-0.35 * size, 0.35 * size, size=params.blob_count)
    blob_x = np.clip(cx + along * ux - params.blob_offset_px * uy, margin, size - 1 - margin)
    blob_y = np.clip(cy + along * uy + params.blob_offset_px * ux, margin, size - 1 - margin)
    blobs = np.zeros((size, size))
    for bx, by in zip(blob_x, blob_y):
        r2 = (xs - bx) ** 2 + (ys - by) ** 2
        blobs += np.exp(-r2 / (2.0 * params.blob_radius_px**2))
    red = np.clip(0.5 * red_noise + 0.8 * blobs, 0.0, 1.0)

    # false origin keeps local coordinates clear of the lat/lon ranges
    gt = Geotransform(100000.0, 100000.0 + size * ps, pixel_size=ps)
    stack = RasterStack(
        geotransform=gt,
        bands={
            "elevation": GridF32(elevation.astype(np.float32)),
            "red": GridF32(red.astype(np.float32)),
        },
    )

    min_e, min_n, max_e, max_n = gt.extent(size, size)
    inset = 0.08 * size * ps
    park = Polygon(
        exterior=(
            (min_e + inset, min_n + inset),
            (max_e - inset, min_n + inset),
            (max_e - inset, max_n - 2.5 * inset),
            ((min_e + max_e) / 2.0, max_n - inset),
            (min_e + inset, max_n - 2.5 * inset),
        )
    )

    bare = Scenario(stack=stack, polygons={"park": park}, anchor=params.anchor)
    target_text = params.target_expr()
    target_mask = dsl.evaluate(dsl.parse(target_text), bare)
    candidates = np.argwhere(target_mask.data)
    if len(candidates) == 0:
        raise ScenarioError(
            f"seed {seed}: target expression matched no pixels; "
            f"loosen SyntheticParams thresholds"
        )
    row, col = map(int, candidates[rng.integers(len(candidates))])
    eastings, northings = gt.pixel_centers(size, size)
    true_loc = (float(eastings[col]), float(northings[row]))
    published = obfuscate(true_loc, params.obfuscation_radius_m, rng)

    camera = CameraRecord(
        id="cam1",
        published_location=published,
        obfuscation_radius=params.obfuscation_radius_m,
        true_location=true_loc,
    )
    scenario = replace(bare, cameras=(camera,))
    validate_scenario(scenario)
    truth = GroundTruth(
        seed=seed, target_expr=target_text, camera_id="cam1", camera_pixel=(row, col)
    )
    return scenario, truth


# ---------------------------------------------------------------------------
# Saving


def save_scenario(
    scenario: Scenario, out_dir: str | Path, include_true: bool = True
) -> Path:
    """Write raster, band manifest, polygons, and manifest JSON; returns the
    manifest path, ready for load_scenario or the CLI."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raster_path = out / "raster.tif"
    bands_path = out / "bands.json"
    save_stack(scenario.stack, raster_path)
    write_manifest(
        bands_path, list(scenario.stack.bands), scenario.stack.geotransform.pixel_size
    )

    polygon_files = {}
    for pid, poly in scenario.polygons.items():
        rings = [[*map(list, ring), list(ring[0])] for ring in poly.rings()]
        geojson = {"type": "Polygon", "coordinates": rings}
        ppath = out / f"{pid}.geojson"
        ppath.write_text(json.dumps(geojson, indent=2) + "\n")
        polygon_files[pid] = ppath.name

    cameras = []
    for cam in scenario.cameras:
        entry = {
            "id": cam.id,
            "published": list(cam.published_location),
            "radius_m": cam.obfuscation_radius,
        }
        if include_true and cam.true_location is not None:
            entry["true"] = list(cam.true_location)
        cameras.append(entry)

    manifest = {
        "raster": raster_path.name,
        "bands_manifest": bands_path.name,
        "polygons": polygon_files,
        "anchor": list(scenario.anchor),
        "cameras": cameras,
    }
    manifest_path = out / "scenario.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path
