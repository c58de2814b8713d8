"""HTTP service: expression evaluation, mask overlays, and area reports.

The service owns one immutable scenario at a time (swap via POST /scenario)
plus a small LRU cache of rendered masks keyed by the canonical expression
text, so a UI can tune a threshold and fetch the overlay it just computed.
True camera locations never leave the process: /cameras serves published
points and radii only, and no other endpoint touches camera truth.
"""
from __future__ import annotations

import hashlib
import io
import threading
import time
from collections import OrderedDict

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from PIL import Image
from pydantic import BaseModel

from . import dsl
from .errors import (
    BandNameError,
    ExprTypeError,
    FacingInconsistencyError,
    ParameterError,
    ScenarioError,
)
from .geometry import AreaReport, searchable_area
from .grid import BitMask
from .scenario import Scenario, load_scenario

MAX_EXPR_BYTES = 64 * 1024
CACHE_CAPACITY = 32
OVERLAY_RGBA = (255, 0, 0, 128)  # candidate pixels: semi-transparent red


class MaskCache:
    """Thread-safe LRU of (mask, report) entries, keyed by mask id."""

    def __init__(self, capacity: int = CACHE_CAPACITY):
        self.capacity = capacity
        self._lock = threading.Lock()
        self._entries: OrderedDict[str, tuple[BitMask, AreaReport]] = OrderedDict()

    def get(self, key: str):
        with self._lock:
            entry = self._entries.get(key)
            if entry is not None:
                self._entries.move_to_end(key)
            return entry

    def put(self, key: str, value) -> None:
        with self._lock:
            self._entries[key] = value
            self._entries.move_to_end(key)
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()


def mask_id_for(canonical: str) -> str:
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def build_report(mask: BitMask, scenario: Scenario) -> AreaReport:
    """AreaReport with the full raster extent as the reduction baseline."""
    gt = scenario.stack.geotransform
    raster_km2 = (
        scenario.stack.width * scenario.stack.height * gt.pixel_size**2 / 1e6
    )
    return searchable_area(mask, gt, baselines={"raster": raster_km2})


def render_mask_png(mask: BitMask) -> bytes:
    rgba = np.zeros((mask.height, mask.width, 4), dtype=np.uint8)
    rgba[mask.data] = OVERLAY_RGBA
    buf = io.BytesIO()
    Image.fromarray(rgba, "RGBA").save(buf, format="PNG")
    return buf.getvalue()


def render_preview_png(scenario: Scenario, band: str) -> bytes:
    grid = scenario.stack.band(band)
    vals = np.asarray(grid.values, dtype=np.float64)
    valid = grid.valid_mask()
    gray = np.zeros(vals.shape, dtype=np.uint8)
    if valid.any():
        lo = float(vals[valid].min())
        hi = float(vals[valid].max())
        if hi > lo:
            stretched = np.clip((vals - lo) / (hi - lo), 0.0, 1.0)
        else:
            stretched = np.full(vals.shape, 0.5)
        gray[valid] = np.round(stretched[valid] * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(gray, "L").save(buf, format="PNG")
    return buf.getvalue()


class EvalRequest(BaseModel):
    expr: str
    metric: str | None = None


class ScenarioRequest(BaseModel):
    manifest: str


def _parse_error_body(exc: dsl.ParseError) -> dict:
    return {
        "error": "parse",
        "offset": exc.offset,
        "line": exc.line,
        "column": exc.column,
        "message": exc.message,
        "expected": list(exc.expected),
    }


def _type_error_body(exc: ExprTypeError, text: str) -> dict:
    offset = exc.offset if exc.offset is not None else 0
    offset = min(offset, len(text))
    line = text.count("\n", 0, offset) + 1
    column = offset - text.rfind("\n", 0, offset)
    return {
        "error": "type",
        "offset": offset,
        "line": line,
        "column": column,
        "message": str(exc),
        "expected": [],
    }


def create_app(scenario: Scenario | None = None) -> FastAPI:
    app = FastAPI(title="geo-obfuscation audit service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    state = {"scenario": scenario, "cache": MaskCache()}
    swap_lock = threading.Lock()

    def current() -> Scenario:
        sc = state["scenario"]
        if sc is None:
            raise ScenarioError("no scenario loaded; POST /scenario first")
        return sc

    @app.exception_handler(ScenarioError)
    async def _scenario_error(request: Request, exc: ScenarioError):
        status = 409 if "no scenario loaded" in str(exc) else 400
        return JSONResponse({"error": "scenario", "message": str(exc)}, status_code=status)

    @app.get("/meta")
    def meta():
        sc = current()
        gt = sc.stack.geotransform
        return {
            "width": sc.stack.width,
            "height": sc.stack.height,
            "pixel_size_m": gt.pixel_size,
            "extent": list(gt.extent(sc.stack.width, sc.stack.height)),
            "anchor": list(sc.anchor),
        }

    @app.get("/bands")
    def bands():
        sc = current()
        out = []
        for name, grid in sc.stack.bands.items():
            valid = grid.valid_mask()
            vals = grid.values[valid]
            out.append(
                {
                    "name": name,
                    "min": float(vals.min()) if vals.size else None,
                    "max": float(vals.max()) if vals.size else None,
                }
            )
        return {"bands": out}

    @app.get("/polygons")
    def polygons():
        sc = current()
        return {
            "polygons": [
                {"id": pid, "rings": [[list(pt) for pt in ring] for ring in poly.rings()]}
                for pid, poly in sorted(sc.polygons.items())
            ]
        }

    @app.get("/cameras")
    def cameras():
        # published points and radii only; true locations are never served
        sc = current()
        return {
            "cameras": [
                {
                    "id": cam.id,
                    "published": list(cam.published_location),
                    "radius_m": cam.obfuscation_radius,
                }
                for cam in sc.cameras
            ]
        }

    @app.post("/eval")
    def eval_expr(body: EvalRequest):
        sc = current()
        if len(body.expr.encode()) > MAX_EXPR_BYTES:
            return JSONResponse(
                {"error": "too_large", "message": f"expression exceeds {MAX_EXPR_BYTES} bytes"},
                status_code=413,
            )
        metric = body.metric or "euclidean"
        if metric not in dsl.METRICS:
            return JSONResponse(
                {"error": "metric", "message": f"metric must be one of {dsl.METRICS}"},
                status_code=400,
            )
        try:
            node = dsl.parse(body.expr, default_metric=metric)
        except dsl.ParseError as exc:
            return JSONResponse(_parse_error_body(exc), status_code=400)
        except ExprTypeError as exc:
            return JSONResponse(_type_error_body(exc, body.expr), status_code=400)
        canonical = dsl.format_expr(node)
        mask_id = mask_id_for(canonical)
        cache: MaskCache = state["cache"]
        started = time.perf_counter()
        entry = cache.get(mask_id)
        if entry is None:
            try:
                mask = dsl.evaluate(node, sc)
            except ExprTypeError as exc:
                return JSONResponse(_type_error_body(exc, body.expr), status_code=400)
            except (BandNameError, ParameterError, FacingInconsistencyError) as exc:
                return JSONResponse(
                    {"error": "eval", "message": str(exc)}, status_code=400
                )
            report = build_report(mask, sc)
            cache.put(mask_id, (mask, report))
        else:
            mask, report = entry
        eval_ms = (time.perf_counter() - started) * 1000.0
        return {
            "mask_id": mask_id,
            "report": report.to_dict(),
            "expr_canonical": canonical,
            "eval_ms": eval_ms,
        }

    @app.get("/mask/{mask_id}.png")
    def mask_png(mask_id: str):
        current()
        entry = state["cache"].get(mask_id)
        if entry is None:
            return JSONResponse(
                {"error": "mask", "message": f"mask {mask_id!r} not cached (evicted?)"},
                status_code=404,
            )
        return Response(render_mask_png(entry[0]), media_type="image/png")

    @app.get("/preview/{band}.png")
    def preview_png(band: str):
        sc = current()
        try:
            png = render_preview_png(sc, band)
        except BandNameError as exc:
            return JSONResponse({"error": "band", "message": str(exc)}, status_code=404)
        return Response(png, media_type="image/png")

    @app.post("/scenario")
    def swap_scenario(body: ScenarioRequest):
        new_scenario = load_scenario(body.manifest)
        with swap_lock:
            state["scenario"] = new_scenario
            state["cache"].clear()
        return {
            "loaded": True,
            "cameras": len(new_scenario.cameras),
            "polygons": sorted(new_scenario.polygons),
            "bands": list(new_scenario.stack.bands),
        }

    return app
