"""Command line front end: batch evaluation, synthetic data, and the server.

Exit codes: 0 success, 2 expression parse/type error (position on stderr),
3 scenario or evaluation error (missing files, bad manifests, unknown ids).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dsl
from .errors import (
    BandNameError,
    ExprTypeError,
    FacingInconsistencyError,
    FormatError,
    ManifestError,
    ParameterError,
    ScenarioError,
    ShapeError,
)
from .scenario import (
    Scenario,
    SyntheticParams,
    generate_synthetic,
    load_scenario,
    save_scenario,
)
from .service import build_report, create_app
from .tiff import write_geotiff

_SCENARIO_ERRORS = (
    ScenarioError,
    ManifestError,
    FormatError,
    BandNameError,
    ParameterError,
    FacingInconsistencyError,
    ShapeError,
    OSError,
)


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="trapaudit",
        description=(
            "Audit how much searchable area a published camera location "
            "leaves after raster filtering."
        ),
    )
    p.add_argument("--scenario", metavar="MANIFEST", help="scenario manifest JSON")
    p.add_argument(
        "--expr",
        metavar="TEXT|@FILE",
        help="filter expression, or @file containing one (or a session export)",
    )
    p.add_argument("--clip-polygon", metavar="ID", help="AND the result with a named polygon")
    p.add_argument(
        "--clip-disk",
        metavar="CAMERA",
        help="AND the result with a camera's obfuscation disk (published point)",
    )
    p.add_argument("--out-mask", metavar="PATH", help="write the mask as uint8 GeoTIFF")
    p.add_argument("--out-report", metavar="PATH", help="write the area report as JSON")
    p.add_argument(
        "--metric",
        choices=("chebyshev", "euclidean"),
        default=None,
        help="default metric for near() without metric= (default euclidean)",
    )
    p.add_argument("--serve", action="store_true", help="run the HTTP service")
    p.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("PORT", "8787")),
        help="service port (default $PORT or 8787)",
    )
    p.add_argument("--host", default="127.0.0.1", help="service bind address")
    p.add_argument(
        "--synth", metavar="DIR", help="generate a synthetic scenario into DIR and exit"
    )
    p.add_argument("--seed", type=int, default=0, help="seed for --synth")
    p.add_argument("--size", type=int, default=256, help="raster size for --synth")
    return p


def _load_expr_arg(raw: str) -> tuple[str, str | None]:
    """Resolve --expr; returns (expression text, metric from a session export).

    `@file` reads the file: a JSON session export (object with "final" or
    "history") replays its last expression, anything else is raw text.
    """
    if not raw.startswith("@"):
        return raw, None
    path = Path(raw[1:])
    text = path.read_text()
    try:
        doc = json.loads(text)
    except ValueError:
        return text.strip(), None
    if isinstance(doc, dict):
        final = doc.get("final")
        if isinstance(final, dict) and "expr" in final:
            return str(final["expr"]), final.get("metric")
        history = doc.get("history")
        if isinstance(history, list) and history:
            last = history[-1]
            if isinstance(last, dict) and "expr" in last:
                return str(last["expr"]), last.get("metric")
    return text.strip(), None


def _apply_clips(node: dsl.Node, args, scenario: Scenario) -> dsl.Node:
    if args.clip_polygon:
        if args.clip_polygon not in scenario.polygons:
            raise ScenarioError(
                f"unknown polygon {args.clip_polygon!r}; "
                f"available: {sorted(scenario.polygons)}"
            )
        node = dsl.And(node, dsl.WithinPolygon(args.clip_polygon))
    if args.clip_disk:
        cam = scenario.camera(args.clip_disk)
        e, n = cam.published_location
        node = dsl.And(node, dsl.WithinDisk(e, n, cam.obfuscation_radius))
    return node


def _run_synth(args) -> int:
    scenario, truth = generate_synthetic(args.seed, args.size, SyntheticParams())
    manifest_path = save_scenario(scenario, args.synth)
    truth_path = Path(args.synth) / "ground_truth.json"
    truth_path.write_text(
        json.dumps(
            {
                "seed": truth.seed,
                "target_expr": truth.target_expr,
                "camera_id": truth.camera_id,
                "camera_pixel": list(truth.camera_pixel),
            },
            indent=2,
        )
        + "\n"
    )
    print(manifest_path)
    return 0


def _run_serve(args) -> int:
    import uvicorn

    scenario = load_scenario(args.scenario) if args.scenario else None
    app = create_app(scenario)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _run_eval(args) -> int:
    if not args.scenario or not args.expr:
        print("error: evaluation needs --scenario and --expr", file=sys.stderr)
        return 2

    try:
        expr_text, session_metric = _load_expr_arg(args.expr)
    except OSError as exc:
        print(f"error: cannot read expression file: {exc}", file=sys.stderr)
        return 3
    metric = args.metric or session_metric or "euclidean"
    if metric not in dsl.METRICS:
        print(f"error: metric must be one of {dsl.METRICS}", file=sys.stderr)
        return 2

    try:
        node = dsl.parse(expr_text, default_metric=metric)
    except dsl.ParseError as exc:
        print(f"error: {exc.line}:{exc.column}: {exc.message}", file=sys.stderr)
        return 2
    except ExprTypeError as exc:
        where = f" (offset {exc.offset})" if exc.offset is not None else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return 2

    try:
        scenario = load_scenario(args.scenario)
        node = _apply_clips(node, args, scenario)
        mask = dsl.evaluate(node, scenario)
    except ExprTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _SCENARIO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    report = build_report(mask, scenario)
    doc = {"expr_canonical": dsl.format_expr(node), "report": report.to_dict()}
    payload = json.dumps(doc, indent=2) + "\n"

    if args.out_mask:
        write_geotiff(
            args.out_mask,
            mask.data.astype(np.uint8),
            geotransform=scenario.stack.geotransform,
        )
    if args.out_report:
        Path(args.out_report).write_text(payload)
    else:
        sys.stdout.write(payload)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    if args.synth:
        try:
            return _run_synth(args)
        except _SCENARIO_ERRORS as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
    if args.serve:
        try:
            return _run_serve(args)
        except _SCENARIO_ERRORS as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
    return _run_eval(args)


if __name__ == "__main__":
    sys.exit(main())
