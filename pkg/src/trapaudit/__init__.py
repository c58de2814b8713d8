"""Audit toolkit for geo-obfuscated camera-trap locations.

Given published (obfuscated) camera coordinates and public raster layers,
the toolkit measures how far simple terrain filters shrink the area an
adversary would have to search: raster I/O, binary morphology (donut /
annulus filters), polygon and disk clipping, sun-based facing constraints,
a small filter-expression language, a synthetic-scenario generator, and a
CLI plus HTTP service for interactive use.
"""
from .dsl import (
    And,
    Bearing,
    BandRef,
    Compare,
    Evaluator,
    GradientOf,
    Near,
    Node,
    Not,
    Or,
    ParseError,
    WithinDisk,
    WithinPolygon,
    evaluate,
    format_expr,
    parse,
)
from .errors import (
    BandNameError,
    ExprTypeError,
    FacingInconsistencyError,
    FormatError,
    GeometryError,
    ManifestError,
    ParameterError,
    ScenarioError,
    ShapeError,
    TrapauditError,
)
from .facing import (
    BearingInterval,
    SolarQuery,
    bearing_filter,
    facing_interval,
    solar_azimuth,
)
from .geometry import (
    AreaReport,
    ObfuscationDisk,
    Polygon,
    disk_mask,
    rasterize_polygon,
    searchable_area,
)
from .grid import (
    BitMask,
    Geotransform,
    GridF32,
    RasterStack,
    gradient_magnitude,
    threshold,
)
from .morphology import Metric, closing, dilate, donut, erode, nearest_site
from .scenario import (
    CameraRecord,
    GroundTruth,
    Scenario,
    SyntheticParams,
    generate_synthetic,
    load_scenario,
    obfuscate,
    save_scenario,
    validate_scenario,
)
from .service import create_app
from .tiff import load_stack, read_geotiff, read_manifest, save_stack, write_geotiff

__version__ = "0.1.0"

__all__ = [
    "And",
    "AreaReport",
    "BandNameError",
    "BandRef",
    "Bearing",
    "BearingInterval",
    "BitMask",
    "CameraRecord",
    "Compare",
    "Evaluator",
    "ExprTypeError",
    "FacingInconsistencyError",
    "FormatError",
    "GeometryError",
    "Geotransform",
    "GradientOf",
    "GridF32",
    "GroundTruth",
    "ManifestError",
    "Metric",
    "Near",
    "Node",
    "Not",
    "ObfuscationDisk",
    "Or",
    "ParameterError",
    "ParseError",
    "Polygon",
    "RasterStack",
    "Scenario",
    "ScenarioError",
    "ShapeError",
    "SolarQuery",
    "SyntheticParams",
    "TrapauditError",
    "WithinDisk",
    "WithinPolygon",
    "bearing_filter",
    "closing",
    "create_app",
    "dilate",
    "disk_mask",
    "donut",
    "erode",
    "evaluate",
    "facing_interval",
    "format_expr",
    "generate_synthetic",
    "gradient_magnitude",
    "load_scenario",
    "load_stack",
    "nearest_site",
    "obfuscate",
    "parse",
    "rasterize_polygon",
    "read_geotiff",
    "read_manifest",
    "save_scenario",
    "save_stack",
    "searchable_area",
    "solar_azimuth",
    "threshold",
    "validate_scenario",
    "write_geotiff",
    "__version__",
]
