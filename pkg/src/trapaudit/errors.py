"""Exception types shared across the toolkit."""


class TrapauditError(Exception):
    """Base class for all toolkit errors."""


class FormatError(TrapauditError):
    """Raster file violates the supported GeoTIFF subset; names the offending tag."""


class ManifestError(TrapauditError):
    """Band manifest disagrees with the raster file."""


class BandNameError(TrapauditError, KeyError):
    """Referenced band (or polygon id) does not exist."""

    def __str__(self) -> str:  # KeyError quotes its arg; keep the message readable
        return Exception.__str__(self)


class ParameterError(TrapauditError, ValueError):
    """Operation parameter out of range (negative radius, bad baseline, ...)."""


class ShapeError(TrapauditError):
    """Masks or grids with mismatched dimensions were combined."""


class GeometryError(TrapauditError):
    """Degenerate or invalid vector geometry."""


class FacingInconsistencyError(TrapauditError):
    """Sun-side observations admit no camera facing."""


class ScenarioError(TrapauditError):
    """Scenario manifest missing files or violating invariants."""


class ExprTypeError(TrapauditError):
    """Filter expression is syntactically valid but ill-typed.

    Carries the source offset of the offending node when it came from text.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset
