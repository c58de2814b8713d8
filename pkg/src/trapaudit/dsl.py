"""Filter expression language: parser, AST, canonical formatter, evaluator.

Grammar (lowest to highest precedence)::

    expr    := or
    or      := and ('|' and)*
    and     := not ('&' not)*
    not     := '!' not | atom
    atom    := '(' expr ')' | call | within | gridref (cmp number)?
    gridref := IDENT | 'grad' '(' IDENT ')'
    call    := 'near' '(' expr (',' kwarg)* ')'
             | 'bearing' '(' expr (',' kwarg)* ')'
    within  := 'within_polygon' '(' IDENT ')'
             | 'within_disk' '(' number ',' number ',' number ')'
    kwarg   := IDENT '=' (number | IDENT)
    cmp     := '<' | '<=' | '>' | '>='

near() arguments: min= (meters, default 0), max= (meters, required),
metric= (euclidean | chebyshev, default set by the parser), close=
(closing radius in meters, default 0). bearing() arguments: min= and max=
(degrees in [0, 360), both required; min == max means the full circle).
Numbers are plain decimals - meters and degrees, no unit suffixes.

ParseError reports structural token failures with position; well-typedness
(mask vs grid operands, argument ranges) is checked separately and raises
ExprTypeError carrying the offending node's source offset.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import BandNameError, ExprTypeError, TrapauditError
from .facing import BearingInterval, bearing_filter
from .geometry import ObfuscationDisk, disk_mask, rasterize_polygon
from .grid import BitMask, GridF32, gradient_magnitude, threshold
from .morphology import Metric, donut, mask_and, mask_not, mask_or

METRICS = ("euclidean", "chebyshev")
_CMP_OPS = ("<", "<=", ">", ">=")
_RESERVED = ("near", "bearing", "grad", "within_polygon", "within_disk")


class ParseError(TrapauditError):
    """Structural parse failure at a specific byte of the expression text."""

    def __init__(self, text: str, offset: int, message: str, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.line = text.count("\n", 0, offset) + 1
        last_nl = text.rfind("\n", 0, offset)
        self.column = offset - last_nl  # 1-based
        self.message = message
        self.expected = expected
        super().__init__(f"{self.line}:{self.column}: {message}")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class BandRef(Node):
    name: str
    offset: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class GradientOf(Node):
    band: str
    offset: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Compare(Node):
    grid: Node
    op: str
    value: float
    offset: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Near(Node):
    expr: Node
    min_m: float
    max_m: float
    metric: str = "euclidean"
    close_m: float = 0.0
    offset: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class And(Node):
    left: Node
    right: Node
    offset: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Or(Node):
    left: Node
    right: Node
    offset: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Not(Node):
    expr: Node
    offset: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class WithinPolygon(Node):
    polygon_id: str
    offset: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class WithinDisk(Node):
    center_easting: float
    center_northing: float
    radius_m: float
    offset: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Bearing(Node):
    expr: Node
    min_deg: float
    max_deg: float
    offset: int | None = field(default=None, compare=False)


GRID_NODES = (BandRef, GradientOf)


def is_grid(node: Node) -> bool:
    return isinstance(node, GRID_NODES)


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>-?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[a-z][a-z0-9_]*)
  | (?P<op><=|>=|<|>|&|\||!|\(|\)|,|=)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # 'ident' | 'number' | literal op | 'eof' | 'error'
    text: str
    offset: int


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            tokens.append(_Token("error", text[pos], pos))
            pos += 1
            continue
        kind = m.lastgroup
        if kind != "ws":
            lexeme = m.group()
            tokens.append(_Token(lexeme if kind == "op" else kind, lexeme, m.start()))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


# ---------------------------------------------------------------------------
# Parser

_EXPR_STARTERS = ("(", "!", "ident")


class _Parser:
    def __init__(self, text: str, default_metric: str):
        self.text = text
        self.tokens = _lex(text)
        self.pos = 0
        self.default_metric = default_metric

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        t = self.tok
        self.pos += 1
        return t

    def fail(self, message: str, expected: tuple[str, ...]):
        t = self.tok
        what = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(self.text, t.offset, f"{message}, got {what}", expected)

    def expect(self, kind: str, what: str | None = None) -> _Token:
        if self.tok.kind != kind:
            self.fail(f"expected {what or kind!r}", (kind,))
        return self.advance()

    def parse(self) -> Node:
        node = self.parse_or()
        if self.tok.kind != "eof":
            self.fail("expected end of expression", ("eof",))
        return node

    def parse_or(self) -> Node:
        node = self.parse_and()
        while self.tok.kind == "|":
            off = self.advance().offset
            node = Or(node, self.parse_and(), offset=off)
        return node

    def parse_and(self) -> Node:
        node = self.parse_not()
        while self.tok.kind == "&":
            off = self.advance().offset
            node = And(node, self.parse_not(), offset=off)
        return node

    def parse_not(self) -> Node:
        if self.tok.kind == "!":
            off = self.advance().offset
            return Not(self.parse_not(), offset=off)
        return self.parse_atom()

    def parse_number(self) -> float:
        t = self.expect("number")
        return float(t.text)

    def parse_atom(self) -> Node:
        t = self.tok
        if t.kind == "(":
            self.advance()
            node = self.parse_or()
            self.expect(")")
            return node
        if t.kind == "ident":
            if t.text == "near":
                return self.parse_call(Near)
            if t.text == "bearing":
                return self.parse_call(Bearing)
            if t.text == "within_polygon":
                self.advance()
                self.expect("(")
                name = self.expect("ident", "polygon id")
                self.expect(")")
                return WithinPolygon(name.text, offset=t.offset)
            if t.text == "within_disk":
                self.advance()
                self.expect("(")
                e = self.parse_number()
                self.expect(",")
                n = self.parse_number()
                self.expect(",")
                r = self.parse_number()
                self.expect(")")
                return WithinDisk(e, n, r, offset=t.offset)
            return self.parse_gridref_or_compare()
        self.fail("expected an expression", _EXPR_STARTERS)

    def parse_gridref_or_compare(self) -> Node:
        t = self.tok
        if t.text == "grad":
            self.advance()
            self.expect("(")
            band = self.expect("ident", "band name")
            self.expect(")")
            grid: Node = GradientOf(band.text, offset=t.offset)
        else:
            grid = BandRef(self.advance().text, offset=t.offset)
        if self.tok.kind in _CMP_OPS:
            op = self.advance()
            value = self.parse_number()
            return Compare(grid, op.kind, value, offset=op.offset)
        return grid  # bare grid expression; the type checker rejects mask contexts

    def parse_call(self, ctor) -> Node:
        head = self.advance()
        self.expect("(")
        inner = self.parse_or()
        kwargs: dict[str, tuple] = {}
        while self.tok.kind == ",":
            self.advance()
            name = self.expect("ident", "argument name")
            self.expect("=")
            if self.tok.kind == "ident":
                val_tok = self.advance()
                value: float | str = val_tok.text
            else:
                val_tok = self.tok
                value = self.parse_number()
            if name.text in kwargs:
                raise ExprTypeError(
                    f"duplicate argument {name.text!r} in {head.text}()", name.offset
                )
            kwargs[name.text] = (value, name.offset, val_tok.offset)
        self.expect(")")
        if ctor is Near:
            return self._build_near(head, inner, kwargs)
        return self._build_bearing(head, inner, kwargs)

    def _take(self, head: _Token, kwargs: dict, name: str, allowed: tuple[str, ...]):
        for key in kwargs:
            if key not in allowed:
                raise ExprTypeError(
                    f"unknown {head.text}() argument {key!r}; expected {', '.join(allowed)}",
                    kwargs[key][1],
                )
        return kwargs.get(name)

    def _build_near(self, head: _Token, inner: Node, kwargs: dict) -> Node:
        allowed = ("min", "max", "metric", "close")
        max_arg = self._take(head, kwargs, "max", allowed)
        if max_arg is None:
            raise ExprTypeError("near() requires max= (meters)", head.offset)
        min_arg = kwargs.get("min")
        metric_arg = kwargs.get("metric")
        close_arg = kwargs.get("close")
        for label, arg in (("min", min_arg), ("max", max_arg), ("close", close_arg)):
            if arg is not None and not isinstance(arg[0], float):
                raise ExprTypeError(f"near() {label}= must be a number in meters", arg[2])
        metric = self.default_metric
        if metric_arg is not None:
            if not isinstance(metric_arg[0], str) or metric_arg[0] not in METRICS:
                raise ExprTypeError(
                    f"near() metric= must be one of {METRICS}", metric_arg[2]
                )
            metric = metric_arg[0]
        return Near(
            expr=inner,
            min_m=min_arg[0] if min_arg else 0.0,
            max_m=max_arg[0],
            metric=metric,
            close_m=close_arg[0] if close_arg else 0.0,
            offset=head.offset,
        )

    def _build_bearing(self, head: _Token, inner: Node, kwargs: dict) -> Node:
        allowed = ("min", "max")
        self._take(head, kwargs, "max", allowed)
        for label in allowed:
            arg = kwargs.get(label)
            if arg is None:
                raise ExprTypeError(f"bearing() requires {label}= (degrees)", head.offset)
            if not isinstance(arg[0], float):
                raise ExprTypeError(f"bearing() {label}= must be a number in degrees", arg[2])
        return Bearing(
            expr=inner,
            min_deg=kwargs["min"][0],
            max_deg=kwargs["max"][0],
            offset=head.offset,
        )


def parse(text: str, default_metric: str = "euclidean", check: bool = True) -> Node:
    """Parse filter text into an AST and type-check it.

    ``default_metric`` fills in near() calls that omit metric=. Raises
    ParseError for malformed syntax, ExprTypeError for well-formed but
    ill-typed expressions. ``check=False`` skips the type check (syntax-only
    validation, e.g. while text is still being edited).
    """
    if default_metric not in METRICS:
        raise ExprTypeError(f"default metric must be one of {METRICS}")
    node = _Parser(text, default_metric).parse()
    if check:
        typecheck(node)
    return node


# ---------------------------------------------------------------------------
# Type checking


def _require_mask(node: Node, context: str):
    if is_grid(node):
        name = node.name if isinstance(node, BandRef) else f"grad({node.band})"
        raise ExprTypeError(
            f"{context} needs a mask, but {name!r} is a raster band value; "
            f"compare it first (e.g. {name} > 0.5)",
            node.offset,
        )


def typecheck(node: Node) -> None:
    """Validate operand kinds and argument ranges; top level must be a mask."""
    _require_mask(node, "the filter result")
    _typecheck_inner(node)


def _typecheck_inner(node: Node) -> None:
    if isinstance(node, (BandRef, GradientOf)):
        return
    if isinstance(node, Compare):
        if not is_grid(node.grid):
            raise ExprTypeError(
                f"comparison {node.op!r} needs a raster band on the left", node.offset
            )
        if node.op not in _CMP_OPS:
            raise ExprTypeError(f"unknown comparison operator {node.op!r}", node.offset)
        if not math.isfinite(node.value):
            raise ExprTypeError("comparison threshold must be finite", node.offset)
        return
    if isinstance(node, (And, Or)):
        for side in (node.left, node.right):
            _require_mask(side, "'&'" if isinstance(node, And) else "'|'")
            _typecheck_inner(side)
        return
    if isinstance(node, Not):
        _require_mask(node.expr, "'!'")
        _typecheck_inner(node.expr)
        return
    if isinstance(node, Near):
        _require_mask(node.expr, "near()")
        _typecheck_inner(node.expr)
        if node.metric not in METRICS:
            raise ExprTypeError(f"near() metric must be one of {METRICS}", node.offset)
        if not (0 <= node.min_m < node.max_m):
            raise ExprTypeError(
                f"near() needs 0 <= min < max, got min={node.min_m} max={node.max_m}",
                node.offset,
            )
        if node.close_m < 0:
            raise ExprTypeError("near() close= must be >= 0", node.offset)
        return
    if isinstance(node, Bearing):
        _require_mask(node.expr, "bearing()")
        _typecheck_inner(node.expr)
        for label, v in (("min", node.min_deg), ("max", node.max_deg)):
            if not (0 <= v < 360):
                raise ExprTypeError(
                    f"bearing() {label}= must lie in [0, 360), got {v}", node.offset
                )
        return
    if isinstance(node, WithinPolygon):
        return
    if isinstance(node, WithinDisk):
        if not node.radius_m > 0:
            raise ExprTypeError("within_disk() radius must be positive", node.offset)
        return
    raise ExprTypeError(f"unknown expression node {type(node).__name__}")


# ---------------------------------------------------------------------------
# Canonical formatting

_PRECEDENCE = {Or: 1, And: 2, Not: 3}


def _prec(node: Node) -> int:
    return _PRECEDENCE.get(type(node), 4)


def format_number(v: float) -> str:
    if abs(v) < 1e16 and float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def format_expr(node: Node) -> str:
    """Render an AST to canonical text: minimal parentheses, fixed argument
    order, and repr-exact numbers, so parse(format_expr(e)) == e."""
    if isinstance(node, BandRef):
        return node.name
    if isinstance(node, GradientOf):
        return f"grad({node.band})"
    if isinstance(node, Compare):
        return f"{format_expr(node.grid)} {node.op} {format_number(node.value)}"
    if isinstance(node, Not):
        inner = format_expr(node.expr)
        if _prec(node.expr) < _prec(node) or isinstance(node.expr, Compare):
            inner = f"({inner})"
        return f"!{inner}"
    if isinstance(node, (And, Or)):
        op = "&" if isinstance(node, And) else "|"
        mine = _prec(node)
        left = format_expr(node.left)
        if _prec(node.left) < mine:
            left = f"({left})"
        right = format_expr(node.right)
        if _prec(node.right) <= mine:
            right = f"({right})"
        return f"{left} {op} {right}"
    if isinstance(node, Near):
        parts = [
            format_expr(node.expr),
            f"min={format_number(node.min_m)}",
            f"max={format_number(node.max_m)}",
            f"metric={node.metric}",
            f"close={format_number(node.close_m)}",
        ]
        return f"near({', '.join(parts)})"
    if isinstance(node, Bearing):
        return (
            f"bearing({format_expr(node.expr)}, "
            f"min={format_number(node.min_deg)}, max={format_number(node.max_deg)})"
        )
    if isinstance(node, WithinPolygon):
        return f"within_polygon({node.polygon_id})"
    if isinstance(node, WithinDisk):
        nums = (node.center_easting, node.center_northing, node.radius_m)
        return f"within_disk({', '.join(format_number(v) for v in nums)})"
    raise ExprTypeError(f"unknown expression node {type(node).__name__}")


# ---------------------------------------------------------------------------
# Evaluation


class Evaluator:
    """Evaluates ASTs against a scenario, memoizing by canonical subtree text.

    The scenario only needs ``.stack`` (RasterStack) and ``.polygons``
    (dict of id -> Polygon). Results are cached within the Evaluator's
    lifetime, so repeated subtrees cost one computation.
    """

    def __init__(self, scenario):
        self.scenario = scenario
        self._masks: dict[str, BitMask] = {}
        self._grids: dict[str, GridF32] = {}

    @property
    def _stack(self):
        return self.scenario.stack

    def mask(self, node: Node) -> BitMask:
        typecheck(node)
        return self._mask(node)

    def _grid(self, node: Node) -> GridF32:
        key = format_expr(node)
        hit = self._grids.get(key)
        if hit is not None:
            return hit
        if isinstance(node, BandRef):
            out = self._stack.band(node.name)
        elif isinstance(node, GradientOf):
            out = gradient_magnitude(self._stack, node.band)
        else:
            raise ExprTypeError(f"not a grid expression: {type(node).__name__}")
        self._grids[key] = out
        return out

    def _mask(self, node: Node) -> BitMask:
        key = format_expr(node)
        hit = self._masks.get(key)
        if hit is not None:
            return hit
        out = self._compute(node)
        self._masks[key] = out
        return out

    def _compute(self, node: Node) -> BitMask:
        gt = self._stack.geotransform
        w, h = self._stack.width, self._stack.height
        if isinstance(node, Compare):
            return threshold(self._grid(node.grid), node.op, node.value)
        if isinstance(node, And):
            return mask_and(self._mask(node.left), self._mask(node.right))
        if isinstance(node, Or):
            return mask_or(self._mask(node.left), self._mask(node.right))
        if isinstance(node, Not):
            return mask_not(self._mask(node.expr))
        if isinstance(node, Near):
            if node.metric == "chebyshev":
                close = Metric.chebyshev_from_meters(node.close_m, gt.pixel_size)
            else:
                close = Metric("euclidean", node.close_m)
            return donut(
                self._mask(node.expr),
                node.min_m,
                node.max_m,
                node.metric,
                close,
                pixel_size=gt.pixel_size,
            )
        if isinstance(node, Bearing):
            if node.min_deg == node.max_deg:
                interval = BearingInterval.full_circle()
            else:
                interval = BearingInterval(
                    node.min_deg, node.max_deg, wraps=node.min_deg > node.max_deg
                )
            candidates = BitMask.full(w, h, True)
            return bearing_filter(candidates, self._mask(node.expr), interval, gt)
        if isinstance(node, WithinPolygon):
            polygons = self.scenario.polygons
            poly = polygons.get(node.polygon_id)
            if poly is None:
                raise BandNameError(
                    f"unknown polygon {node.polygon_id!r}; available: {sorted(polygons)}"
                )
            return rasterize_polygon(poly, gt, w, h)
        if isinstance(node, WithinDisk):
            disk = ObfuscationDisk(node.center_easting, node.center_northing, node.radius_m)
            return disk_mask(disk, gt, w, h)
        raise ExprTypeError(f"cannot evaluate {type(node).__name__} as a mask")


def evaluate(node: Node, scenario) -> BitMask:
    """One-shot evaluation; use Evaluator directly to share the memo cache."""
    return Evaluator(scenario).mask(node)
