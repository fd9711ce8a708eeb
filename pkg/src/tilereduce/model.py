"""Core domain types: schema, features, tiles, and cell-level edits.

A tile is a small relation: N features (rows) over d typed columns, where
column 0 always holds the geometry. Non-geometry cells may hold the
distinguished null value ``NULL``; a null cell is a real value in the model
even though the wire format later drops it. All types here are immutable
values; editing operations return new tiles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence, Union


class _NullType:
    """Singleton null marker, distinct from Python None."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NULL"

    def __reduce__(self):
        return (_NullType, ())

    def __hash__(self):
        return hash("tilereduce.NULL")

    def __eq__(self, other):
        return isinstance(other, _NullType)


NULL = _NullType()

Value = Union[_NullType, str, int, float, bool, "Geometry"]


class AttributeType(enum.Enum):
    GEOMETRY = "geometry"
    STR = "str"
    INT = "int"
    FLOAT = "float"
    BOOL = "bool"


# Widening order used by schema inference and quantization retyping.
_NUMERIC_WIDENING = (AttributeType.BOOL, AttributeType.INT, AttributeType.FLOAT, AttributeType.STR)


def widen(a: AttributeType, b: AttributeType) -> AttributeType:
    """Smallest type that can hold values of both a and b."""
    if a == b:
        return a
    if AttributeType.GEOMETRY in (a, b):
        raise ValueError("geometry type cannot be widened")
    return max(a, b, key=_NUMERIC_WIDENING.index)


class GeometryKind(enum.Enum):
    POINT = "Point"
    MULTIPOINT = "MultiPoint"
    LINESTRING = "LineString"
    MULTILINESTRING = "MultiLineString"
    POLYGON = "Polygon"
    MULTIPOLYGON = "MultiPolygon"


Coord = tuple[float, float]


def _freeze(coords):
    if isinstance(coords, (list, tuple)) and coords and isinstance(coords[0], (list, tuple)):
        return tuple(_freeze(c) for c in coords)
    return tuple(coords)


@dataclass(frozen=True)
class Geometry:
    """A geometry in tile-local coordinate units (y grows downward).

    Coordinate nesting follows GeoJSON:

    * POINT: ``(x, y)``
    * MULTIPOINT / LINESTRING: ``((x, y), ...)``
    * MULTILINESTRING / POLYGON: ``(part_or_ring, ...)``
    * MULTIPOLYGON: ``((ring, ...), ...)``

    Polygon rings are closed (first == last, at least 4 points);
    linestrings have at least 2 points.
    """

    kind: GeometryKind
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", _freeze(self.coords))

    # -- accessors ---------------------------------------------------------

    def paths(self) -> list[tuple[Coord, ...]]:
        """All point sequences (rings, line parts, or single points)."""
        k = self.kind
        if k == GeometryKind.POINT:
            return [(self.coords,)]
        if k in (GeometryKind.MULTIPOINT, GeometryKind.LINESTRING):
            return [self.coords]
        if k in (GeometryKind.MULTILINESTRING, GeometryKind.POLYGON):
            return list(self.coords)
        return [ring for poly in self.coords for ring in poly]

    def polygons(self) -> list[tuple]:
        """Ring groups for area geometries; empty for points/lines."""
        if self.kind == GeometryKind.POLYGON:
            return [self.coords]
        if self.kind == GeometryKind.MULTIPOLYGON:
            return list(self.coords)
        return []

    def vertex_count(self) -> int:
        if self.kind == GeometryKind.POINT:
            return 1
        return sum(len(p) for p in self.paths())

    def bbox(self) -> tuple[float, float, float, float]:
        xs, ys = [], []
        points = [self.coords] if self.kind == GeometryKind.POINT else [
            pt for path in self.paths() for pt in path
        ]
        for x, y in points:
            xs.append(x)
            ys.append(y)
        return min(xs), min(ys), max(xs), max(ys)

    def violations(self) -> list[str]:
        out = []
        if self.kind == GeometryKind.POINT:
            if len(self.coords) != 2 or isinstance(self.coords[0], tuple):
                out.append("point must be a single (x, y)")
            return out
        if self.kind in (GeometryKind.LINESTRING, GeometryKind.MULTILINESTRING):
            parts = [self.coords] if self.kind == GeometryKind.LINESTRING else self.coords
            for p, part in enumerate(parts):
                if len(part) < 2:
                    out.append(f"linestring part {p} has fewer than 2 vertices")
        if self.kind in (GeometryKind.POLYGON, GeometryKind.MULTIPOLYGON):
            for g, rings in enumerate(self.polygons()):
                for r, ring in enumerate(rings):
                    if len(ring) < 4:
                        out.append(f"ring {g}/{r} has fewer than 4 vertices")
                    elif ring[0] != ring[-1]:
                        out.append(f"ring {g}/{r} is not closed")
        return out


def ring_area(ring: Sequence[Coord]) -> float:
    """Signed shoelace area; positive means clockwise in y-down coords."""
    a = 0.0
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        a += x1 * y2 - x2 * y1
    return a / 2.0


@dataclass(frozen=True)
class Schema:
    """Ordered attribute names and types; column 0 is the geometry."""

    columns: tuple[tuple[str, AttributeType], ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple((str(n), t) for n, t in self.columns))

    @property
    def width(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.columns)

    def type_of(self, j: int) -> AttributeType:
        return self.columns[j][1]

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def violations(self) -> list[str]:
        out = []
        if self.width < 1:
            out.append("schema has no columns")
            return out
        if self.type_of(0) != AttributeType.GEOMETRY:
            out.append("column 0 is not the geometry column")
        for j, (_, t) in enumerate(self.columns[1:], start=1):
            if t == AttributeType.GEOMETRY:
                out.append(f"column {j} has geometry type")
        return out

    def retype(self, j: int, t: AttributeType) -> "Schema":
        cols = list(self.columns)
        cols[j] = (cols[j][0], t)
        return Schema(tuple(cols))


_TYPE_CHECKS = {
    AttributeType.STR: lambda v: isinstance(v, str),
    AttributeType.INT: lambda v: isinstance(v, int) and not isinstance(v, bool),
    AttributeType.FLOAT: lambda v: isinstance(v, float) or (isinstance(v, int) and not isinstance(v, bool)),
    AttributeType.BOOL: lambda v: isinstance(v, bool),
    AttributeType.GEOMETRY: lambda v: isinstance(v, Geometry),
}


def value_conforms(v: Value, t: AttributeType) -> bool:
    if v is NULL:
        return t != AttributeType.GEOMETRY
    return _TYPE_CHECKS[t](v)


@dataclass(frozen=True)
class Feature:
    """One row: a typed tuple of values, geometry at index 0."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    def __getitem__(self, j: int) -> Value:
        return self.values[j]

    @property
    def geometry(self) -> Geometry:
        return self.values[0]


@dataclass(frozen=True)
class TileCoords:
    z: int
    x: int
    y: int

    def __post_init__(self):
        if not (0 <= self.x < 2 ** self.z and 0 <= self.y < 2 ** self.z):
            raise ValueError(f"tile ({self.x},{self.y}) out of range at zoom {self.z}")


@dataclass(frozen=True)
class Tile:
    """Schema + ordered features, optionally pinned to pyramid coordinates.

    ``dropped`` marks rows removed from the encoded output while remaining
    addressable for distortion accounting: a dropped row keeps its geometry
    as an occluder but renders all attributes as null, and the codec skips
    it entirely.
    """

    schema: Schema
    features: tuple[Feature, ...]
    coords: TileCoords | None = None
    dropped: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "dropped", frozenset(self.dropped))

    @property
    def size(self) -> int:
        return len(self.features)

    @property
    def width(self) -> int:
        return self.schema.width

    def encoded_rows(self) -> Iterator[tuple[int, Feature]]:
        """Rows that participate in the wire format."""
        for i, f in enumerate(self.features):
            if i not in self.dropped:
                yield i, f

    def domain(self, j: int) -> tuple:
        """Column j's carrier set: distinct values in first-appearance order,
        with NULL always last. Dropped rows count as all-null."""
        if j == 0:
            raise ValueError("geometry column has no value domain")
        seen: dict = {}
        for i, f in enumerate(self.features):
            v = NULL if i in self.dropped else f[j]
            if v is not NULL and v not in seen:
                seen[v] = None
        return tuple(seen) + (NULL,)


def tile(schema: Schema, rows: Iterable[Sequence[Value]], coords: TileCoords | None = None) -> Tile:
    """Convenience constructor from plain row sequences."""
    return Tile(schema, tuple(Feature(tuple(r)) for r in rows), coords)


@dataclass(frozen=True)
class Violation:
    feature: int | None
    column: int | None
    rule: str

    def __str__(self):
        where = []
        if self.feature is not None:
            where.append(f"feature {self.feature}")
        if self.column is not None:
            where.append(f"column {self.column}")
        prefix = ", ".join(where)
        return f"{prefix}: {self.rule}" if prefix else self.rule


def validate(t: Tile) -> list[Violation]:
    """All invariant violations in the tile; empty means valid.

    Violations are data, not exceptions: each one names the feature index,
    column index, and the rule broken (None where not applicable).
    """
    out: list[Violation] = []
    for rule in t.schema.violations():
        out.append(Violation(None, None, rule))
    if out:
        return out
    d = t.width
    for i, f in enumerate(t.features):
        if len(f.values) != d:
            out.append(Violation(i, None, f"row width {len(f.values)} != schema width {d}"))
            continue
        for j in range(d):
            v = f[j]
            if not value_conforms(v, t.schema.type_of(j)):
                out.append(Violation(i, j, f"value {v!r} does not conform to {t.schema.type_of(j).value}"))
            elif j == 0:
                for rule in v.violations():
                    out.append(Violation(i, 0, rule))
            elif isinstance(v, float) and not math.isfinite(v):
                out.append(Violation(i, j, "non-finite float value"))
    for i in t.dropped:
        if not (0 <= i < t.size):
            out.append(Violation(i, None, "dropped index out of range"))
    return out


def nullify(t: Tile, i: int, j: int) -> Tile:
    """New tile with cell (i, j) set to NULL; the input is untouched.

    The geometry column (j == 0) cannot be nulled through this operation.
    """
    if not (0 <= i < t.size):
        raise IndexError(f"feature index {i} out of range [0, {t.size})")
    if not (1 <= j < t.width):
        raise IndexError(f"column index {j} out of range [1, {t.width})")
    f = t.features[i]
    if f[j] is NULL:
        return t
    values = list(f.values)
    values[j] = NULL
    features = list(t.features)
    features[i] = Feature(tuple(values))
    return replace(t, features=tuple(features))


def column_values(t: Tile, j: int) -> list[Value]:
    """Column j as a list in feature order (length N)."""
    if not (0 <= j < t.width):
        raise IndexError(f"column index {j} out of range [0, {t.width})")
    return [f[j] for f in t.features]
