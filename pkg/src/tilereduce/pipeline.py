"""Pyramid orchestration: ingest features, reproject, cut tiles, reduce,
and persist the result as a directory tileset.

Every tile is an independent unit of work: the same feature set, budget,
and seed always produce byte-identical output regardless of worker count
or build order. The layout on disk is ``{root}/{z}/{x}/{y}.mvt`` plus a
``metadata.json`` carrying the effective config, the attribute schema, and
one status row per emitted tile.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from . import codec
from .model import (
    NULL,
    AttributeType,
    Feature,
    Geometry,
    GeometryKind,
    Schema,
    Tile,
    TileCoords,
    Value,
    widen,
)
from .raster import PixelGrid
from .sparsify import SolverStatus, SparsifyParams, sparsify_tile
from .triage import TriageConfig, clip_to_tile, triage

log = logging.getLogger("tilereduce")

MERCATOR_LAT_LIMIT = 85.05112877980659


def reproject(lon: float, lat: float) -> tuple[float, float]:
    """WGS84 degrees to web-mercator unit-square coordinates.

    Latitudes beyond the mercator singularity clamp to the projection limit
    (with a warning); x=0 is the antimeridian going east, y=0 is north.
    """
    if not (-MERCATOR_LAT_LIMIT <= lat <= MERCATOR_LAT_LIMIT):
        log.warning("latitude %.6f outside mercator range; clamped", lat)
        lat = max(-MERCATOR_LAT_LIMIT, min(MERCATOR_LAT_LIMIT, lat))
    x = (lon + 180.0) / 360.0
    phi = math.radians(lat)
    y = (1.0 - math.log(math.tan(phi) + 1.0 / math.cos(phi)) / math.pi) / 2.0
    return x, y


def assign(bbox: tuple[float, float, float, float], z: int,
           extent: int = codec.DEFAULT_EXTENT,
           buffer: int = codec.DEFAULT_BUFFER) -> list[TileCoords]:
    """All tiles at zoom z whose buffered square intersects the bbox.

    The bbox is in unit coordinates; each tile's extent grows by the buffer
    fraction so edge-crossing features land in every tile that renders them.
    """
    x0, y0, x1, y1 = bbox
    n = 1 << z
    pad = buffer / extent

    def span(lo, hi):
        a = max(0, math.floor(lo * n - pad))
        b = min(n - 1, math.floor(hi * n + pad))
        return range(a, b + 1)

    return [TileCoords(z, tx, ty) for tx in span(x0, x1) for ty in span(y0, y1)]


# --------------------------------------------------------------------------
# feature ingestion
# --------------------------------------------------------------------------

_GEOJSON_KINDS = {k.value: k for k in GeometryKind}


def _geometry_from_geojson(obj: dict) -> Geometry:
    kind = _GEOJSON_KINDS.get(obj.get("type"))
    if kind is None:
        raise ValueError(f"unsupported geometry type {obj.get('type')!r}")
    coords = obj["coordinates"]

    def pt(c):
        return (float(c[0]), float(c[1]))

    if kind == GeometryKind.POINT:
        return Geometry(kind, pt(coords))
    if kind in (GeometryKind.MULTIPOINT, GeometryKind.LINESTRING):
        return Geometry(kind, tuple(pt(c) for c in coords))
    if kind in (GeometryKind.MULTILINESTRING, GeometryKind.POLYGON):
        return Geometry(kind, tuple(tuple(pt(c) for c in part) for part in coords))
    return Geometry(kind, tuple(tuple(tuple(pt(c) for c in ring) for ring in poly)
                                for poly in coords))


class _WktParser:
    def __init__(self, text: str):
        self.text = text.strip()
        self.pos = 0

    def fail(self, why):
        raise ValueError(f"bad WKT at {self.pos}: {why}")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            self.fail(f"expected {ch!r}")
        self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def word(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalpha()):
            self.pos += 1
        return self.text[start:self.pos].upper()

    def number(self) -> float:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in " ,()\t\n":
            self.pos += 1
        try:
            return float(self.text[start:self.pos])
        except ValueError:
            self.fail("expected number")

    def point(self):
        x = self.number()
        y = self.number()
        return (x, y)

    def point_list(self):
        self.expect("(")
        pts = [self.point() if self.peek() != "(" else self.paren_point()]
        while self.peek() == ",":
            self.expect(",")
            pts.append(self.point() if self.peek() != "(" else self.paren_point())
        self.expect(")")
        return tuple(pts)

    def paren_point(self):
        self.expect("(")
        p = self.point()
        self.expect(")")
        return p

    def ring_list(self):
        self.expect("(")
        rings = [self.point_list()]
        while self.peek() == ",":
            self.expect(",")
            rings.append(self.point_list())
        self.expect(")")
        return tuple(rings)

    def parse(self) -> Geometry:
        kind = self.word()
        if kind == "POINT":
            self.expect("(")
            p = self.point()
            self.expect(")")
            return Geometry(GeometryKind.POINT, p)
        if kind == "MULTIPOINT":
            return Geometry(GeometryKind.MULTIPOINT, self.point_list())
        if kind == "LINESTRING":
            return Geometry(GeometryKind.LINESTRING, self.point_list())
        if kind == "MULTILINESTRING":
            return Geometry(GeometryKind.MULTILINESTRING, self.ring_list())
        if kind == "POLYGON":
            return Geometry(GeometryKind.POLYGON, self.ring_list())
        if kind == "MULTIPOLYGON":
            self.expect("(")
            polys = [self.ring_list()]
            while self.peek() == ",":
                self.expect(",")
                polys.append(self.ring_list())
            self.expect(")")
            return Geometry(GeometryKind.MULTIPOLYGON, tuple(polys))
        self.fail(f"unsupported WKT kind {kind!r}")


def parse_wkt(text: str) -> Geometry:
    return _WktParser(text).parse()


def _classify(v) -> tuple[Value, AttributeType | None]:
    if v is None:
        return NULL, None
    if isinstance(v, bool):
        return v, AttributeType.BOOL
    if isinstance(v, int):
        return v, AttributeType.INT
    if isinstance(v, float):
        return v, AttributeType.FLOAT
    if isinstance(v, str):
        return v, AttributeType.STR
    return json.dumps(v, sort_keys=True), AttributeType.STR


def _parse_csv_cell(s: str) -> tuple[Value, AttributeType | None]:
    if s == "":
        return NULL, None
    low = s.lower()
    if low in ("true", "false"):
        return low == "true", AttributeType.BOOL
    try:
        return int(s), AttributeType.INT
    except ValueError:
        pass
    try:
        return float(s), AttributeType.FLOAT
    except ValueError:
        pass
    return s, AttributeType.STR


INFER_SAMPLE = 1000


class FeatureSource:
    """Lazily yields (Geometry, {name: value}) rows with an inferred schema.

    The schema comes from the first `INFER_SAMPLE` parseable records: the
    union of keys in first-seen order, each typed as the widest observed
    type (bool < int < float < str). Malformed records are skipped and
    counted, with line numbers logged.
    """

    def __init__(self, rows: Iterator[tuple[Geometry, dict] | None]):
        self._buffer: list[tuple[Geometry, dict]] = []
        self.skipped = 0
        types: dict[str, AttributeType] = {}
        for item in rows:
            if item is None:
                self.skipped += 1
                continue
            self._buffer.append(item)
            for key, val in item[1].items():
                _, t = _classify(val)
                if t is None:
                    types.setdefault(key, None)
                elif types.get(key) is None:
                    types[key] = t
                else:
                    types[key] = widen(types[key], t)
            if len(self._buffer) >= INFER_SAMPLE:
                break
        self._rest = rows
        cols = [("geometry", AttributeType.GEOMETRY)]
        for key, t in types.items():
            cols.append((key, t or AttributeType.STR))
        self.schema = Schema(tuple(cols))

    def __iter__(self) -> Iterator[tuple]:
        names = self.schema.names[1:]
        for geom, props in self._iter_raw():
            row = [geom]
            for name in names:
                v, _ = _classify(props.get(name))
                row.append(v)
            yield tuple(row)

    def _iter_raw(self):
        yield from self._buffer
        for item in self._rest:
            if item is None:
                self.skipped += 1
            else:
                yield item


def _geojsonl_rows(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                if obj.get("type") != "Feature":
                    raise ValueError(f"not a GeoJSON Feature: {obj.get('type')!r}")
                geom = _geometry_from_geojson(obj["geometry"])
                props = obj.get("properties") or {}
                yield geom, props
            except (ValueError, KeyError, TypeError) as exc:
                log.warning("%s:%d skipped (%s)", path, lineno, exc)
                yield None


def _csv_rows(path: Path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        geom_col = None
        for name in reader.fieldnames or []:
            if name.lower() in ("geometry", "wkt", "geom"):
                geom_col = name
                break
        if geom_col is None:
            raise ValueError(f"{path}: no geometry/WKT column found")
        for lineno, row in enumerate(reader, start=2):
            try:
                geom = parse_wkt(row[geom_col])
                props = {k: _parse_csv_cell(v)[0] if v != "" else None
                         for k, v in row.items() if k != geom_col}
                props = {k: (None if v is NULL else v) for k, v in props.items()}
                yield geom, props
            except (ValueError, KeyError, TypeError) as exc:
                log.warning("%s:%d skipped (%s)", path, lineno, exc)
                yield None


def read_features(path: str | Path, fmt: str | None = None) -> FeatureSource:
    """Open newline-delimited GeoJSON or CSV-with-WKT as a feature source."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "geojsonl"
    if fmt == "geojsonl":
        return FeatureSource(_geojsonl_rows(path))
    if fmt == "csv":
        return FeatureSource(_csv_rows(path))
    raise ValueError(f"unsupported input format {fmt!r}")


# --------------------------------------------------------------------------
# configuration and tileset
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    zoom_min: int = 0
    zoom_max: int = 8
    budget_bytes: int = 262144
    layer_name: str = codec.DEFAULT_LAYER_NAME
    extent: int = codec.DEFAULT_EXTENT
    buffer: int = codec.DEFAULT_BUFFER
    grid_side: int = 256
    triage: TriageConfig = field(default_factory=TriageConfig)
    sparsify: SparsifyParams = field(default_factory=SparsifyParams)
    worker_count: int | None = None
    input_format: str | None = None

    def __post_init__(self):
        if self.zoom_min > self.zoom_max:
            raise ValueError("zoom_min must be <= zoom_max")
        if self.budget_bytes <= 0:
            raise ValueError("budget must be > 0")

    def to_dict(self) -> dict:
        return {
            "zoom_min": self.zoom_min,
            "zoom_max": self.zoom_max,
            "budget_bytes": self.budget_bytes,
            "layer_name": self.layer_name,
            "extent": self.extent,
            "buffer": self.buffer,
            "grid_side": self.grid_side,
            "worker_count": self.worker_count,
            "input_format": self.input_format,
            "triage": {
                "capacity_metric": self.triage.capacity_metric.value,
                "capacity_value": self.triage.capacity_value,
                "priority": self.triage.priority.value,
                "simplify_method": self.triage.simplify_method.value,
                "quantize_bins": self.triage.quantize_bins,
                "quantize_min_unique": self.triage.quantize_min_unique,
                "trim_length": self.triage.trim_length,
                "seed": self.triage.seed,
                "drop_columns": list(self.triage.drop_columns),
            },
            "sparsify": {
                "alpha": self.sparsify.alpha,
                "lambda_rec": self.sparsify.lambda_rec,
                "exponent_p": self.sparsify.exponent_p,
                "gap": self.sparsify.gap,
                "epsilon": self.sparsify.epsilon,
                "solver_timeout": self.sparsify.solver_timeout,
                "shrink_rounds": self.sparsify.shrink_rounds,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        from .triage import CapacityMetric, Priority, SimplifyMethod
        tr = d.get("triage", {})
        sp = d.get("sparsify", {})
        triage_cfg = TriageConfig(
            capacity_metric=CapacityMetric(tr.get("capacity_metric", "cells")),
            capacity_value=tr.get("capacity_value", 100_000),
            priority=Priority(tr.get("priority", "vertices")),
            simplify_method=SimplifyMethod(tr.get("simplify_method", "douglas_peucker")),
            quantize_bins=tr.get("quantize_bins", 10),
            quantize_min_unique=tr.get("quantize_min_unique", 21),
            trim_length=tr.get("trim_length", 8),
            seed=tr.get("seed", 0),
            drop_columns=tuple(tr.get("drop_columns", ())),
        )
        sparsify_cfg = SparsifyParams(
            budget_bytes=d.get("budget_bytes", 262144),
            alpha=sp.get("alpha", 0.5),
            lambda_rec=sp.get("lambda_rec", 1.0),
            exponent_p=sp.get("exponent_p", 2.0),
            gap=sp.get("gap", 0.01),
            epsilon=sp.get("epsilon", 1.0),
            solver_timeout=sp.get("solver_timeout", 10.0),
            shrink_rounds=sp.get("shrink_rounds", 5),
            grid=PixelGrid(d.get("grid_side", 256)),
            extent=d.get("extent", codec.DEFAULT_EXTENT),
        )
        return cls(
            zoom_min=d.get("zoom_min", 0),
            zoom_max=d.get("zoom_max", 8),
            budget_bytes=d.get("budget_bytes", 262144),
            layer_name=d.get("layer_name", codec.DEFAULT_LAYER_NAME),
            extent=d.get("extent", codec.DEFAULT_EXTENT),
            buffer=d.get("buffer", codec.DEFAULT_BUFFER),
            grid_side=d.get("grid_side", 256),
            triage=triage_cfg,
            sparsify=sparsify_cfg,
            worker_count=d.get("worker_count"),
            input_format=d.get("input_format"),
        )


class Tileset:
    """A persisted pyramid: {root}/{z}/{x}/{y}.mvt plus metadata.json."""

    def __init__(self, root: str | Path, metadata: dict | None = None):
        self.root = Path(root)
        if metadata is None:
            with open(self.root / "metadata.json", "r", encoding="utf-8") as fh:
                metadata = json.load(fh)
        self.metadata = metadata

    @classmethod
    def create(cls, root: str | Path, metadata: dict) -> "Tileset":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        ts = cls(root, metadata)
        ts.flush_metadata()
        return ts

    def flush_metadata(self):
        with open(self.root / "metadata.json", "w", encoding="utf-8") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def tile_path(self, z: int, x: int, y: int) -> Path:
        return self.root / str(z) / str(x) / f"{y}.mvt"

    def write_tile(self, z: int, x: int, y: int, data: bytes):
        p = self.tile_path(z, x, y)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(data)

    def read_tile(self, z: int, x: int, y: int) -> bytes | None:
        p = self.tile_path(z, x, y)
        return p.read_bytes() if p.exists() else None

    def coords(self) -> list[TileCoords]:
        out = []
        for row in self.metadata.get("tile_status", []):
            out.append(TileCoords(row["z"], row["x"], row["y"]))
        return out


# --------------------------------------------------------------------------
# the build itself
# --------------------------------------------------------------------------

def _mix_seed(seed: int, z: int, x: int, y: int) -> int:
    h = (seed * 0x9E3779B97F4A7C15 + z * 0xBF58476D1CE4E5B9
         + x * 0x94D049BB133111EB + y * 0x2545F4914F6CDD1D)
    return h & 0xFFFFFFFFFFFFFFFF


def _tile_local(g: Geometry, tx: int, ty: int, n: int, extent: int) -> Geometry:
    def conv(pt):
        return ((pt[0] * n - tx) * extent, (pt[1] * n - ty) * extent)

    k = g.kind
    if k == GeometryKind.POINT:
        return Geometry(k, conv(g.coords))
    if k in (GeometryKind.MULTIPOINT, GeometryKind.LINESTRING):
        return Geometry(k, tuple(conv(p) for p in g.coords))
    if k in (GeometryKind.MULTILINESTRING, GeometryKind.POLYGON):
        return Geometry(k, tuple(tuple(conv(p) for p in part) for part in g.coords))
    return Geometry(k, tuple(tuple(tuple(conv(p) for p in ring) for ring in poly)
                             for poly in g.coords))


def reproject_geometry(g: Geometry) -> Geometry:
    def conv(pt):
        return reproject(pt[0], pt[1])

    k = g.kind
    if k == GeometryKind.POINT:
        return Geometry(k, conv(g.coords))
    if k in (GeometryKind.MULTIPOINT, GeometryKind.LINESTRING):
        return Geometry(k, tuple(conv(p) for p in g.coords))
    if k in (GeometryKind.MULTILINESTRING, GeometryKind.POLYGON):
        return Geometry(k, tuple(tuple(conv(p) for p in part) for part in g.coords))
    return Geometry(k, tuple(tuple(tuple(conv(p) for p in ring) for ring in poly)
                             for poly in g.coords))


def build_tile(schema: Schema, rows: list[tuple], coords: TileCoords,
               cfg: PipelineConfig) -> tuple[bytes, dict] | None:
    """Produce one encoded tile from unit-square rows assigned to it.

    This is the whole per-tile pipeline: localize, clip, triage, sparsify
    when over budget, encode. Returns None when nothing survives clipping.
    """
    n = 1 << coords.z
    grid = PixelGrid(cfg.grid_side)
    local_rows = []
    for row in rows:
        g = _tile_local(row[0], coords.x, coords.y, n, cfg.extent)
        g = clip_to_tile(g, cfg.extent, cfg.buffer)
        if g is None:
            continue
        local_rows.append((g,) + tuple(row[1:]))
    if not local_rows:
        return None
    t = Tile(schema, tuple(Feature(r) for r in local_rows), coords)
    tile_triage = replace(cfg.triage,
                          seed=_mix_seed(cfg.triage.seed, coords.z, coords.x, coords.y))
    t = triage(t, tile_triage, cfg.budget_bytes, grid, cfg.extent)
    if t.size == 0:
        return None
    status = SolverStatus.OPTIMAL.value
    measured = codec.measure(t, cfg.extent, cfg.layer_name).total_bytes
    if measured > cfg.budget_bytes:
        params = replace(cfg.sparsify, budget_bytes=cfg.budget_bytes,
                         grid=grid, extent=cfg.extent)
        t, decision = sparsify_tile(t, params)
        status = decision.solver_status.value
    data = codec.encode(t, cfg.extent, cfg.layer_name)
    row = {
        "z": coords.z, "x": coords.x, "y": coords.y,
        "bytes": len(data),
        "solver_status": status,
        "over_budget": len(data) > cfg.budget_bytes,
    }
    return data, row


def build(source: FeatureSource | str | Path, cfg: PipelineConfig,
          out_root: str | Path) -> Tileset:
    """Run the full pyramid build and persist it under out_root."""
    if not isinstance(source, FeatureSource):
        source = read_features(source, cfg.input_format)
    schema = source.schema
    rows = []
    boxes = []
    for row in source:
        g = reproject_geometry(row[0])
        rows.append((g,) + tuple(row[1:]))
        boxes.append(g.bbox())

    buckets: dict[TileCoords, list[int]] = {}
    for z in range(cfg.zoom_min, cfg.zoom_max + 1):
        for idx, box in enumerate(boxes):
            for tc in assign(box, z, cfg.extent, cfg.buffer):
                buckets.setdefault(tc, []).append(idx)

    ordered = sorted(buckets, key=lambda c: (c.z, c.x, c.y))
    workers = cfg.worker_count or os.cpu_count() or 1

    def job(tc: TileCoords):
        return tc, build_tile(schema, [rows[i] for i in buckets[tc]], tc, cfg)

    results = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, ordered))
    else:
        results = [job(tc) for tc in ordered]

    metadata = {
        "layer": cfg.layer_name,
        "zooms": [cfg.zoom_min, cfg.zoom_max],
        "budget_bytes": cfg.budget_bytes,
        "extent": cfg.extent,
        "config": cfg.to_dict(),
        "schema": [{"name": n, "type": t.value} for n, t in schema.columns],
        "skipped_records": source.skipped,
        "tile_status": [],
    }
    ts = Tileset.create(out_root, metadata)
    for tc, result in results:
        if result is None:
            continue
        data, status_row = result
        ts.write_tile(tc.z, tc.x, tc.y, data)
        metadata["tile_status"].append(status_row)
    ts.flush_metadata()
    return ts
