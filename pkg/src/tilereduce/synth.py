"""Seeded synthetic data generators for demos, tests, and benchmarks."""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

from .model import (
    NULL,
    AttributeType,
    Geometry,
    GeometryKind,
    Schema,
    Tile,
    tile,
)

_WORDS = (
    "alder", "birch", "cedar", "dune", "elm", "fern", "gorse", "hazel",
    "iris", "juniper", "krill", "larch", "maple", "nettle", "oak", "pine",
    "quartz", "rowan", "sage", "thorn", "umber", "vetch", "willow", "yarrow",
)


def _word(rng: random.Random) -> str:
    return rng.choice(_WORDS) + "-" + str(rng.randint(0, 9999))


def blob_ring(rng: random.Random, cx: float, cy: float, radius: float,
              vertices: int) -> tuple:
    """A jittered star-convex ring around (cx, cy), closed."""
    pts = []
    for k in range(vertices):
        ang = 2 * math.pi * k / vertices
        r = radius * rng.uniform(0.6, 1.0)
        pts.append((cx + r * math.cos(ang), cy + r * math.sin(ang)))
    pts.append(pts[0])
    return tuple(pts)


def random_geometry(rng: random.Random, extent: int = 4096,
                    kinds: tuple[GeometryKind, ...] | None = None) -> Geometry:
    kinds = kinds or tuple(GeometryKind)
    kind = rng.choice(kinds)

    def pt():
        return (rng.uniform(0, extent), rng.uniform(0, extent))

    if kind == GeometryKind.POINT:
        return Geometry(kind, pt())
    if kind == GeometryKind.MULTIPOINT:
        return Geometry(kind, tuple(pt() for _ in range(rng.randint(2, 5))))
    if kind == GeometryKind.LINESTRING:
        return Geometry(kind, tuple(pt() for _ in range(rng.randint(2, 8))))
    if kind == GeometryKind.MULTILINESTRING:
        return Geometry(kind, tuple(
            tuple(pt() for _ in range(rng.randint(2, 5)))
            for _ in range(rng.randint(2, 3))))
    if kind == GeometryKind.POLYGON:
        x, y = pt()
        return Geometry(kind, (blob_ring(rng, x, y, rng.uniform(40, extent / 6),
                                         rng.randint(4, 12)),))
    return Geometry(kind, tuple(
        (blob_ring(rng, *pt(), rng.uniform(40, extent / 8), rng.randint(4, 9)),)
        for _ in range(rng.randint(2, 3))))


def random_tile(seed: int, n: int = 12, extent: int = 4096,
                kinds: tuple[GeometryKind, ...] | None = None,
                null_rate: float = 0.15) -> Tile:
    """A mixed-type tile with integer coordinates, for codec round trips."""
    rng = random.Random(seed)
    schema = Schema((
        ("geometry", AttributeType.GEOMETRY),
        ("name", AttributeType.STR),
        ("cat", AttributeType.STR),
        ("count", AttributeType.INT),
        ("ratio", AttributeType.FLOAT),
        ("flag", AttributeType.BOOL),
    ))
    from .codec import quantize_geometry
    cats = ["alpha", "beta", "gamma", "delta"]
    rows = []
    for _ in range(n):
        g = quantize_geometry(random_geometry(rng, extent, kinds))
        def maybe(v):
            return NULL if rng.random() < null_rate else v
        rows.append((
            g,
            maybe(_word(rng)),
            maybe(rng.choice(cats)),
            maybe(rng.randint(-500, 500)),
            maybe(round(rng.uniform(-5, 5), 3)),
            maybe(rng.random() < 0.5),
        ))
    return tile(schema, rows)


def polygon_tile(seed: int, n: int = 250, extent: int = 4096,
                 n_cats: int = 8, max_radius: float = 500.0,
                 min_radius: float = 12.0,
                 unlabeled_rate: float = 0.0) -> Tile:
    """A dense polygon tile with categorical, numeric, and label columns.

    Radii are log-uniform so footprints span orders of magnitude, and vertex
    counts grow with radius, mirroring how real polygon data behaves. A
    nonzero ``unlabeled_rate`` leaves that fraction of rows with all-null
    attributes (sparse data), regardless of size.
    """
    rng = random.Random(seed)
    schema = Schema((
        ("geometry", AttributeType.GEOMETRY),
        ("zone", AttributeType.STR),
        ("score", AttributeType.INT),
        ("label", AttributeType.STR),
    ))
    rows = []
    for i in range(n):
        radius = math.exp(rng.uniform(math.log(min_radius), math.log(max_radius)))
        vertices = max(4, int(radius ** 0.62 * rng.uniform(0.8, 1.6)))
        cx = rng.uniform(0, extent)
        cy = rng.uniform(0, extent)
        g = Geometry(GeometryKind.POLYGON, (blob_ring(rng, cx, cy, radius, vertices),))
        if rng.random() < unlabeled_rate:
            rows.append((g, NULL, NULL, NULL))
        else:
            rows.append((
                g,
                f"zone-{rng.randint(0, n_cats - 1)}",
                rng.randint(0, 1000),
                _word(rng),
            ))
    return tile(schema, rows)


def point_tile(seed: int, n: int, extent: int = 4096, n_cats: int = 6) -> Tile:
    """A dense point tile sized for solver benchmarks (cells = 5 * n)."""
    rng = random.Random(seed)
    schema = Schema((
        ("geometry", AttributeType.GEOMETRY),
        ("kind", AttributeType.STR),
        ("mag", AttributeType.FLOAT),
        ("label", AttributeType.STR),
        ("year", AttributeType.INT),
    ))
    rows = []
    for _ in range(n):
        g = Geometry(GeometryKind.POINT, (rng.uniform(0, extent), rng.uniform(0, extent)))
        rows.append((
            g,
            f"k{rng.randint(0, n_cats - 1)}",
            round(rng.uniform(0, 10), 2),
            _word(rng),
            rng.randint(1900, 2025),
        ))
    return tile(schema, rows)


def clustered_points_geojsonl(path: str | Path, seed: int, n: int,
                              clusters: int = 40, spread: float = 1.5) -> Path:
    """Write n clustered point features as newline-delimited GeoJSON.

    Clustering keeps the number of occupied deep-zoom tiles manageable
    while still producing heavily oversized tiles at the top of the pyramid.
    """
    rng = random.Random(seed)
    centers = [(rng.uniform(-150, 150), rng.uniform(-55, 65)) for _ in range(clusters)]
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n):
            cx, cy = centers[rng.randrange(clusters)]
            lon = min(179.9, max(-179.9, rng.gauss(cx, spread)))
            lat = min(80.0, max(-80.0, rng.gauss(cy, spread)))
            props = {
                "kind": f"k{rng.randint(0, 7)}",
                "mag": round(rng.uniform(0, 10), 2),
                "label": _word(rng),
                "year": rng.randint(1900, 2025),
            }
            fh.write(json.dumps({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [lon, lat]},
                "properties": props,
            }) + "\n")
    return path


def polygons_geojsonl(path: str | Path, seed: int, n: int,
                      clusters: int = 12) -> Path:
    """Write n clustered polygon features as newline-delimited GeoJSON."""
    rng = random.Random(seed)
    centers = [(rng.uniform(-140, 140), rng.uniform(-50, 60)) for _ in range(clusters)]
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n):
            cx, cy = centers[rng.randrange(clusters)]
            lon = rng.gauss(cx, 4.0)
            lat = min(75.0, max(-75.0, rng.gauss(cy, 3.0)))
            radius = math.exp(rng.uniform(math.log(0.01), math.log(0.9)))
            vertices = max(4, int((radius * 400) ** 0.6 * rng.uniform(0.7, 1.5)))
            ring = [[round(lon + radius * math.cos(a) * rng.uniform(0.6, 1.0), 6),
                     round(lat + radius * 0.7 * math.sin(a) * rng.uniform(0.6, 1.0), 6)]
                    for a in [2 * math.pi * k / vertices for k in range(vertices)]]
            ring.append(ring[0])
            props = {
                "zone": f"zone-{rng.randint(0, 7)}",
                "score": rng.randint(0, 1000),
                "label": _word(rng),
            }
            fh.write(json.dumps({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": props,
            }) + "\n")
    return path
