import math
import random

import pytest

from tilereduce.model import NULL, Geometry, GeometryKind
from tilereduce.raster import (
    PixelGrid,
    attribute_image,
    pixel_counts,
    pixel_footprints,
    rasterize,
)

EXTENT = 4096


# --------------------------------------------------------------------------
# brute-force oracle: per-pixel point-in-polygon plus boundary-cell test
# --------------------------------------------------------------------------

def _point_in_rings(px, py, rings):
    inside = False
    for ring in rings:
        for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
            if (y1 <= py < y2) or (y2 <= py < y1):
                t = (py - y1) / (y2 - y1)
                if px < x1 + t * (x2 - x1):
                    inside = not inside
    return inside


def _segment_hits_cell(p0, p1, cx, cy):
    """Closed-cell vs segment intersection by stepwise clipping."""
    (x0, y0), (x1, y1) = p0, p1
    t0, t1 = 0.0, 1.0
    dx, dy = x1 - x0, y1 - y0
    for p, q in ((-dx, x0 - cx), (dx, cx + 1 - x0), (-dy, y0 - cy), (dy, cy + 1 - y0)):
        if p == 0:
            if q < 0:
                return False
            continue
        r = q / p
        if p < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return False
    return True


def brute_force_pixels(g: Geometry, grid: PixelGrid, extent: int = EXTENT) -> set[int]:
    s = grid.side / extent
    side = grid.side
    out = set()
    if g.kind in (GeometryKind.POINT, GeometryKind.MULTIPOINT):
        pts = [g.coords] if g.kind == GeometryKind.POINT else g.coords
        for x, y in pts:
            cx, cy = math.floor(x * s), math.floor(y * s)
            if 0 <= cx < side and 0 <= cy < side:
                out.add(cy * side + cx)
        return out
    paths = [[(x * s, y * s) for x, y in p] for p in g.paths()]
    fill_groups = [[[(x * s, y * s) for x, y in r] for r in rings] for rings in g.polygons()]
    for cy in range(side):
        for cx in range(side):
            covered = any(
                _point_in_rings(cx + 0.5, cy + 0.5, rings) for rings in fill_groups
            )
            if not covered:
                for path in paths:
                    for p0, p1 in zip(path, path[1:]):
                        if _segment_hits_cell(p0, p1, cx, cy):
                            covered = True
                            break
                    if covered:
                        break
            if covered:
                out.add(cy * side + cx)
    return out


# --------------------------------------------------------------------------

def test_full_cover_polygon():
    ring = ((0.0, 0.0), (EXTENT, 0.0), (EXTENT, EXTENT), (0.0, EXTENT), (0.0, 0.0))
    g = Geometry(GeometryKind.POLYGON, (ring,))
    assert len(rasterize(g, PixelGrid(8))) == 64


def test_point_single_pixel():
    g = Geometry(GeometryKind.POINT, (EXTENT / 2, EXTENT / 2))
    assert len(rasterize(g, PixelGrid(8))) == 1
    assert len(rasterize(g, PixelGrid(256))) == 1


def test_point_off_grid_empty():
    g = Geometry(GeometryKind.POINT, (-100.0, 50.0))
    assert rasterize(g, PixelGrid(8)) == frozenset()


def test_random_polygons_match_bruteforce():
    rng = random.Random(11)
    grid = PixelGrid(64)
    for _ in range(20):
        cx, cy = rng.uniform(200, 3800), rng.uniform(200, 3800)
        n = rng.randint(3, 9)
        pts = []
        for k in range(n):
            ang = 2 * math.pi * k / n
            r = rng.uniform(80, 700)
            pts.append((cx + r * math.cos(ang), cy + r * math.sin(ang)))
        pts.append(pts[0])
        g = Geometry(GeometryKind.POLYGON, (tuple(pts),))
        assert set(rasterize(g, grid)) == brute_force_pixels(g, grid)


def test_random_lines_match_bruteforce():
    rng = random.Random(13)
    grid = PixelGrid(32)
    for _ in range(30):
        pts = tuple((rng.uniform(0, EXTENT), rng.uniform(0, EXTENT))
                    for _ in range(rng.randint(2, 6)))
        g = Geometry(GeometryKind.LINESTRING, pts)
        assert set(rasterize(g, grid)) == brute_force_pixels(g, grid)


def test_degenerate_ring_still_strokes():
    ring = ((100.0, 100.0), (2000.0, 100.0), (100.0, 100.0), (100.0, 100.0))
    g = Geometry(GeometryKind.POLYGON, (ring,))
    px = rasterize(g, PixelGrid(8))
    assert len(px) == 4  # the stroked row of cells, no fill


def test_footprints_reference(lakes_metric):
    assert pixel_footprints(lakes_metric, PixelGrid(8)) == [18, 14, 8, 4]


def test_footprints_match_bruteforce_on_random_tiles():
    # continuous coordinates: cell-boundary ties have measure zero, so the
    # closed-cell oracle and the tie-breaking walk agree exactly
    from tilereduce.model import AttributeType, Schema, tile
    from tilereduce.synth import random_geometry
    grid = PixelGrid(64)
    s = Schema((("geometry", AttributeType.GEOMETRY),))
    for seed in range(6):
        rng = random.Random(seed + 100)
        t = tile(s, [(random_geometry(rng, EXTENT),) for _ in range(6)])
        fp = pixel_footprints(t, grid)
        want = [len(brute_force_pixels(f.geometry, grid)) for f in t.features]
        assert fp == want


def test_pixel_counts_reference(lakes_metric):
    grid = PixelGrid(8)
    assert pixel_counts(lakes_metric, 1, grid) == {
        "Azul": 18, "Birch": 14, "Cobalt": 8, "Dune": 4, NULL: 20,
    }
    assert pixel_counts(lakes_metric, 2, grid) == {"f": 32, "s": 12, NULL: 20}


def test_pixel_counts_sum_to_resolution(lakes_metric):
    for side in (8, 16, 33):
        grid = PixelGrid(side)
        for j in (1, 2):
            assert sum(pixel_counts(lakes_metric, j, grid).values()) == grid.resolution


def test_pixel_counts_empty_tile(lakes_metric):
    from tilereduce.model import tile
    empty = tile(lakes_metric.schema, [])
    grid = PixelGrid(8)
    assert pixel_counts(empty, 1, grid) == {NULL: 64}


def test_disjoint_counts_equal_footprint_groups(lakes_metric):
    grid = PixelGrid(8)
    fp = pixel_footprints(lakes_metric, grid)
    counts = pixel_counts(lakes_metric, 2, grid)
    by_value = {"f": 0, "s": 0}
    for f, p in zip(lakes_metric.features, fp):
        by_value[f[2]] += p
    assert counts["f"] == by_value["f"] and counts["s"] == by_value["s"]


def test_attribute_image_paint_order():
    from tilereduce.model import AttributeType, Schema, tile
    ring1 = ((0.0, 0.0), (2048.0, 0.0), (2048.0, 2048.0), (0.0, 2048.0), (0.0, 0.0))
    ring2 = ((1024.0, 1024.0), (3072.0, 1024.0), (3072.0, 3072.0), (1024.0, 3072.0), (1024.0, 1024.0))
    s = Schema((("geometry", AttributeType.GEOMETRY), ("v", AttributeType.STR)))
    t = tile(s, [
        (Geometry(GeometryKind.POLYGON, (ring1,)), "under"),
        (Geometry(GeometryKind.POLYGON, (ring2,)), "over"),
    ])
    img = attribute_image(t, 1, PixelGrid(8))
    # pixel (3,3) = index 27 is covered by both; the later feature wins
    assert img.pixels[3 * 8 + 3] == "over"
    assert img.pixels[0] == "under"
    assert img.pixels[63] is NULL


def test_attribute_image_respects_nullify(lakes_metric):
    from tilereduce.model import nullify
    grid = PixelGrid(8)
    before = attribute_image(lakes_metric, 1, grid)
    after = attribute_image(nullify(lakes_metric, 0, 1), 1, grid)
    moved = [k for k in range(64) if before.pixels[k] != after.pixels[k]]
    assert all(before.pixels[k] == "Azul" and after.pixels[k] is NULL for k in moved)
    assert len(moved) == 18


def test_resolution_monotone():
    rng = random.Random(4)
    from tilereduce.synth import random_geometry
    for _ in range(15):
        g = random_geometry(rng, EXTENT)
        a = len(rasterize(g, PixelGrid(32)))
        b = len(rasterize(g, PixelGrid(64)))
        if a > 0:
            assert b >= a


def test_grid_validation():
    with pytest.raises(ValueError):
        PixelGrid(0)
    assert PixelGrid(16).resolution == 256
