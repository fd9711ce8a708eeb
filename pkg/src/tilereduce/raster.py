"""Rendering primitives: geometry rasterization and attribute images.

The rendering function maps a geometry to the set of pixels it covers on a
square grid laid over the tile extent. Polygons are scanline-filled with a
pixel-center inclusion rule plus a one-pixel boundary stroke; lines are
walked one pixel wide; points land in their containing pixel. Coverage is
style-free: stroke widths and anti-aliasing do not exist here.

Conventions (all deterministic):

* pixel cells are half-open squares ``[c, c+1) x [r, r+1)`` in pixel units;
  a coordinate exactly on a cell boundary belongs to the cell on the
  +infinity side,
* a pixel center exactly on a polygon edge is covered when the polygon lies
  on the +infinity side of that edge,
* where several features cover one pixel, the later feature wins
  (painter's order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import NULL, Geometry, GeometryKind, Tile, Value

DEFAULT_EXTENT = 4096


@dataclass(frozen=True)
class PixelGrid:
    """A side x side pixel grid covering one tile."""

    side: int = 256

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("grid side must be >= 1")

    @property
    def resolution(self) -> int:
        """Total pixel count R."""
        return self.side * self.side


@dataclass(frozen=True)
class AttributeImage:
    """Per-pixel attribute values painted from covering features."""

    grid: PixelGrid
    pixels: tuple  # length R, row-major, NULL where uncovered


def _cell_index(side: int, cx: int, cy: int) -> int:
    return cy * side + cx


def _point_cells(x: float, y: float, side: int) -> set[int]:
    cx, cy = math.floor(x), math.floor(y)
    if 0 <= cx < side and 0 <= cy < side:
        return {_cell_index(side, cx, cy)}
    return set()


def _segment_cells(x0: float, y0: float, x1: float, y1: float, side: int, out: set[int]):
    """All grid cells a segment passes through (Amanatides-Woo walk)."""
    cx, cy = math.floor(x0), math.floor(y0)
    ex, ey = math.floor(x1), math.floor(y1)
    dx, dy = x1 - x0, y1 - y0
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    if dx != 0:
        t_max_x = ((cx + (sx > 0)) - x0) / dx
        t_dx = sx / dx
    else:
        t_max_x, t_dx = math.inf, math.inf
    if dy != 0:
        t_max_y = ((cy + (sy > 0)) - y0) / dy
        t_dy = sy / dy
    else:
        t_max_y, t_dy = math.inf, math.inf

    if 0 <= cx < side and 0 <= cy < side:
        out.add(_cell_index(side, cx, cy))
    limit = abs(ex - cx) + abs(ey - cy) + 4
    for _ in range(limit):
        if cx == ex and cy == ey:
            break
        if t_max_x < t_max_y:
            cx += sx
            t_max_x += t_dx
        elif t_max_y < t_max_x:
            cy += sy
            t_max_y += t_dy
        else:
            # exact corner crossing: the +inf tie rule sends the walk
            # diagonally without touching the two side cells
            cx += sx
            cy += sy
            t_max_x += t_dx
            t_max_y += t_dy
        if 0 <= cx < side and 0 <= cy < side:
            out.add(_cell_index(side, cx, cy))


def _fill_rings(rings_px, side: int, out: set[int]):
    """Even-odd scanline fill over pixel centers for one ring group."""
    ys = [y for ring in rings_px for _, y in ring]
    if not ys:
        return
    r_lo = max(0, math.floor(min(ys) - 0.5))
    r_hi = min(side - 1, math.ceil(max(ys)))
    for r in range(r_lo, r_hi + 1):
        yc = r + 0.5
        xs = []
        for ring in rings_px:
            for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
                if y1 == y2:
                    continue
                # half-open span so a vertex on the scanline counts once
                if (y1 <= yc < y2) or (y2 <= yc < y1):
                    t = (yc - y1) / (y2 - y1)
                    xs.append(x1 + t * (x2 - x1))
        if not xs:
            continue
        xs.sort()
        for k in range(0, len(xs) - 1, 2):
            a, b = xs[k], xs[k + 1]
            c0 = max(0, math.ceil(a - 0.5))
            c1 = min(side - 1, math.ceil(b - 0.5) - 1)
            for c in range(c0, c1 + 1):
                out.add(_cell_index(side, c, r))


def rasterize(g: Geometry, grid: PixelGrid, extent: int = DEFAULT_EXTENT) -> frozenset[int]:
    """Pixel indices covered by a geometry in tile-local coordinates.

    Returns row-major indices into the grid; parts outside the grid are
    silently absent. A degenerate (zero-area) ring still contributes its
    boundary stroke.
    """
    s = grid.side / extent
    side = grid.side
    cells: set[int] = set()
    k = g.kind
    if k in (GeometryKind.POINT, GeometryKind.MULTIPOINT):
        points = [g.coords] if k == GeometryKind.POINT else list(g.coords)
        for x, y in points:
            cells |= _point_cells(x * s, y * s, side)
        return frozenset(cells)
    if k in (GeometryKind.LINESTRING, GeometryKind.MULTILINESTRING):
        for part in g.paths():
            pts = [(x * s, y * s) for x, y in part]
            for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
                _segment_cells(x0, y0, x1, y1, side, cells)
        return frozenset(cells)
    # polygonal: fill each part independently, stroke every ring
    for rings in g.polygons():
        rings_px = [[(x * s, y * s) for x, y in ring] for ring in rings]
        _fill_rings(rings_px, side, cells)
        for ring in rings_px:
            for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
                _segment_cells(x0, y0, x1, y1, side, cells)
    return frozenset(cells)


def pixel_footprints(t: Tile, grid: PixelGrid, extent: int = DEFAULT_EXTENT) -> list[int]:
    """Per-feature covered-pixel counts, overlap counted for each feature."""
    return [len(rasterize(f.geometry, grid, extent)) for f in t.features]


def paint_index_image(t: Tile, grid: PixelGrid, extent: int = DEFAULT_EXTENT) -> np.ndarray:
    """Winning feature index per pixel (painter's order), -1 where uncovered.

    Dropped rows still paint: they occlude earlier features and later render
    as null everywhere, matching the nullification semantics of removal.
    """
    img = np.full(grid.resolution, -1, dtype=np.int32)
    for i, f in enumerate(t.features):
        idx = rasterize(f.geometry, grid, extent)
        if idx:
            img[np.fromiter(idx, dtype=np.int64, count=len(idx))] = i
    return img


def visible_counts(t: Tile, grid: PixelGrid, extent: int = DEFAULT_EXTENT,
                   paint: np.ndarray | None = None) -> np.ndarray:
    """Pixels actually shown per feature after painter's-order overlap."""
    if paint is None:
        paint = paint_index_image(t, grid, extent)
    counts = np.bincount(paint[paint >= 0], minlength=t.size)
    return counts.astype(np.int64)


def attribute_image(t: Tile, j: int, grid: PixelGrid, extent: int = DEFAULT_EXTENT,
                    paint: np.ndarray | None = None) -> AttributeImage:
    """Paint column j's values through the covering features."""
    if not (1 <= j < t.width):
        raise IndexError(f"column index {j} out of range [1, {t.width})")
    if paint is None:
        paint = paint_index_image(t, grid, extent)
    values = [NULL if i in t.dropped else f[j] for i, f in enumerate(t.features)]
    pixels = [NULL if w < 0 else values[w] for w in paint]
    return AttributeImage(grid, tuple(pixels))


def pixel_counts(t: Tile, j: int, grid: PixelGrid, extent: int = DEFAULT_EXTENT,
                 paint: np.ndarray | None = None) -> dict[Value, int]:
    """Pixel-weighted value counts for column j; always sums to R.

    Uncovered pixels count toward NULL, as do pixels of features whose cell
    is null (or whose row is dropped).
    """
    if not (1 <= j < t.width):
        raise IndexError(f"column index {j} out of range [1, {t.width})")
    if paint is None:
        paint = paint_index_image(t, grid, extent)
    vis = visible_counts(t, grid, extent, paint)
    counts: dict[Value, int] = {NULL: int(grid.resolution - int(vis.sum()))}
    for i, f in enumerate(t.features):
        v = NULL if i in t.dropped else f[j]
        counts[v] = counts.get(v, 0) + int(vis[i])
    return counts
