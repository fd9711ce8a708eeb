"""Fast heuristic pre-reduction for oversized tiles.

Sparsification solves an optimization problem per tile, so its input has to
be capped. Triage makes the big cuts first: priority-ordered record
admission up to a capacity, plus column-level reductions (constant-column
removal, numeric quantization, string trimming) ordered by how little they
disturb the pixel-weighted value distributions. Geometry clipping and
simplification also live here since they are zoom-dependent size cuts.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, replace

import numpy as np

from . import codec
from .metrics import smooth
from .model import (
    NULL,
    AttributeType,
    Feature,
    Geometry,
    GeometryKind,
    Tile,
    ring_area,
)
from .raster import DEFAULT_EXTENT, PixelGrid, pixel_counts, rasterize


class CapacityMetric(enum.Enum):
    RECORDS = "records"
    BYTES = "bytes"
    VERTICES = "vertices"
    CELLS = "cells"


class Priority(enum.Enum):
    BYTE_SIZE = "byte_size"
    VERTICES = "vertices"
    TUPLE_SIZE = "tuple_size"
    PIXEL_SIZE = "pixel_size"
    RANDOM = "random"


class SimplifyMethod(enum.Enum):
    DOUGLAS_PEUCKER = "douglas_peucker"
    TOPOLOGY_PRESERVING = "topology_preserving"
    GRID_SNAP = "grid_snap"


@dataclass(frozen=True)
class TriageConfig:
    capacity_metric: CapacityMetric = CapacityMetric.CELLS
    capacity_value: int = 100_000
    priority: Priority = Priority.VERTICES
    simplify_method: SimplifyMethod = SimplifyMethod.DOUGLAS_PEUCKER
    quantize_bins: int = 10
    quantize_min_unique: int = 21
    trim_length: int = 8
    seed: int = 0
    drop_columns: tuple[str, ...] = ()

    def __post_init__(self):
        if self.capacity_value <= 0:
            raise ValueError("capacity must be > 0")
        if self.quantize_bins < 2:
            raise ValueError("need at least 2 quantization bins")
        if self.trim_length < 1:
            raise ValueError("trim length must be >= 1")


# --------------------------------------------------------------------------
# record-level triage
# --------------------------------------------------------------------------

def _record_bytes(t: Tile, est: codec.SizeEstimate) -> list[float]:
    out = []
    for i, f in enumerate(t.features):
        b = float(est.geom_bytes[i])
        for j in range(1, t.width):
            if f[j] is not NULL:
                b += est.cell_cost(j)
        out.append(b)
    return out


def record_triage(t: Tile, cfg: TriageConfig, grid: PixelGrid | None = None,
                  extent: int = DEFAULT_EXTENT) -> Tile:
    """Priority admission of whole records up to the configured capacity.

    Records are considered in descending priority (stable, so ties keep
    document order; RANDOM shuffles with the configured seed) and admitted
    one by one until the next admission would exceed the capacity. Admitted
    records keep their relative document order.
    """
    n = t.size
    if n == 0:
        return t
    if cfg.priority == Priority.VERTICES:
        prio = [f.geometry.vertex_count() for f in t.features]
    elif cfg.priority == Priority.TUPLE_SIZE:
        prio = [sum(f[j] is not NULL for j in range(1, t.width)) for f in t.features]
    elif cfg.priority == Priority.PIXEL_SIZE:
        g = grid or PixelGrid()
        prio = [len(rasterize(f.geometry, g, extent)) for f in t.features]
    elif cfg.priority == Priority.BYTE_SIZE:
        prio = _record_bytes(t, codec.estimate(t, extent))
    else:
        order = list(range(n))
        random.Random(cfg.seed).shuffle(order)
        prio = [0.0] * n
        for rank, i in enumerate(order):
            prio[i] = float(n - rank)

    if cfg.capacity_metric == CapacityMetric.RECORDS:
        cost = [1.0] * n
    elif cfg.capacity_metric == CapacityMetric.CELLS:
        cost = [float(t.width)] * n
    elif cfg.capacity_metric == CapacityMetric.VERTICES:
        cost = [float(f.geometry.vertex_count()) for f in t.features]
    else:
        cost = _record_bytes(t, codec.estimate(t, extent))

    order = sorted(range(n), key=lambda i: (-prio[i], i))
    admitted: set[int] = set()
    used = 0.0
    for i in order:
        if used + cost[i] > cfg.capacity_value:
            break
        admitted.add(i)
        used += cost[i]
    feats = tuple(f for i, f in enumerate(t.features) if i in admitted)
    return replace(t, features=feats, dropped=frozenset())


# --------------------------------------------------------------------------
# column-level reductions
# --------------------------------------------------------------------------

def drop_constant_columns(t: Tile, also: tuple[str, ...] = ()) -> Tile:
    """Null out zero-entropy columns (single distinct value across all rows)
    plus any explicitly excluded attribute names. Schema width is kept."""
    targets = set()
    for j in range(1, t.width):
        if t.schema.columns[j][0] in also:
            targets.add(j)
            continue
        distinct = {(_safe_key(f[j])) for f in t.features}
        if len(distinct) <= 1:
            targets.add(j)
    if not targets:
        return t
    feats = []
    for f in t.features:
        vals = list(f.values)
        for j in targets:
            vals[j] = NULL
        feats.append(Feature(tuple(vals)))
    return replace(t, features=tuple(feats))


def _safe_key(v):
    return ("f", repr(v)) if isinstance(v, float) else (type(v).__name__, repr(v))


def _perp_distance(p, a, b) -> float:
    """Distance from p to segment ab."""
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0:
        return math.hypot(px - ax, py - ay)
    u = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + u * dx), py - (ay + u * dy))


def _douglas_peucker(points: list, tol: float) -> list:
    n = len(points)
    if n < 3:
        return list(points)
    keep = [False] * n
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        best, best_d = -1, -1.0
        for k in range(lo + 1, hi):
            dd = _perp_distance(points[k], points[lo], points[hi])
            if dd > best_d:
                best, best_d = k, dd
        if best_d > tol:
            keep[best] = True
            stack.append((lo, best))
            stack.append((best, hi))
    return [p for p, k in zip(points, keep) if k]


def _segments_cross(a, b, c, d) -> bool:
    """Proper intersection of open segments ab and cd."""
    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return (v > 0) - (v < 0)

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _self_intersects(points: list) -> bool:
    segs = list(zip(points, points[1:]))
    for i in range(len(segs)):
        for k in range(i + 2, len(segs)):
            if i == 0 and k == len(segs) - 1 and points[0] == points[-1]:
                continue  # ring closure shares an endpoint by design
            if _segments_cross(*segs[i], *segs[k]):
                return True
    return False


def _snap(points: list, tol: float) -> list:
    out = []
    for x, y in points:
        p = (round(x / tol) * tol, round(y / tol) * tol)
        if not out or out[-1] != p:
            out.append(p)
    return out


def _simplify_path(points: list, method: SimplifyMethod, tol: float) -> list:
    if method == SimplifyMethod.GRID_SNAP:
        return _snap(points, tol)
    out = _douglas_peucker(list(points), tol)
    if method == SimplifyMethod.TOPOLOGY_PRESERVING:
        t = tol
        for _ in range(8):
            if not _self_intersects(out):
                return out
            t /= 2.0
            out = _douglas_peucker(list(points), t)
        return list(points)
    return out


def simplify_geometry(g: Geometry, method: SimplifyMethod, tolerance: float) -> Geometry | None:
    """Reduce vertex counts while staying within `tolerance` of the original.

    Rings that collapse below 4 vertices are dropped; a polygon losing its
    exterior ring is dropped; None means the whole geometry degenerated.
    Points pass through untouched.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    k = g.kind
    if k in (GeometryKind.POINT, GeometryKind.MULTIPOINT):
        return g
    if k in (GeometryKind.LINESTRING, GeometryKind.MULTILINESTRING):
        parts = [g.coords] if k == GeometryKind.LINESTRING else list(g.coords)
        kept = []
        for part in parts:
            s = _simplify_path(list(part), method, tolerance)
            if len(s) >= 2:
                kept.append(tuple(s))
        if not kept:
            return None
        if len(kept) == 1:
            return Geometry(GeometryKind.LINESTRING, kept[0])
        return Geometry(GeometryKind.MULTILINESTRING, tuple(kept))
    polys = []
    for rings in g.polygons():
        new_rings = []
        for r, ring in enumerate(rings):
            s = _simplify_path(list(ring), method, tolerance)
            if s and s[0] != s[-1]:
                s.append(s[0])
            if len(s) >= 4 and abs(ring_area(s)) > 0:
                new_rings.append(tuple(s))
            elif r == 0:
                new_rings = []
                break
        if new_rings:
            polys.append(tuple(new_rings))
    if not polys:
        return None
    if len(polys) == 1:
        return Geometry(GeometryKind.POLYGON, polys[0])
    return Geometry(GeometryKind.MULTIPOLYGON, tuple(polys))


# --------------------------------------------------------------------------
# clipping
# --------------------------------------------------------------------------

def _clip_segment(p0, p1, lo, hi):
    """Liang-Barsky; returns (t0, t1) parameter range inside the box or None."""
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0 - lo), (dx, hi - x0), (-dy, y0 - lo), (dy, hi - y0)):
        if p == 0:
            if q < 0:
                return None
            continue
        r = q / p
        if p < 0:
            if r > t1:
                return None
            t0 = max(t0, r)
        else:
            if r < t0:
                return None
            t1 = min(t1, r)
    return (t0, t1) if t0 <= t1 else None


def _clip_path(points, lo, hi) -> list[list]:
    parts: list[list] = []
    current: list = []
    for p0, p1 in zip(points, points[1:]):
        span = _clip_segment(p0, p1, lo, hi)
        if span is None:
            if len(current) >= 2:
                parts.append(current)
            current = []
            continue
        t0, t1 = span
        dx, dy = p1[0] - p0[0], p1[1] - p0[1]
        a = (p0[0] + t0 * dx, p0[1] + t0 * dy)
        b = (p0[0] + t1 * dx, p0[1] + t1 * dy)
        if not current or current[-1] != a:
            if len(current) >= 2:
                parts.append(current)
            current = [a]
        current.append(b)
    if len(current) >= 2:
        parts.append(current)
    return parts


def _clip_ring(ring, lo, hi) -> tuple | None:
    """Sutherland-Hodgman against the four box half-planes."""
    pts = list(ring[:-1])
    for axis, bound, keep_ge in ((0, lo, True), (0, hi, False), (1, lo, True), (1, hi, False)):
        if not pts:
            return None
        out = []
        n = len(pts)
        for k in range(n):
            cur, nxt = pts[k], pts[(k + 1) % n]
            cin = (cur[axis] >= bound) if keep_ge else (cur[axis] <= bound)
            nin = (nxt[axis] >= bound) if keep_ge else (nxt[axis] <= bound)
            if cin:
                out.append(cur)
            if cin != nin:
                t = (bound - cur[axis]) / (nxt[axis] - cur[axis])
                if axis == 0:
                    out.append((bound, cur[1] + t * (nxt[1] - cur[1])))
                else:
                    out.append((cur[0] + t * (nxt[0] - cur[0]), bound))
        pts = out
    dedup = []
    for p in pts:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    if len(dedup) < 3:
        return None
    ring_out = tuple(dedup) + (dedup[0],)
    if ring_area(ring_out) == 0:
        return None
    return ring_out


def clip_to_tile(g: Geometry, extent: int = DEFAULT_EXTENT,
                 buffer: int = codec.DEFAULT_BUFFER) -> Geometry | None:
    """Intersect a geometry with the buffered tile square; None if outside."""
    lo, hi = -float(buffer), float(extent + buffer)

    def inside(p):
        return lo <= p[0] <= hi and lo <= p[1] <= hi

    k = g.kind
    if k in (GeometryKind.POINT, GeometryKind.MULTIPOINT):
        pts = [g.coords] if k == GeometryKind.POINT else [p for p in g.coords if inside(p)]
        if k == GeometryKind.POINT:
            return g if inside(g.coords) else None
        if not pts:
            return None
        if len(pts) == 1:
            return Geometry(GeometryKind.POINT, pts[0])
        return Geometry(GeometryKind.MULTIPOINT, tuple(pts))
    if k in (GeometryKind.LINESTRING, GeometryKind.MULTILINESTRING):
        parts = []
        for path in g.paths():
            parts.extend(_clip_path(list(path), lo, hi))
        if not parts:
            return None
        if len(parts) == 1:
            return Geometry(GeometryKind.LINESTRING, tuple(parts[0]))
        return Geometry(GeometryKind.MULTILINESTRING, tuple(tuple(p) for p in parts))
    polys = []
    for rings in g.polygons():
        exterior = _clip_ring(rings[0], lo, hi)
        if exterior is None:
            continue
        new_rings = [exterior]
        for hole in rings[1:]:
            ch = _clip_ring(hole, lo, hi)
            if ch is not None:
                new_rings.append(ch)
        polys.append(tuple(new_rings))
    if not polys:
        return None
    if len(polys) == 1:
        return Geometry(GeometryKind.POLYGON, polys[0])
    return Geometry(GeometryKind.MULTIPOLYGON, tuple(polys))


# --------------------------------------------------------------------------
# value reductions
# --------------------------------------------------------------------------

def quantize_numeric(t: Tile, j: int, bins: int = 10, min_unique: int = 21) -> Tile:
    """Equal-width binning of a numeric column to `bins` midpoints.

    Only bites when the column has at least `min_unique` distinct non-null
    values; otherwise the tile passes through unchanged. Binned columns
    become FLOAT (midpoints are generally fractional).
    """
    if t.schema.type_of(j) not in (AttributeType.INT, AttributeType.FLOAT):
        return t
    vals = [f[j] for f in t.features if f[j] is not NULL]
    if len(set(vals)) < min_unique:
        return t
    mn, mx = min(vals), max(vals)
    if mn == mx:
        return t
    width = (mx - mn) / bins

    def q(v):
        k = min(bins - 1, int((v - mn) / width))
        return mn + (k + 0.5) * width

    feats = []
    for f in t.features:
        values = list(f.values)
        if values[j] is not NULL:
            values[j] = float(q(values[j]))
        feats.append(Feature(tuple(values)))
    return replace(t, schema=t.schema.retype(j, AttributeType.FLOAT), features=tuple(feats))


TRIM_MARK = "…"


def trim_strings(t: Tile, j: int, length: int = 8) -> Tile:
    """Truncate long strings to `length` characters plus an ellipsis mark."""
    if t.schema.type_of(j) != AttributeType.STR:
        return t
    feats = []
    for f in t.features:
        values = list(f.values)
        v = values[j]
        if isinstance(v, str) and len(v) > length:
            values[j] = v[:length] + TRIM_MARK
        feats.append(Feature(tuple(values)))
    return replace(t, features=tuple(feats))


def _reduction_kld(t: Tile, j: int, mapping, grid: PixelGrid, extent: int,
                   paint, epsilon: float = 1.0) -> float:
    """Information lost by rewriting column j's values through `mapping`.

    Values that map to the same representative become indistinguishable, so
    the reconstructed distribution splits each merged group's pixel mass
    uniformly among its members; the score is the KLD from the original
    distribution to that reconstruction. Injective rewrites score exactly 0.
    """
    counts = pixel_counts(t, j, grid, extent, paint)
    dom = t.domain(j)
    pos = {v: k for k, v in enumerate(dom)}
    p = smooth(counts, dom, epsilon, grid.resolution)
    groups: dict = {}
    for v in dom:
        r = NULL if v is NULL else mapping(v)
        groups.setdefault(_safe_key(r), []).append(v)
    q = np.empty(len(dom))
    for members in groups.values():
        mass = sum(float(p.probs[pos[v]]) for v in members)
        share = mass / len(members)
        for v in members:
            q[pos[v]] = share
    return float(np.sum(p.probs * np.log2(p.probs / q)))


def column_triage(t: Tile, target_bytes: int, cfg: TriageConfig,
                  grid: PixelGrid | None = None, extent: int = DEFAULT_EXTENT) -> Tile:
    """Apply per-column reductions in ascending order of information loss
    until the measured tile size reaches the target (or candidates run out).
    """
    if codec.measure(t, extent).total_bytes <= target_bytes:
        return t
    grid = grid or PixelGrid()
    from .raster import paint_index_image
    paint = paint_index_image(t, grid, extent)
    candidates = []
    for j in range(1, t.width):
        ctype = t.schema.type_of(j)
        if ctype in (AttributeType.INT, AttributeType.FLOAT):
            vals = [f[j] for f in t.features if f[j] is not NULL]
            if len(set(vals)) >= cfg.quantize_min_unique and vals and min(vals) != max(vals):
                mn, mx = min(vals), max(vals)
                width = (mx - mn) / cfg.quantize_bins
                mapping = lambda v, mn=mn, width=width: mn + (min(cfg.quantize_bins - 1, int((v - mn) / width)) + 0.5) * width
                score = _reduction_kld(t, j, mapping, grid, extent, paint)
                candidates.append((score, j, "quantize"))
        elif ctype == AttributeType.STR:
            if any(isinstance(f[j], str) and len(f[j]) > cfg.trim_length for f in t.features):
                mapping = lambda v, L=cfg.trim_length: v[:L] + TRIM_MARK if len(v) > L else v
                score = _reduction_kld(t, j, mapping, grid, extent, paint)
                candidates.append((score, j, "trim"))
    candidates.sort(key=lambda c: (c[0], c[1]))
    for _, j, kind in candidates:
        if kind == "quantize":
            t = quantize_numeric(t, j, cfg.quantize_bins, cfg.quantize_min_unique)
        else:
            t = trim_strings(t, j, cfg.trim_length)
        if codec.measure(t, extent).total_bytes <= target_bytes:
            break
    return t


# --------------------------------------------------------------------------
# full triage pass
# --------------------------------------------------------------------------

# Column reductions aim at a multiple of the final budget; the sparsifier
# owns the fine cut, triage just has to land in its working range.
COLUMN_TRIAGE_FACTOR = 4


def triage(t: Tile, cfg: TriageConfig, budget_bytes: int,
           grid: PixelGrid | None = None, extent: int = DEFAULT_EXTENT) -> Tile:
    """The full pre-reduction pass, in order: constant-column drop, clip and
    simplify (tolerance of one pixel), record admission to capacity, then
    column reductions while the tile still exceeds its working target."""
    grid = grid or PixelGrid()
    t = drop_constant_columns(t, cfg.drop_columns)
    tol = extent / grid.side
    feats = []
    for f in t.features:
        g = clip_to_tile(f.geometry, extent)
        if g is None:
            continue
        g = simplify_geometry(g, cfg.simplify_method, tol)
        if g is None:
            continue
        feats.append(Feature((g,) + f.values[1:]))
    t = replace(t, features=tuple(feats), dropped=frozenset())
    t = record_triage(t, cfg, grid, extent)
    target = COLUMN_TRIAGE_FACTOR * budget_bytes
    if codec.measure(t, extent).total_bytes > target:
        t = column_triage(t, target, cfg, grid, extent)
    return t
