"""Information-theoretic distortion metrics over pixel-weighted distributions.

The chain is: rasterize a column into an attribute image, count pixels per
value, Laplace-smooth the counts into a distribution, then compare tiles
with the Jensen-Shannon divergence per column and an inverse-entropy
weighted sum across columns. Everything uses log base 2, which keeps the
per-column divergence inside [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import NULL, Tile, Value
from .raster import (
    DEFAULT_EXTENT,
    PixelGrid,
    paint_index_image,
    pixel_counts,
    visible_counts,
)


@dataclass(frozen=True)
class PixelDistribution:
    """Laplace-smoothed pixel-weighted value distribution for one column.

    ``probs[k] = (count(support[k]) + epsilon) / (R + epsilon * len(support))``
    """

    support: tuple
    probs: np.ndarray
    epsilon: float
    pixel_count: int

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=np.float64))
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError("probabilities do not sum to 1")

    def prob_of(self, v: Value) -> float:
        return float(self.probs[self.support.index(v)])


@dataclass(frozen=True)
class TldParams:
    epsilon: float = 1.0
    delta: float = 1e-9
    gamma: float = 1.0
    grid: PixelGrid = field(default_factory=PixelGrid)
    extent: int = DEFAULT_EXTENT

    def __post_init__(self):
        if self.epsilon <= 0 or self.delta <= 0 or self.gamma < 0:
            raise ValueError("need epsilon > 0, delta > 0, gamma >= 0")


def smooth(counts: dict[Value, int], domain, epsilon: float, pixel_count: int) -> PixelDistribution:
    """Laplace-smoothed distribution of pixel counts over a full domain.

    Domain members absent from ``counts`` get a zero count (and epsilon
    mass); counts must total the grid's pixel count.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    domain = tuple(domain)
    missing = set(counts) - set(domain)
    if missing:
        raise ValueError(f"counts contain values outside the domain: {missing!r}")
    total = sum(counts.values())
    if total != pixel_count:
        raise ValueError(f"counts sum to {total}, expected {pixel_count}")
    z = pixel_count + epsilon * len(domain)
    probs = np.array([(counts.get(v, 0) + epsilon) / z for v in domain], dtype=np.float64)
    return PixelDistribution(domain, probs, epsilon, pixel_count)


def _check_same_support(p: PixelDistribution, q: PixelDistribution):
    if p.support != q.support:
        raise ValueError("distributions have different supports")


def kld(p: PixelDistribution, q: PixelDistribution) -> float:
    """Kullback-Leibler divergence in bits; q must be strictly positive."""
    _check_same_support(p, q)
    if np.any(q.probs <= 0):
        raise ValueError("q has zero mass somewhere; KLD undefined")
    return float(np.sum(p.probs * np.log2(p.probs / q.probs)))


def vad(p1: PixelDistribution, p2: PixelDistribution) -> float:
    """Jensen-Shannon divergence between two pixel-weighted distributions.

    Symmetric, zero iff equal, and bounded by 1 under log2.
    """
    _check_same_support(p1, p2)
    m = PixelDistribution(p1.support, 0.5 * (p1.probs + p2.probs), p1.epsilon, p1.pixel_count)
    return max(0.0, 0.5 * kld(p1, m) + 0.5 * kld(p2, m))


def entropy(p: PixelDistribution) -> float:
    """Shannon entropy in bits."""
    return max(0.0, float(-np.sum(p.probs * np.log2(p.probs))))


def _shared_domain(t_in: Tile, t_out: Tile, j: int) -> tuple:
    """Input-tile domain order, extended by any values only the output has.

    Comparisons keep the input tile's carrier set as the reference support
    (values the reduction zeroed out stay in the domain with count 0); value
    rewrites such as quantization can introduce new members, which are
    appended so both count vectors stay complete. NULL stays last.
    """
    base = [v for v in t_in.domain(j) if v is not NULL]
    seen = set(base)
    extra = [v for v in t_out.domain(j) if v is not NULL and v not in seen]
    return tuple(base + extra) + (NULL,)


def column_distribution(t: Tile, j: int, domain, params: TldParams,
                        paint: np.ndarray | None = None) -> PixelDistribution:
    counts = pixel_counts(t, j, params.grid, params.extent, paint)
    return smooth(counts, domain, params.epsilon, params.grid.resolution)


def tld(t_in: Tile, t_out: Tile, params: TldParams | None = None) -> float:
    """Tile-level distortion: inverse-entropy weighted per-column divergence.

    Weights come from the input tile only, so low-entropy columns (the ones
    most likely to drive styling) dominate the score. Rows are never
    realigned here; the comparison happens entirely through the painted
    images, so an output tile with physically removed rows compares exactly
    like one whose rows were nulled in place.
    """
    params = params or TldParams()
    if t_in.schema.columns != t_out.schema.columns:
        raise ValueError("tiles have different schemas")
    d = t_in.width
    if d < 2:
        raise ValueError("tile distortion needs at least one non-geometry column")
    paint_in = paint_index_image(t_in, params.grid, params.extent)
    paint_out = paint_index_image(t_out, params.grid, params.extent)
    vads = np.empty(d - 1)
    weights = np.empty(d - 1)
    for j in range(1, d):
        dom = _shared_domain(t_in, t_out, j)
        p_in = column_distribution(t_in, j, dom, params, paint_in)
        p_out = column_distribution(t_out, j, dom, params, paint_out)
        vads[j - 1] = vad(p_in, p_out)
        weights[j - 1] = (entropy(p_in) + params.delta) ** (-params.gamma)
    weights /= weights.sum()
    return float(np.dot(weights, vads))


def tld_weights(t_in: Tile, params: TldParams | None = None) -> np.ndarray:
    """The normalized inverse-entropy column weights used by tld()."""
    params = params or TldParams()
    paint = paint_index_image(t_in, params.grid, params.extent)
    raw = []
    for j in range(1, t_in.width):
        p = column_distribution(t_in, j, t_in.domain(j), params, paint)
        raw.append((entropy(p) + params.delta) ** (-params.gamma))
    w = np.asarray(raw)
    return w / w.sum()


def cell_divergence(t: Tile, grid: PixelGrid | None = None, epsilon: float = 1.0,
                    extent: int = DEFAULT_EXTENT) -> np.ndarray:
    """Normalized single-cell nullification divergences, shape (N, d).

    Entry (i, j) answers: if cell (i, j) alone were nulled, how far would
    column j's smoothed pixel distribution move (KLD against the original),
    normalized by the column's maximum so values land in [0, 1]? Entries for
    null cells and the geometry column are 0 and carry no meaning. A column
    whose non-null cells all tie (including the all-zero case of features
    that cover no pixels) normalizes to 1.0 uniformly.

    Nulling one cell only shifts mass from its value to NULL, so each entry
    needs just the two affected terms of the KLD sum; one paint pass serves
    the whole tile.
    """
    grid = grid or PixelGrid()
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    n, d = t.size, t.width
    out = np.zeros((n, max(d, 1)))
    if n == 0 or d < 2:
        return out
    paint = paint_index_image(t, grid, extent)
    vis = visible_counts(t, grid, extent, paint)
    r = grid.resolution
    for j in range(1, d):
        counts = pixel_counts(t, j, grid, extent, paint)
        dom = t.domain(j)
        z = r + epsilon * len(dom)
        p_bot = (counts.get(NULL, 0) + epsilon) / z
        cells = []
        for i, f in enumerate(t.features):
            v = NULL if i in t.dropped else f[j]
            if v is NULL:
                continue
            pv = (counts[v] + epsilon) / z
            qv = (counts[v] - int(vis[i]) + epsilon) / z
            qb = (counts.get(NULL, 0) + int(vis[i]) + epsilon) / z
            div = pv * math.log2(pv / qv) + p_bot * math.log2(p_bot / qb)
            cells.append((i, max(0.0, div)))
        if not cells:
            continue
        d_max = max(div for _, div in cells)
        for i, div in cells:
            out[i, j] = 1.0 if d_max <= 0.0 else div / d_max
    return out
