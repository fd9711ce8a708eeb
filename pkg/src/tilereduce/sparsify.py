"""Cell sparsification: pick which records and attribute cells survive a
byte budget, by mixed-integer optimization.

Per tile this builds a 0/1 program over record variables ``y_i`` (keep the
geometry of row i), column variables ``u_j`` (keep column j at all) and cell
variables ``x_{i,j}`` (keep the value in a non-null cell), subject to

* structure: ``x_{i,j} <= y_i`` and ``x_{i,j} <= u_j``,
* one byte-budget constraint from the linear size model: each kept record
  pays its geometry bytes, each kept cell pays a pointer cost plus an
  amortized share of its column dictionary,

and maximizes ``alpha * sum(U_rec_i * y_i) + (1-alpha) * sum(U_cell_ij *
x_ij)``. Record utility grows with normalized pixel footprint (visual
salience); cell utility is the cell's normalized nullification divergence,
so the cells whose loss would distort the column distribution most are the
most valuable to keep. Dropping the least-divergent cells first is also
exactly what makes the reduction collapse to 0-1 Knapsack on the instances
the NP-hardness construction builds, which `knapsack_oracle_check` exploits
as a solver oracle.

The bundled solver is an exact depth-first branch and bound. Node bounds
come from the fractional-knapsack relaxation of the budget constraint
(structural constraints enter through variable fixing/propagation), the
branching variable is the relaxation's single fractional item, and nodes
within the requested relative gap of the incumbent are pruned. With gap 0
the search is exhaustive-equivalent; with the default 1% gap large tiles
almost always terminate at the root.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import codec
from .codec import SizeEstimate
from .metrics import cell_divergence
from .model import NULL, Geometry, GeometryKind, Schema, AttributeType, Feature, Tile, tile as make_tile
from .raster import DEFAULT_EXTENT, PixelGrid, pixel_footprints


@dataclass(frozen=True)
class SparsifyParams:
    budget_bytes: int = 262144
    alpha: float = 0.5
    lambda_rec: float = 1.0
    exponent_p: float = 2.0
    gap: float = 0.01
    grid: PixelGrid = field(default_factory=PixelGrid)
    epsilon: float = 1.0
    extent: int = DEFAULT_EXTENT
    # pathologically tight budgets can leave a real integrality gap above
    # the requested one; the incumbent is still feasible, so cap the search
    solver_timeout: float | None = 10.0
    shrink_rounds: int = 5

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")
        if self.exponent_p < 1.0:
            raise ValueError("exponent p must be >= 1")
        if self.lambda_rec <= 0:
            raise ValueError("lambda_rec must be > 0")
        if self.gap < 0:
            raise ValueError("gap must be >= 0")


class SolverStatus(enum.Enum):
    OPTIMAL = "optimal"
    GAP_REACHED = "gap_reached"
    TIMEOUT = "timeout"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SparsifyModel:
    """Variable layout, coefficients, and the single budget constraint.

    Variables are ordered y_0..y_{N-1}, then u_j for non-empty columns,
    then x_{i,j} for non-null cells in row-major order; `objective` and
    `weight` align with that order.
    """

    n_rows: int
    n_cols: int
    u_columns: tuple[int, ...]
    cells: tuple[tuple[int, int], ...]
    objective: np.ndarray
    weight: np.ndarray
    capacity: float

    @property
    def n_vars(self) -> int:
        return self.n_rows + len(self.u_columns) + len(self.cells)

    def var_name(self, k: int) -> str:
        if k < self.n_rows:
            return f"y_{k}"
        k -= self.n_rows
        if k < len(self.u_columns):
            return f"u_{self.u_columns[k]}"
        i, j = self.cells[k - len(self.u_columns)]
        return f"x_{i}_{j}"

    def x_offset(self) -> int:
        return self.n_rows + len(self.u_columns)


@dataclass(frozen=True)
class SparsifyDecision:
    y: tuple[int, ...]
    u: dict[int, int]
    x: dict[tuple[int, int], int]
    objective_value: float
    achieved_estimate_bytes: float
    solver_status: SolverStatus

    def kept_cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(c for c, kept in self.x.items() if kept)


def record_utility(footprints, lambda_rec: float = 1.0, p: float = 2.0) -> np.ndarray:
    """Visual-salience utilities: lambda * (footprint / max footprint)^p.

    A tile whose features all miss the grid has no salience signal; every
    record then gets the full lambda so the budget alone decides.
    """
    fp = np.asarray(footprints, dtype=np.float64)
    if fp.size == 0:
        return fp
    m = fp.max()
    if m <= 0:
        return np.full(fp.shape, lambda_rec)
    return lambda_rec * (fp / m) ** p


def build_model(t: Tile, params: SparsifyParams, divergences: np.ndarray,
                size_est: SizeEstimate, footprints=None,
                capacity: float | None = None) -> SparsifyModel:
    """Assemble the program for one tile.

    ``divergences`` is the normalized cell-divergence matrix; ``size_est``
    supplies geometry bytes and per-cell amortized costs. u variables exist
    only for columns with at least one non-null cell, x variables only for
    the non-null cells themselves.
    """
    if t.size == 0:
        raise ValueError("cannot sparsify an empty tile")
    if capacity is None:
        if params.budget_bytes <= 0:
            raise ValueError("budget must be > 0")
        cap = float(params.budget_bytes)
    else:
        # internal callers (shrink rounds, oracle instances) may pass 0
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        cap = float(capacity)
    if footprints is None:
        footprints = pixel_footprints(t, params.grid, params.extent)
    u_rec = record_utility(footprints, params.lambda_rec, params.exponent_p)

    cells = [(i, j) for i, f in enumerate(t.features) if i not in t.dropped
             for j in range(1, t.width) if f[j] is not NULL]
    u_cols = tuple(sorted({j for _, j in cells}))

    obj = np.empty(t.size + len(u_cols) + len(cells))
    w = np.empty_like(obj)
    obj[:t.size] = params.alpha * u_rec
    w[:t.size] = [size_est.geom_bytes[i] if i < len(size_est.geom_bytes) else 0
                  for i in range(t.size)]
    obj[t.size:t.size + len(u_cols)] = 0.0
    w[t.size:t.size + len(u_cols)] = 0.0
    base = t.size + len(u_cols)
    for k, (i, j) in enumerate(cells):
        obj[base + k] = (1.0 - params.alpha) * float(divergences[i, j])
        w[base + k] = size_est.cell_cost(j)
    return SparsifyModel(t.size, t.width, u_cols, tuple(cells), obj, w, float(cap))


def to_lp(model: SparsifyModel) -> str:
    """The model in LP text format, for cross-checking with external solvers."""
    terms = " + ".join(f"{model.objective[k]:.12g} {model.var_name(k)}"
                       for k in range(model.n_vars))
    size_terms = " + ".join(f"{model.weight[k]:.12g} {model.var_name(k)}"
                            for k in range(model.n_vars) if model.weight[k] > 0)
    lines = ["Maximize", f" obj: {terms}", "Subject To",
             f" size: {size_terms if size_terms else '0 y_0'} <= {model.capacity:.12g}"]
    x0 = model.x_offset()
    u_pos = {j: model.n_rows + k for k, j in enumerate(model.u_columns)}
    for k, (i, j) in enumerate(model.cells):
        xn = model.var_name(x0 + k)
        lines.append(f" s_{xn}_y: {xn} - y_{i} <= 0")
        lines.append(f" s_{xn}_u: {xn} - {model.var_name(u_pos[j])} <= 0")
    lines.append("Binaries")
    lines.append(" " + " ".join(model.var_name(k) for k in range(model.n_vars)))
    lines.append("End")
    return "\n".join(lines) + "\n"


class _BranchAndBound:
    """Exact DFS branch and bound over the y/x variables.

    u variables carry no weight and no objective, so they are resolved after
    the fact (u_j = 1 exactly when column j keeps a cell). Zero-objective
    variables are filled greedily at the end so that a slack budget keeps
    everything, which is the tie-break the rest of the pipeline expects.

    Node bounds take the tighter of two relaxations: the fractional
    knapsack over free variables (which ignores the cell-needs-its-record
    structure but yields the fractional branching variable), and the
    Lagrangian value at the root multiplier, which charges every taken cell
    its record's geometry through the per-record inner maximization and is
    valid at any node by weak duality.
    """

    CHECK_EVERY = 256

    def __init__(self, model: SparsifyModel, gap: float, timeout: float | None):
        self.model = model
        self.gap = gap
        self.timeout = timeout
        n, x0 = model.n_rows, model.x_offset()
        self.n_rows = n
        self.nv = model.n_vars
        self.obj = model.objective
        self.w = model.weight
        self.cap = model.capacity
        # search runs over y and x variables only
        self.active = np.ones(self.nv, dtype=bool)
        self.active[n:x0] = False
        self.x_parent = np.full(self.nv, -1, dtype=np.int64)
        self.y_children: list[list[int]] = [[] for _ in range(self.nv)]
        for k, (i, _) in enumerate(model.cells):
            self.x_parent[x0 + k] = i
            self.y_children[i].append(x0 + k)
        dens = np.where(self.w > 0, self.obj / np.where(self.w > 0, self.w, 1.0), np.inf)
        dens[~self.active] = -np.inf
        self.order = np.lexsort((np.arange(self.nv), -dens))
        self.w_sorted = self.w[self.order]
        self.obj_sorted = self.obj[self.order]
        self.x0 = x0
        self.cell_parent = np.asarray([i for i, _ in model.cells], dtype=np.int64)
        self.lam = self._root_multiplier()

    # -- Lagrangian machinery -------------------------------------------------

    def _dual_value(self, lam: float, fixed: np.ndarray, room: float, fobj: float) -> float:
        """Weak-duality bound at multiplier lam for a node's free variables."""
        n, x0 = self.n_rows, self.x0
        free_cells = fixed[x0:] == -1
        r_cells = np.where(free_cells, self.obj[x0:] - lam * self.w[x0:], 0.0)
        np.maximum(r_cells, 0.0, out=r_cells)
        per_rec = np.bincount(self.cell_parent, weights=r_cells, minlength=n)
        y_state = fixed[:n]
        r_y = self.obj[:n] - lam * self.w[:n]
        net = np.where(y_state == -1, np.maximum(r_y + per_rec, 0.0),
                       np.where(y_state == 1, per_rec, 0.0))
        return fobj + lam * max(room, 0.0) + float(net.sum())

    def _root_multiplier(self) -> float:
        """Minimize the root dual by golden-section search on the convex g."""
        root = np.full(self.nv, -1, dtype=np.int8)
        root[~self.active] = 0

        def g(lam):
            return self._dual_value(lam, root, self.cap, 0.0)

        pos = self.w > 0
        hi = float((self.obj[pos] / self.w[pos]).max()) if pos.any() else 1.0
        lo = 0.0
        phi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        fa, fb = g(a), g(b)
        c, d = b - phi * (b - a), a + phi * (b - a)
        fc, fd = g(c), g(d)
        for _ in range(60):
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - phi * (b - a)
                fc = g(c)
            else:
                a, c, fc = c, d, fd
                d = a + phi * (b - a)
                fd = g(d)
        candidates = [(g(0.0), 0.0), (fc, c), (fd, d)]
        return min(candidates)[1]

    # -- relaxation bound ---------------------------------------------------

    def _bound(self, fixed: np.ndarray, used: float, fobj: float):
        """Tightest available upper bound plus the fractional branching
        variable (the split item of the knapsack relaxation)."""
        free = fixed[self.order] == -1
        w_eff = np.where(free, self.w_sorted, 0.0)
        o_eff = np.where(free, np.maximum(self.obj_sorted, 0.0), 0.0)
        cw = np.cumsum(w_eff)
        co = np.cumsum(o_eff)
        room = self.cap - used
        k = int(np.searchsorted(cw, room, side="right"))
        knap = fobj + (co[k - 1] if k else 0.0)
        split = -1
        if k < self.nv:
            taken_w = cw[k - 1] if k else 0.0
            frac = max(0.0, (room - taken_w) / self.w_sorted[k])
            if self.obj_sorted[k] > 0:
                knap += self.obj_sorted[k] * frac
            split = int(self.order[k])
        bound = min(knap, self._dual_value(self.lam, fixed, room, fobj))
        return bound * (1 + 1e-12) + 1e-12, split

    # -- greedy feasible solutions ---------------------------------------------

    def _greedy(self, fixed: np.ndarray, used: float):
        """Density-order repair greedy: cells pull their record in when the
        pair fits. Returns a feasible completion of the node's fixing."""
        take = fixed.copy()
        room = self.cap - used
        for pos in range(self.nv):
            k = int(self.order[pos])
            if take[k] != -1 or self.obj[k] <= 0:
                continue
            parent = int(self.x_parent[k])
            extra = self.w[k]
            if parent >= 0:
                if take[parent] == 0:
                    continue
                if take[parent] == -1:
                    extra += self.w[parent]
            if extra <= room + 1e-12:
                take[k] = 1
                if parent >= 0 and take[parent] == -1:
                    take[parent] = 1
                room -= extra
        take[take == -1] = 0
        return take

    def _bundle_greedy(self, fixed: np.ndarray, used: float):
        """Record-bundle greedy at the root multiplier: each record plus its
        positive-reduced-profit cells is one unit, taken in net-density order."""
        n, x0 = self.n_rows, self.x0
        take = fixed.copy()
        room = self.cap - used
        r_cells = self.obj[x0:] - self.lam * self.w[x0:]
        keep_cell = (r_cells > 0) & (fixed[x0:] == -1)
        bundle_obj = self.obj[:n].copy()
        bundle_w = self.w[:n].copy()
        cell_lists: list[list[int]] = [[] for _ in range(n)]
        for k in np.nonzero(keep_cell)[0]:
            i = int(self.cell_parent[k])
            bundle_obj[i] += self.obj[x0 + k]
            bundle_w[i] += self.w[x0 + k]
            cell_lists[i].append(x0 + k)
        dens = bundle_obj / np.maximum(bundle_w, 1e-300)
        for i in sorted(range(n), key=lambda i: (-dens[i], i)):
            if take[i] == 0 or bundle_obj[i] <= 0:
                continue
            if take[i] == -1 and bundle_w[i] <= room + 1e-12:
                take[i] = 1
                room -= self.w[i]
                for c in cell_lists[i]:
                    if take[c] == -1:
                        take[c] = 1
                        room -= self.w[c]
            elif take[i] == 1:
                for c in cell_lists[i]:
                    if take[c] == -1 and self.w[c] <= room + 1e-12:
                        take[c] = 1
                        room -= self.w[c]
        # spend any remaining room on leftover cells of taken records
        for pos in range(self.nv):
            k = int(self.order[pos])
            if take[k] != -1 or self.obj[k] <= 0:
                continue
            parent = int(self.x_parent[k])
            if parent >= 0 and take[parent] != 1:
                continue
            if self.w[k] <= room + 1e-12:
                take[k] = 1
                room -= self.w[k]
        take[take == -1] = 0
        return take

    def _value(self, assign: np.ndarray) -> float:
        return float(self.obj[assign == 1].sum())

    def _fill_zero_objective(self, assign: np.ndarray):
        """Keep anything free that costs nothing in objective and fits."""
        room = self.cap - float(self.w[assign == 1].sum())
        for _ in range(2):  # second pass lets x follow a freshly kept y
            for k in range(self.nv):
                if assign[k] == 1 or not self.active[k] or self.obj[k] > 0:
                    continue
                parent = int(self.x_parent[k])
                if parent >= 0 and assign[parent] != 1:
                    continue
                if self.w[k] <= room + 1e-12:
                    assign[k] = 1
                    room -= self.w[k]
        return assign

    # -- main loop ------------------------------------------------------------

    def run(self):
        if self.cap < 0:
            return None, SolverStatus.INFEASIBLE
        start = time.monotonic()
        root_fixed = np.full(self.nv, -1, dtype=np.int8)
        root_fixed[~self.active] = 0
        incumbent = self._greedy(root_fixed, 0.0)
        inc_val = self._value(incumbent)
        bundled = self._bundle_greedy(root_fixed, 0.0)
        if self._value(bundled) > inc_val:
            incumbent, inc_val = bundled, self._value(bundled)
        timed_out = False
        gap_pruned = False
        nodes = 0
        stack = [(root_fixed, 0.0, 0.0)]
        while stack:
            nodes += 1
            if self.timeout is not None and nodes % self.CHECK_EVERY == 0:
                if time.monotonic() - start > self.timeout:
                    timed_out = True
                    break
            fixed, used, fobj = stack.pop()
            bound, split = self._bound(fixed, used, fobj)
            tol = max(self.gap * abs(inc_val), 1e-12 * (1.0 + abs(inc_val)))
            if bound <= inc_val + tol:
                if bound <= inc_val + 1e-12 * (1.0 + abs(inc_val)):
                    pass  # genuinely dominated, not a gap concession
                else:
                    gap_pruned = True
                continue
            if split < 0:
                assign = fixed.copy()
                assign[assign == -1] = 1
                val = self._value(assign)
                if val > inc_val:
                    incumbent, inc_val = assign, val
                continue
            # child with split = 0 explored after the dive on split = 1
            f0 = fixed.copy()
            f0[split] = 0
            if self.x_parent[split] < 0:
                for c in self.y_children[split]:
                    f0[c] = 0
            stack.append((f0, used, fobj))
            f1 = fixed.copy()
            add_w, add_o = self.w[split], self.obj[split]
            f1[split] = 1
            parent = int(self.x_parent[split])
            if parent >= 0 and f1[parent] == -1:
                f1[parent] = 1
                add_w += self.w[parent]
                add_o += self.obj[parent]
            if used + add_w <= self.cap + 1e-12 and (parent < 0 or f1[parent] == 1):
                # re-run the repair greedy occasionally; integral leaves keep
                # the incumbent honest in between without the O(V) cost per node
                if nodes < 64 or nodes % 64 == 0:
                    g = self._greedy(f1, used + add_w)
                    g_val = self._value(g)
                    if g_val > inc_val:
                        incumbent, inc_val = g, g_val
                stack.append((f1, used + add_w, fobj + add_o))
        incumbent = self._fill_zero_objective(incumbent.copy())
        if timed_out:
            status = SolverStatus.TIMEOUT
        elif gap_pruned and self.gap > 0:
            status = SolverStatus.GAP_REACHED
        else:
            status = SolverStatus.OPTIMAL
        return incumbent, status


def solve(model: SparsifyModel, gap: float | None = None,
          timeout: float | None = None) -> SparsifyDecision:
    """Solve to the requested relative optimality gap (0 = exact).

    The empty assignment is always feasible for a nonnegative budget, so
    INFEASIBLE only appears when the effective capacity is negative; on
    timeout the best incumbent found so far is returned.
    """
    bb = _BranchAndBound(model, 0.0 if gap is None else gap, timeout)
    assign, status = bb.run()
    n, x0 = model.n_rows, model.x_offset()
    if assign is None:
        y = tuple(0 for _ in range(n))
        u = {j: 0 for j in model.u_columns}
        x = {c: 0 for c in model.cells}
        return SparsifyDecision(y, u, x, 0.0, 0.0, status)
    x = {c: int(assign[x0 + k]) for k, c in enumerate(model.cells)}
    kept_cols = {j for (i, j), kept in x.items() if kept}
    y = tuple(int(v) for v in assign[:n])
    u = {j: int(j in kept_cols) for j in model.u_columns}
    achieved = float(model.weight[assign == 1].sum())
    objective = float(model.objective[assign == 1].sum())
    return SparsifyDecision(y, u, x, objective, achieved, status)


def apply(t: Tile, decision: SparsifyDecision) -> Tile:
    """Materialize a decision: null cells with x=0, null whole columns with
    u=0, and drop rows with y=0 from the wire while keeping them as all-null
    occluders for distortion accounting."""
    if len(decision.y) != t.size:
        raise ValueError("decision does not match tile dimensions")
    if any(not (0 <= j < t.width) for _, j in decision.x):
        raise ValueError("decision references columns outside the tile")
    kept = decision.kept_cells()
    features = []
    dropped = set(t.dropped)
    for i, f in enumerate(t.features):
        values = [f.geometry]
        for j in range(1, t.width):
            v = f[j]
            values.append(v if v is not NULL and (i, j) in kept else NULL)
        if not decision.y[i]:
            dropped.add(i)
            values = [f.geometry] + [NULL] * (t.width - 1)
        features.append(Feature(tuple(values)))
    return replace(t, features=tuple(features), dropped=frozenset(dropped))


def _constant_decision(t: Tile, est: SizeEstimate, keep: bool,
                       status: SolverStatus) -> SparsifyDecision:
    cells = [(i, j) for i, f in enumerate(t.features) if i not in t.dropped
             for j in range(1, t.width) if f[j] is not NULL]
    k = int(keep)
    y = tuple(0 if i in t.dropped else k for i in range(t.size))
    u = {j: k for j in sorted({j for _, j in cells})}
    x = {c: k for c in cells}
    achieved = 0.0
    if keep:
        achieved = float(sum(est.geom_bytes)) + sum(est.cell_cost(j) for _, j in cells)
    return SparsifyDecision(y, u, x, 0.0, achieved, status)


def sparsify_tile(t: Tile, params: SparsifyParams) -> tuple[Tile, SparsifyDecision]:
    """Reduce one tile under its byte budget.

    Returns unchanged (with an all-ones decision) when the tile already
    fits. Otherwise: footprints, size model and cell divergences feed the
    program; after solving, the true encoded size is checked against the
    budget and the effective capacity shrinks by x0.9 for up to
    `shrink_rounds` re-solves if the linear model undershot.
    """
    b = params.budget_bytes
    data, est, overhead = codec.analyze(t, params.extent)
    if len(data) <= b:
        return t, _constant_decision(t, est, keep=True, status=SolverStatus.OPTIMAL)
    fp = pixel_footprints(t, params.grid, params.extent)
    div = cell_divergence(t, params.grid, params.epsilon, params.extent)
    capacity = float(b - overhead)
    best: tuple[Tile, SparsifyDecision] | None = None
    for _ in range(params.shrink_rounds + 1):
        if capacity <= 0:
            # not even the fixed envelope fits: ship the empty reduction
            decision = _constant_decision(t, est, keep=False,
                                          status=SolverStatus.INFEASIBLE)
            return apply(t, decision), decision
        model = build_model(t, params, div, est, fp, capacity=capacity)
        decision = solve(model, gap=params.gap, timeout=params.solver_timeout)
        reduced = apply(t, decision)
        best = (reduced, decision)
        if len(codec.encode(reduced, params.extent)) <= b:
            return best
        capacity *= 0.9
    return best


# --------------------------------------------------------------------------
# Knapsack oracle
# --------------------------------------------------------------------------

def knapsack_dp(sizes: list[int], values: list[int], capacity: int) -> int:
    """Classic 0-1 knapsack optimum by dynamic programming over capacity."""
    best = [0] * (capacity + 1)
    for s, v in zip(sizes, values):
        for c in range(capacity, s - 1, -1):
            cand = best[c - s] + v
            if cand > best[c]:
                best[c] = cand
    return best[capacity]


def knapsack_oracle_check(items: list[tuple[int, int]], capacity: int) -> bool:
    """Solver-correctness oracle built from the hardness construction.

    Items (size s_i, value v_i) become a two-column tile whose row i is a
    horizontal line rasterizing to exactly v_i pixels (so record utility is
    proportional to v_i at exponent 1) plus a unique label. Geometry bytes
    are overridden to charge s_i per retained record and cells cost nothing,
    smoothing never enters, and alpha=1 makes the program literally the 0-1
    knapsack over the rows. Passes when the sparsifier's retained value
    matches the dynamic-programming optimum.
    """
    if len(items) > 12:
        raise ValueError("oracle instances are capped at 12 items")
    if len(set(v for _, v in items)) != len(items):
        raise ValueError("item values must be unique")
    sizes = [int(s) for s, _ in items]
    values = [int(v) for _, v in items]
    n = len(items)
    side = max(values + [n, 1])
    extent = DEFAULT_EXTENT
    px = extent / side
    schema = Schema((("geometry", AttributeType.GEOMETRY), ("label", AttributeType.STR)))
    rows = []
    for i, v in enumerate(values):
        y = (i % side) + 0.5
        line = Geometry(GeometryKind.LINESTRING, ((0.3 * px, y * px), ((v - 0.3) * px, y * px)))
        rows.append((line, str(i)))
    t = make_tile(schema, rows)
    grid = PixelGrid(side)
    fp = pixel_footprints(t, grid, extent)
    if fp != values:
        raise AssertionError(f"construction footprints {fp} != values {values}")
    params = SparsifyParams(budget_bytes=max(capacity, 1), alpha=1.0,
                            lambda_rec=1.0, exponent_p=1.0, gap=0.0, grid=grid)
    est = SizeEstimate(tuple(sizes), {}, {1: n}, ptr_cost=0)
    model = build_model(t, params, np.zeros((n, 2)), est, footprints=fp,
                        capacity=float(capacity))
    decision = solve(model, gap=0.0)
    achieved = sum(v for v, keep in zip(values, decision.y) if keep)
    return achieved == knapsack_dp(sizes, values, capacity)
