import itertools
import random

import numpy as np
import pytest

from tilereduce import codec
from tilereduce.metrics import TldParams, cell_divergence, tld
from tilereduce.model import NULL, AttributeType, Geometry, GeometryKind, Schema, tile
from tilereduce.raster import PixelGrid, pixel_footprints
from tilereduce.sparsify import (
    SolverStatus,
    SparsifyParams,
    apply,
    build_model,
    knapsack_dp,
    knapsack_oracle_check,
    record_utility,
    solve,
    sparsify_tile,
    to_lp,
)

GRID8 = PixelGrid(8)


def brute_force_optimum(model) -> float:
    x0 = model.x_offset()
    u_pos = {j: model.n_rows + k for k, j in enumerate(model.u_columns)}
    best = 0.0
    for bits in itertools.product((0, 1), repeat=model.n_vars):
        w = sum(b * wt for b, wt in zip(bits, model.weight))
        if w > model.capacity + 1e-12:
            continue
        if any(bits[x0 + k] > min(bits[i], bits[u_pos[j]])
               for k, (i, j) in enumerate(model.cells)):
            continue
        best = max(best, sum(b * o for b, o in zip(bits, model.objective)))
    return best


def small_random_model(rng: random.Random, max_vars=14):
    n = rng.randint(1, 4)
    d = rng.randint(2, 3)
    cols = (("geometry", AttributeType.GEOMETRY),) + tuple(
        (f"a{j}", AttributeType.INT) for j in range(1, d))
    rows = []
    for _ in range(n):
        g = Geometry(GeometryKind.POINT, (rng.uniform(0, 4096), rng.uniform(0, 4096)))
        rows.append((g,) + tuple(
            rng.randint(0, 3) if rng.random() < 0.8 else NULL for _ in range(d - 1)))
    t = tile(Schema(cols), rows)
    est = codec.estimate(t)
    div = cell_divergence(t, PixelGrid(16))
    fp = pixel_footprints(t, PixelGrid(16))
    cap = rng.uniform(0, est.total())
    params = SparsifyParams(grid=PixelGrid(16), alpha=rng.choice([0.0, 0.3, 0.5, 1.0]))
    m = build_model(t, params, div, est, fp, capacity=cap)
    return (m, t) if m.n_vars <= max_vars else small_random_model(rng, max_vars)


def toy_model(t, alpha=0.5, p=2.0, capacity=None, gap=0.0):
    est = codec.estimate(t)
    div = cell_divergence(t, GRID8)
    fp = pixel_footprints(t, GRID8)
    params = SparsifyParams(grid=GRID8, alpha=alpha, exponent_p=p, gap=gap)
    cap = capacity if capacity is not None else est.total()
    return build_model(t, params, div, est, fp, capacity=cap), est


def test_record_utility_reference():
    u = record_utility([18, 14, 8, 4], lambda_rec=1.0, p=1.0)
    assert np.allclose(u, [1.0, 14 / 18, 8 / 18, 4 / 18], atol=1e-9)
    assert np.allclose(u, [1.0, 0.7778, 0.4444, 0.2222], atol=1e-4)


def test_record_utility_max_is_lambda():
    u = record_utility([3, 9, 1], lambda_rec=2.5, p=3.0)
    assert u.max() == pytest.approx(2.5)
    assert np.argmax(u) == 1


def test_record_utility_squares_at_p2():
    u1 = record_utility([18, 14, 8, 4], p=1.0)
    u2 = record_utility([18, 14, 8, 4], p=2.0)
    assert np.allclose(u2, u1 ** 2)


def test_record_utility_degenerate_uniform():
    u = record_utility([0, 0, 0], lambda_rec=1.5)
    assert np.allclose(u, [1.5, 1.5, 1.5])


def test_model_variable_layout(lakes_metric):
    m, _ = toy_model(lakes_metric)
    assert m.n_rows == 4
    assert m.u_columns == (1, 2)
    assert len(m.cells) == 8
    assert m.n_vars == 4 + 2 + 8
    names = [m.var_name(k) for k in range(m.n_vars)]
    assert names[:6] == ["y_0", "y_1", "y_2", "y_3", "u_1", "u_2"]
    assert names[6] == "x_0_1" and names[-1] == "x_3_2"


def test_model_skips_null_column(lakes_metric):
    from tilereduce.model import nullify
    t = lakes_metric
    for i in range(4):
        t = nullify(t, i, 2)
    m, _ = toy_model(t)
    assert m.u_columns == (1,)
    assert len(m.cells) == 4
    assert m.n_vars == 4 + 1 + 4


def test_build_model_rejects_bad_budget(lakes_metric):
    est = codec.estimate(lakes_metric)
    div = cell_divergence(lakes_metric, GRID8)
    with pytest.raises(ValueError):
        build_model(lakes_metric, SparsifyParams(budget_bytes=0, grid=GRID8), div, est)
    with pytest.raises(ValueError):
        build_model(tile(lakes_metric.schema, []), SparsifyParams(grid=GRID8), div, est)


def test_solver_matches_enumeration():
    rng = random.Random(42)
    for _ in range(60):
        m, _ = small_random_model(rng)
        got = solve(m, gap=0.0)
        want = brute_force_optimum(m)
        assert got.objective_value == pytest.approx(want, abs=1e-9)
        assert got.solver_status == SolverStatus.OPTIMAL


def test_decision_structurally_feasible():
    rng = random.Random(7)
    for _ in range(30):
        m, _ = small_random_model(rng)
        d = solve(m, gap=0.0)
        for (i, j), kept in d.x.items():
            if kept:
                assert d.y[i] == 1
                assert d.u[j] == 1
        assert d.achieved_estimate_bytes <= m.capacity + 1e-9


def test_unconstrained_keeps_everything(lakes_metric):
    m, est = toy_model(lakes_metric, capacity=est_total(lakes_metric) + 100)
    d = solve(m, gap=0.0)
    assert all(v == 1 for v in d.y)
    assert all(d.u.values())
    assert all(d.x.values())


def est_total(t):
    return codec.estimate(t).total()


def test_objective_monotone_in_budget(lakes_metric):
    values = []
    for frac in (0.2, 0.4, 0.6, 0.8, 1.0):
        m, _ = toy_model(lakes_metric, capacity=frac * est_total(lakes_metric))
        values.append(solve(m, gap=0.0).objective_value)
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


def test_alpha_one_maximizes_footprint_mass(lakes_metric):
    # no kept/dropped swap may increase utility without growing bytes
    m, est = toy_model(lakes_metric, alpha=1.0, p=1.0,
                       capacity=0.6 * est_total(lakes_metric))
    d = solve(m, gap=0.0)
    fp = pixel_footprints(lakes_metric, GRID8)
    util = record_utility(fp, 1.0, 1.0)
    kept = [i for i in range(4) if d.y[i]]
    dropped = [i for i in range(4) if not d.y[i]]
    for a in kept:
        for b in dropped:
            if util[b] > util[a] + 1e-12 and est.geom_bytes[b] <= est.geom_bytes[a]:
                pytest.fail(f"swap {a}<->{b} improves footprint mass within budget")


def test_apply_table_assignment(lakes_metric):
    # budget: all geometry plus five of the eight cells
    est_obj = codec.estimate(lakes_metric)
    cap = sum(est_obj.geom_bytes) + 2 * est_obj.cell_cost(1) + 3 * est_obj.cell_cost(2) + 0.5
    m, _ = toy_model(lakes_metric, alpha=0.9, p=1.0, capacity=cap)
    d = solve(m, gap=0.0)
    assert d.y == (1, 1, 1, 1)
    assert d.u == {1: 1, 2: 1}
    assert d.kept_cells() == {(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)}
    out = apply(lakes_metric, d)
    assert [f[1] for f in out.features] == ["Azul", "Birch", NULL, NULL]
    assert [f[2] for f in out.features] == ["f", "f", "s", NULL]
    assert out.dropped == frozenset()


def test_apply_identity(lakes_metric):
    m, _ = toy_model(lakes_metric)
    d = solve(m, gap=0.0)
    out = apply(lakes_metric, d)
    assert out.features == lakes_metric.features


def test_apply_drops_record_physically(lakes_metric):
    m, _ = toy_model(lakes_metric)
    d = solve(m, gap=0.0)
    from dataclasses import replace
    d = replace(d, y=(1, 1, 1, 0),
                x={c: (0 if c[0] == 3 else kept) for c, kept in d.x.items()})
    out = apply(lakes_metric, d)
    assert out.size == 4 and out.dropped == {3}
    assert codec.decode(codec.encode(out)).size == 3
    assert tld(lakes_metric, out, TldParams(grid=GRID8)) > 0


def test_apply_dimension_mismatch(lakes_metric):
    m, _ = toy_model(lakes_metric)
    d = solve(m, gap=0.0)
    from dataclasses import replace
    with pytest.raises(ValueError):
        apply(lakes_metric, replace(d, y=(1, 1)))


def test_sparsify_tile_under_budget_is_identity(lakes_metric):
    out, d = sparsify_tile(lakes_metric, SparsifyParams(budget_bytes=10_000, grid=GRID8))
    assert out is lakes_metric
    assert all(v == 1 for v in d.y) and all(d.x.values())
    assert d.solver_status == SolverStatus.OPTIMAL


def test_sparsify_tile_reproduces_reference_distortion(lakes_metric):
    est = codec.estimate(lakes_metric)
    cap = sum(est.geom_bytes) + 2 * est.cell_cost(1) + 3 * est.cell_cost(2) + 0.5
    budget = int(cap + codec.fixed_overhead(lakes_metric))
    out, d = sparsify_tile(lakes_metric, SparsifyParams(
        budget_bytes=budget, grid=GRID8, gap=0.0, alpha=0.9, exponent_p=1.0))
    assert d.kept_cells() == {(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)}
    assert tld(lakes_metric, out, TldParams(grid=GRID8)) == pytest.approx(0.030989, abs=1e-5)
    assert codec.measure(out).total_bytes <= budget


def test_sparsify_tile_meets_budget_on_random_tiles():
    from tilereduce.synth import point_tile, polygon_tile
    rng = random.Random(1)
    for seed in range(10):
        t = polygon_tile(seed, n=30) if seed % 2 else point_tile(seed, n=40)
        raw = codec.measure(t).total_bytes
        budget = max(300, int(raw * rng.uniform(0.3, 0.8)))
        out, d = sparsify_tile(t, SparsifyParams(budget_bytes=budget, grid=PixelGrid(64)))
        assert codec.measure(out).total_bytes <= budget, seed
        assert d.solver_status in (SolverStatus.OPTIMAL, SolverStatus.GAP_REACHED)


def test_knapsack_dp_reference():
    assert knapsack_dp([2, 3, 4], [3, 4, 5], 5) == 7
    assert knapsack_dp([2, 3, 4], [3, 4, 5], 0) == 0
    assert knapsack_dp([2, 3, 4], [3, 4, 5], 9) == 12


def test_knapsack_oracle_reference_cases():
    assert knapsack_oracle_check([(2, 3), (3, 4), (4, 5)], 5)
    assert knapsack_oracle_check([(2, 3), (3, 4), (4, 5)], 100)  # keep all
    assert knapsack_oracle_check([(2, 3), (3, 4), (4, 5)], 0)  # keep none


def test_knapsack_oracle_random_instances():
    rng = random.Random(12)
    for _ in range(40):
        n = rng.randint(1, 10)
        values = rng.sample(range(1, 60), n)
        items = [(rng.randint(1, 15), v) for v in values]
        cap = rng.randint(0, sum(s for s, _ in items))
        assert knapsack_oracle_check(items, cap)


def test_lp_export(lakes_metric):
    m, _ = toy_model(lakes_metric, capacity=200.0)
    text = to_lp(m)
    assert text.startswith("Maximize")
    assert " size: " in text and "<= 200" in text
    assert "s_x_0_1_y: x_0_1 - y_0 <= 0" in text
    assert "s_x_0_1_u: x_0_1 - u_1 <= 0" in text
    assert text.rstrip().endswith("End")
    binaries = text.split("Binaries")[1]
    assert "y_0" in binaries and "x_3_2" in binaries


def test_solver_timeout_returns_incumbent():
    from tilereduce.synth import point_tile
    t = point_tile(3, n=400)
    est = codec.estimate(t)
    div = cell_divergence(t, PixelGrid(64))
    fp = pixel_footprints(t, PixelGrid(64))
    m = build_model(t, SparsifyParams(grid=PixelGrid(64)), div, est, fp,
                    capacity=0.5 * est.total())
    d = solve(m, gap=0.0, timeout=0.0)
    assert d.solver_status in (SolverStatus.TIMEOUT, SolverStatus.OPTIMAL)
    assert d.achieved_estimate_bytes <= m.capacity + 1e-9
