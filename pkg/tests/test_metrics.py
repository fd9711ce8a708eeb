import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tilereduce.metrics import (
    PixelDistribution,
    TldParams,
    cell_divergence,
    entropy,
    kld,
    smooth,
    tld,
    tld_weights,
    vad,
)
from tilereduce.model import NULL, nullify
from tilereduce.raster import PixelGrid, pixel_counts

GRID8 = PixelGrid(8)
PARAMS = TldParams(grid=GRID8)

# Frozen reference values for the four-lake tile (epsilon=1, R=64,
# delta=1e-9, gamma=1), independently recomputed from the pixel counts
# {18,14,8,4,20} and {32,12,20} before being pinned here.
NAME_PROBS_IN = (19 / 69, 15 / 69, 9 / 69, 5 / 69, 21 / 69)
NAME_PROBS_OUT = (19 / 69, 15 / 69, 1 / 69, 1 / 69, 33 / 69)
SAL_PROBS_IN = (33 / 67, 13 / 67, 21 / 67)
SAL_PROBS_OUT = (33 / 67, 9 / 67, 25 / 67)
H_NAME = 2.170965
H_SAL = 1.486845
VAD_NAME = 0.067751
VAD_SAL = 0.005812
W_NAME = 0.406485
W_SAL = 0.593515
TLD_REF = 0.030989


def reduced(lakes):
    return nullify(nullify(nullify(lakes, 2, 1), 3, 1), 3, 2)


def dist_pair(lakes, j):
    t_out = reduced(lakes)
    dom = lakes.domain(j)
    p = smooth(pixel_counts(lakes, j, GRID8), dom, 1.0, 64)
    q = smooth(pixel_counts(t_out, j, GRID8), dom, 1.0, 64)
    return p, q


def test_smoothed_probabilities(lakes_metric):
    p_name, q_name = dist_pair(lakes_metric, 1)
    assert np.allclose(p_name.probs, NAME_PROBS_IN, atol=1e-9)
    assert np.allclose(q_name.probs, NAME_PROBS_OUT, atol=1e-9)
    assert p_name.prob_of("Azul") == pytest.approx(0.275362, abs=1e-5)
    p_sal, q_sal = dist_pair(lakes_metric, 2)
    assert np.allclose(p_sal.probs, SAL_PROBS_IN, atol=1e-9)
    assert q_sal.prob_of("s") == pytest.approx(0.134328, abs=1e-5)
    assert q_sal.prob_of(NULL) == pytest.approx(0.373134, abs=1e-5)


def test_smooth_validation():
    with pytest.raises(ValueError):
        smooth({NULL: 64}, (NULL,), 0.0, 64)
    with pytest.raises(ValueError):
        smooth({NULL: 63}, (NULL,), 1.0, 64)
    with pytest.raises(ValueError):
        smooth({"x": 64}, (NULL,), 1.0, 64)


def test_smooth_large_epsilon_approaches_uniform():
    d = smooth({"a": 64, "b": 0}, ("a", "b"), 1e9, 64)
    assert np.allclose(d.probs, [0.5, 0.5], atol=1e-6)


def test_kld_identity_and_hand_value():
    p = PixelDistribution(("a", "b"), np.array([0.5, 0.5]), 1.0, 64)
    q = PixelDistribution(("a", "b"), np.array([0.25, 0.75]), 1.0, 64)
    assert kld(p, p) == 0.0
    want = 0.5 * math.log2(2.0) + 0.5 * math.log2(0.5 / 0.75)
    assert kld(p, q) == pytest.approx(want, abs=1e-12)
    assert kld(p, q) == pytest.approx(0.20752, abs=1e-5)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=2, max_size=6),
       st.lists(st.floats(0.01, 10.0), min_size=2, max_size=6))
def test_kld_nonnegative(ws, vs):
    n = min(len(ws), len(vs))
    support = tuple(range(n))
    a = np.array(ws[:n]) / sum(ws[:n])
    b = np.array(vs[:n]) / sum(vs[:n])
    p = PixelDistribution(support, a, 1.0, 64)
    q = PixelDistribution(support, b, 1.0, 64)
    assert kld(p, q) >= -1e-12


def test_kld_rejects_mismatched_support():
    p = PixelDistribution(("a", "b"), np.array([0.5, 0.5]), 1.0, 64)
    q = PixelDistribution(("a", "c"), np.array([0.5, 0.5]), 1.0, 64)
    with pytest.raises(ValueError):
        kld(p, q)


def test_vad_reference_values(lakes_metric):
    p, q = dist_pair(lakes_metric, 1)
    assert vad(p, q) == pytest.approx(VAD_NAME, abs=1e-5)
    p2, q2 = dist_pair(lakes_metric, 2)
    assert vad(p2, q2) == pytest.approx(VAD_SAL, abs=1e-5)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=2, max_size=8),
       st.lists(st.floats(0.01, 10.0), min_size=2, max_size=8))
def test_vad_symmetric_bounded(ws, vs):
    n = min(len(ws), len(vs))
    support = tuple(range(n))
    p = PixelDistribution(support, np.array(ws[:n]) / sum(ws[:n]), 1.0, 64)
    q = PixelDistribution(support, np.array(vs[:n]) / sum(vs[:n]), 1.0, 64)
    v1, v2 = vad(p, q), vad(q, p)
    assert v1 == pytest.approx(v2, abs=1e-12)
    assert 0.0 <= v1 <= 1.0
    assert vad(p, p) == 0.0


def test_entropy_reference_values(lakes_metric):
    p, _ = dist_pair(lakes_metric, 1)
    assert entropy(p) == pytest.approx(H_NAME, abs=1e-5)
    p2, _ = dist_pair(lakes_metric, 2)
    assert entropy(p2) == pytest.approx(H_SAL, abs=1e-5)


def test_entropy_uniform_exact():
    p = PixelDistribution(tuple("abcd"), np.full(4, 0.25), 1.0, 64)
    assert entropy(p) == pytest.approx(2.0, abs=1e-12)
    assert entropy(p) <= math.log2(4) + 1e-12


def test_tld_reference(lakes_metric):
    out = reduced(lakes_metric)
    assert tld(lakes_metric, out, PARAMS) == pytest.approx(TLD_REF, abs=1e-5)
    w = tld_weights(lakes_metric, PARAMS)
    assert w[0] == pytest.approx(W_NAME, abs=1e-5)
    assert w[1] == pytest.approx(W_SAL, abs=1e-5)
    assert w.sum() == pytest.approx(1.0, abs=1e-9)


def test_tld_identity_and_uniform_gamma(lakes_metric):
    assert tld(lakes_metric, lakes_metric, PARAMS) == 0.0
    w = tld_weights(lakes_metric, TldParams(grid=GRID8, gamma=0.0))
    assert np.allclose(w, [0.5, 0.5], atol=1e-12)


def test_tld_rejects_schema_mismatch(lakes_metric):
    import tilereduce.model as m
    sch = m.Schema(lakes_metric.schema.columns[:2] + (("other", m.AttributeType.STR),))
    mismatched = m.Tile(sch, lakes_metric.features)
    with pytest.raises(ValueError):
        tld(lakes_metric, mismatched, PARAMS)


def test_cell_divergence_reference_shape(lakes_metric):
    d = cell_divergence(lakes_metric, GRID8)
    # normalized per column: the largest-footprint cell pins 1.0
    assert d[0, 1] == 1.0 and d[0, 2] == 1.0
    # monotone in footprint within a column of distinct values
    assert d[0, 1] > d[1, 1] > d[2, 1] > d[3, 1] > 0
    assert (d[:, 0] == 0).all()
    assert ((d >= 0) & (d <= 1)).all()


def test_cell_divergence_zero_footprint_cell():
    from tilereduce.model import AttributeType, Geometry, GeometryKind, Schema, tile
    s = Schema((("geometry", AttributeType.GEOMETRY), ("v", AttributeType.STR)))
    t = tile(s, [
        (Geometry(GeometryKind.POINT, (2048.0, 2048.0)), "seen"),
        (Geometry(GeometryKind.POINT, (-999.0, -999.0)), "offgrid"),
    ])
    d = cell_divergence(t, GRID8)
    assert d[1, 1] == 0.0  # zero pixels moved, zero divergence
    assert d[0, 1] == 1.0


def test_cell_divergence_uniform_when_tied():
    from tilereduce.model import AttributeType, Geometry, GeometryKind, Schema, tile
    s = Schema((("geometry", AttributeType.GEOMETRY), ("v", AttributeType.STR)))
    t = tile(s, [
        (Geometry(GeometryKind.POINT, (-1.0, -1.0)), "a"),
        (Geometry(GeometryKind.POINT, (-2.0, -2.0)), "b"),
    ])
    d = cell_divergence(t, GRID8)
    assert d[0, 1] == 1.0 and d[1, 1] == 1.0  # all-zero column ties to 1


def test_vad_mass_monotone_in_footprint(lakes_metric):
    # nullifying the bigger lake's name always moves the distribution more
    dom = lakes_metric.domain(1)
    base = smooth(pixel_counts(lakes_metric, 1, GRID8), dom, 1.0, 64)
    vads = []
    for i in range(4):
        out = nullify(lakes_metric, i, 1)
        q = smooth(pixel_counts(out, 1, GRID8), dom, 1.0, 64)
        vads.append(vad(base, q))
    assert vads[0] > vads[1] > vads[2] > vads[3]


def test_dropped_row_contributes_null(lakes_metric):
    from dataclasses import replace
    dropped = replace(lakes_metric, dropped=frozenset({0}))
    counts = pixel_counts(dropped, 1, GRID8)
    assert counts.get("Azul", 0) == 0 and counts[NULL] == 38
    # TLD of a dropped row equals TLD of the same row fully nulled
    nulled = nullify(nullify(lakes_metric, 0, 1), 0, 2)
    assert tld(lakes_metric, dropped, PARAMS) == pytest.approx(
        tld(lakes_metric, nulled, PARAMS), abs=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        TldParams(epsilon=0.0)
    with pytest.raises(ValueError):
        TldParams(gamma=-1.0)
