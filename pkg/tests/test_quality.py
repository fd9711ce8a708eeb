import math
import random

import numpy as np
import pytest

from tilereduce import codec
from tilereduce.model import NULL, AttributeType, Geometry, GeometryKind, Schema, nullify, tile
from tilereduce.quality import (
    SSIM_C1,
    StyleSpec,
    evaluate,
    freeze_style,
    load_styles,
    mse,
    psnr,
    render,
    rmse,
    spearman,
    ssim,
    write_png,
)
from tilereduce.raster import PixelGrid

GRID8 = PixelGrid(8)


def full_cover_tile(value="x"):
    ring = ((0.0, 0.0), (4096.0, 0.0), (4096.0, 4096.0), (0.0, 4096.0), (0.0, 0.0))
    s = Schema((("geometry", AttributeType.GEOMETRY), ("v", AttributeType.STR)))
    return tile(s, [(Geometry(GeometryKind.POLYGON, (ring,)), value)])


# --------------------------------------------------------------------------
# render
# --------------------------------------------------------------------------

def test_render_full_cover_solid():
    t = full_cover_tile()
    style = StyleSpec("categorical", "v", palette=("#102030",))
    img = render(t, style, GRID8)
    assert img.shape == (8, 8, 3)
    assert (img == (0x10, 0x20, 0x30)).all()


def test_render_empty_background():
    s = Schema((("geometry", AttributeType.GEOMETRY), ("v", AttributeType.STR)))
    img = render(tile(s, []), StyleSpec("categorical", "v"), GRID8)
    assert (img == 255).all()


def test_render_null_color(lakes_metric):
    t = nullify(lakes_metric, 0, 1)
    style = StyleSpec("categorical", "name", null_color="#400040")
    img = render(t, style, GRID8).reshape(64, 3)
    assert (img[0] == (0x40, 0x00, 0x40)).all()  # Azul pixels now null


def test_render_deterministic(lakes_metric):
    style = StyleSpec("categorical", "salinity")
    a = render(lakes_metric, style, GRID8)
    b = render(lakes_metric, style, GRID8)
    assert (a == b).all()


def test_render_gradient_endpoints():
    s = Schema((("geometry", AttributeType.GEOMETRY), ("v", AttributeType.INT)))
    half = 2048.0
    left = ((0.0, 0.0), (half, 0.0), (half, 4096.0), (0.0, 4096.0), (0.0, 0.0))
    right = ((half, 0.0), (4096.0, 0.0), (4096.0, 4096.0), (half, 4096.0), (half, 0.0))
    t = tile(s, [
        (Geometry(GeometryKind.POLYGON, (left,)), 0),
        (Geometry(GeometryKind.POLYGON, (right,)), 10),
    ])
    style = freeze_style(StyleSpec("gradient", "v", palette=("#000000", "#ffffff")), t)
    assert style.domain == (0.0, 10.0)
    img = render(t, style, GRID8)
    assert (img[0, 0] == (0, 0, 0)).all()
    assert (img[0, 7] == (255, 255, 255)).all()


def test_render_missing_attribute(lakes_metric):
    with pytest.raises(KeyError):
        render(lakes_metric, StyleSpec("categorical", "absent"), GRID8)


def test_freeze_style_pins_categories(lakes_metric):
    style = freeze_style(StyleSpec("categorical", "name"), lakes_metric)
    assert style.categories == ("Azul", "Birch", "Cobalt", "Dune")
    # a reduced tile renders surviving values with identical colors
    reduced = nullify(lakes_metric, 0, 1)
    a = render(lakes_metric, style, GRID8)
    b = render(reduced, style, GRID8)
    changed = (a != b).any(axis=2)
    assert changed.sum() == 18  # only the nulled lake's pixels moved


# --------------------------------------------------------------------------
# image metrics
# --------------------------------------------------------------------------

def test_rmse_identity_and_extremes():
    a = np.zeros((8, 8, 3), np.uint8)
    b = np.full((8, 8, 3), 255, np.uint8)
    assert rmse(a, a) == 0.0
    assert rmse(a, b) == 255.0


def test_rmse_matches_double_loop_oracle():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 256, (9, 7, 3)).astype(np.uint8)
    b = rng.integers(0, 256, (9, 7, 3)).astype(np.uint8)
    total = 0.0
    for u in range(9):
        for v in range(7):
            for c in range(3):
                total += (float(a[u, v, c]) - float(b[u, v, c])) ** 2
    assert rmse(a, b) == pytest.approx(math.sqrt(total / (3 * 9 * 7)), abs=1e-9)
    assert rmse(a, b) ** 2 * 3 * 9 * 7 == pytest.approx(total, abs=1e-6)


def test_rmse_dimension_mismatch():
    with pytest.raises(ValueError):
        rmse(np.zeros((4, 4, 3)), np.zeros((5, 4, 3)))


def test_psnr_cases():
    a = np.zeros((8, 8, 3), np.uint8)
    assert psnr(a, a) == math.inf
    b = np.full((8, 8, 3), 255, np.uint8)
    assert psnr(a, b) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(2)
    x = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
    y = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
    want = 20 * math.log10(255) - 10 * math.log10(mse(x, y))
    assert psnr(x, y) == pytest.approx(want, abs=1e-9)


def test_psnr_decreasing_in_mse():
    base = np.zeros((8, 8, 3), np.uint8)
    vals = [psnr(base, np.full((8, 8, 3), v, np.uint8)) for v in (10, 50, 150)]
    assert vals[0] > vals[1] > vals[2]


def test_ssim_identity_symmetry():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 256, (16, 16, 3)).astype(np.uint8)
    b = rng.integers(0, 256, (16, 16, 3)).astype(np.uint8)
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
    assert -1.0 <= ssim(a, b) <= 1.0


def test_ssim_constant_images_closed_form():
    a = np.full((12, 12, 3), 90, np.uint8)
    b = np.full((12, 12, 3), 140, np.uint8)
    want = (2 * 90.0 * 140.0 + SSIM_C1) / (90.0 ** 2 + 140.0 ** 2 + SSIM_C1)
    assert ssim(a, b) == pytest.approx(want, abs=1e-12)
    assert ssim(a, b) < 1.0


def test_ssim_too_small():
    with pytest.raises(ValueError):
        ssim(np.zeros((5, 5, 3)), np.zeros((5, 5, 3)))


def test_spearman_reference():
    assert spearman([1, 2, 3, 4], [2, 4, 6, 8]) == pytest.approx(1.0)
    assert spearman([1, 2, 3, 4], [8, 6, 4, 2]) == pytest.approx(-1.0)
    # hand fixture with a tie: ranks x = 1..6; ranks y with 2.5 pair
    xs = [10, 20, 30, 40, 50, 60]
    ys = [1, 3, 3, 7, 9, 20]
    # rank(ys) = 1, 2.5, 2.5, 4, 5, 6 -> hand Pearson over ranks:
    rx = np.array([1, 2, 3, 4, 5, 6], float)
    ry = np.array([1, 2.5, 2.5, 4, 5, 6], float)
    want = float(np.corrcoef(rx, ry)[0, 1])
    assert spearman(xs, ys) == pytest.approx(want, abs=1e-12)


def test_spearman_undefined_and_errors():
    assert spearman([1, 1, 1], [1, 2, 3]) is None
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2])
    with pytest.raises(ValueError):
        spearman([1, 2, 3], [1, 2])


def test_spearman_handles_infinities():
    assert spearman([1, 2, 3, 4], [0.1, 5.0, 77.0, math.inf]) == pytest.approx(1.0)


# --------------------------------------------------------------------------
# evaluation end to end
# --------------------------------------------------------------------------

def synth_tileset_pair(tmp, n_tiles=8, seed0=40, budgets=(2000, 3000, 4500, 7000)):
    """Baseline tileset of dense synthetic polygon tiles plus a reduced twin
    sparsified at cycling budgets (no pipeline in the loop)."""
    from tilereduce.pipeline import Tileset
    from tilereduce.sparsify import SparsifyParams, sparsify_tile
    from tilereduce.synth import polygon_tile

    grid = PixelGrid(64)
    base = Tileset.create(tmp / "base", {"layer": "t", "budget_bytes": 1 << 22,
                                         "tile_status": []})
    red = Tileset.create(tmp / "red", {"layer": "t", "budget_bytes": max(budgets),
                                       "tile_status": []})
    side = 1 << 3
    for k in range(n_tiles):
        t = polygon_tile(seed0 + k, n=60)
        x, y = k % side, (k * 3 + 1) % side
        data = codec.encode(t)
        base.write_tile(3, x, y, data)
        base.metadata["tile_status"].append({"z": 3, "x": x, "y": y,
                                             "bytes": len(data),
                                             "solver_status": "optimal",
                                             "over_budget": False})
        budget = budgets[k % len(budgets)]
        out, _ = sparsify_tile(t, SparsifyParams(budget_bytes=budget, grid=grid))
        rdata = codec.encode(out)
        red.write_tile(3, x, y, rdata)
        red.metadata["tile_status"].append({"z": 3, "x": x, "y": y,
                                            "bytes": len(rdata),
                                            "solver_status": "optimal",
                                            "over_budget": False})
    base.flush_metadata()
    red.flush_metadata()
    return base, red


@pytest.fixture(scope="module")
def eval_pair(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("eval")
    return synth_tileset_pair(tmp)


def test_evaluate_identity_is_zero(eval_pair):
    base, _ = eval_pair
    styles = [StyleSpec("categorical", "zone")]
    report = evaluate(base, base, styles, PixelGrid(64))
    assert report.rows
    for row in report.rows:
        assert row["rmse"] == 0.0
        assert row["psnr"] == math.inf
        assert row["ssim"] == pytest.approx(1.0, abs=1e-12)
        assert row["tld"] == pytest.approx(0.0, abs=1e-12)


def test_evaluate_reduced_correlations(eval_pair):
    base, red = eval_pair
    styles = [StyleSpec("categorical", "zone"),
              StyleSpec("gradient", "score", palette=("#0000ff", "#ff0000"))]
    report = evaluate(base, red, styles, PixelGrid(64))
    assert report.aggregates["rows"] == len(report.rows) >= 8
    assert report.aggregates["spearman_tld_rmse"] > 0.5
    assert report.aggregates["spearman_tld_ssim"] < -0.5
    for row in report.rows:
        assert row["bytes_out"] <= row["bytes_in"]


def test_report_serialization(tmp_path, eval_pair):
    base, red = eval_pair
    report = evaluate(base, red, [StyleSpec("categorical", "zone")], PixelGrid(32))
    report.write_csv(tmp_path / "r.csv")
    report.write_json(tmp_path / "r.json")
    header = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert header.split(",")[:4] == ["z", "x", "y", "style"]
    import json as j
    agg = j.loads((tmp_path / "r.json").read_text())
    assert "per_zoom" in agg


def test_styles_json_roundtrip(tmp_path):
    s = StyleSpec("gradient", "score", palette=("#001020", "#a0b0c0"),
                  domain=(0.0, 10.0))
    import json as j
    (tmp_path / "s.json").write_text(j.dumps([s.to_dict()]))
    loaded = load_styles(tmp_path / "s.json")
    assert loaded == [s]


def test_write_png(tmp_path):
    img = np.zeros((4, 4, 3), np.uint8)
    img[0, 0] = (255, 0, 0)
    write_png(img, tmp_path / "t.png")
    data = (tmp_path / "t.png").read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert b"IHDR" in data and b"IEND" in data
