"""Correlate the style-free distortion metric with image error metrics.

Builds a small corpus of dense polygon tiles, reduces each at a cycling
budget, renders baseline/reduced pairs under categorical and gradient
styles, and reports Spearman correlations of tile distortion against
RMSE, PSNR, and SSIM.

Run:  python demos/04_quality_report.py
"""

import tempfile
from pathlib import Path

from tilereduce import codec
from tilereduce.pipeline import Tileset
from tilereduce.quality import StyleSpec, evaluate
from tilereduce.raster import PixelGrid
from tilereduce.sparsify import SparsifyParams, sparsify_tile
from tilereduce.synth import polygon_tile

workdir = Path(tempfile.mkdtemp(prefix="tilereduce_quality_"))
grid = PixelGrid(128)

base = Tileset.create(workdir / "base", {"layer": "demo", "tile_status": []})
red = Tileset.create(workdir / "red", {"layer": "demo", "tile_status": []})

budgets = (2500, 4000, 6500, 10000)
for k in range(12):
    t = polygon_tile(seed=100 + k, n=80)
    x, y = k % 8, (3 * k + 1) % 8
    data = codec.encode(t)
    out, _ = sparsify_tile(t, SparsifyParams(budget_bytes=budgets[k % 4], grid=grid))
    rdata = codec.encode(out)
    for ts, blob in ((base, data), (red, rdata)):
        ts.write_tile(3, x, y, blob)
        ts.metadata["tile_status"].append({
            "z": 3, "x": x, "y": y, "bytes": len(blob),
            "solver_status": "optimal", "over_budget": False,
        })
base.flush_metadata()
red.flush_metadata()

styles = [
    StyleSpec("categorical", "zone"),
    StyleSpec("gradient", "score", palette=("#14146e", "#ff5a00")),
]
report = evaluate(base, red, styles, grid)

print(f"{'tile':>8} {'style':>12} {'bytes':>13} {'tld':>8} {'rmse':>8} {'ssim':>7}")
for row in report.rows:
    print(f"{row['x']},{row['y']:>3} {row['style']:>12} "
          f"{row['bytes_in']:>6}->{row['bytes_out']:<6} "
          f"{row['tld']:>8.5f} {row['rmse']:>8.3f} {row['ssim']:>7.4f}")

print("\ncorrelations over all (tile, style) rows:")
for key in ("spearman_tld_rmse", "spearman_tld_psnr", "spearman_tld_ssim"):
    print(f"  {key}: {report.aggregates[key]:+.4f}")

report.write_csv(workdir / "report.csv")
report.write_json(workdir / "report.json")
print(f"\nreport written under {workdir}")
