"""Reduce one dense synthetic tile across a sweep of byte budgets.

Shows the sparsifier's budget/fidelity trade-off on a single tile: encoded
size, solver status, distortion, and which kinds of content were dropped.
Optionally writes before/after PNG renders next to this script.

Run:  python demos/02_sparsify_one_tile.py [--png]
"""

import sys
from pathlib import Path

from tilereduce import codec
from tilereduce.metrics import TldParams, tld
from tilereduce.model import NULL
from tilereduce.quality import StyleSpec, conform_pair, freeze_style, render, rmse, write_png
from tilereduce.raster import PixelGrid
from tilereduce.sparsify import SparsifyParams, sparsify_tile
from tilereduce.synth import polygon_tile

grid = PixelGrid(256)
t = polygon_tile(seed=7, n=400)
raw = codec.measure(t).total_bytes
print(f"input tile: {t.size} polygons, {raw} bytes")

style = freeze_style(StyleSpec("categorical", "zone"), t)
baseline_img = render(t, style, grid)
if "--png" in sys.argv:
    write_png(baseline_img, Path(__file__).with_name("tile_baseline.png"))

print(f"\n{'budget':>8} {'bytes':>7} {'rows':>5} {'cells kept':>10} "
      f"{'tld':>8} {'rmse':>7} {'status':>12}")
for budget in (raw // 2, raw // 4, raw // 8, raw // 16, raw // 32):
    params = SparsifyParams(budget_bytes=budget, grid=grid)
    out, decision = sparsify_tile(t, params)
    kept_rows = sum(decision.y)
    kept_cells = sum(decision.x.values())
    measured = codec.measure(out).total_bytes
    d = tld(t, out, TldParams(grid=grid))
    _, client = conform_pair(t, codec.decode(codec.encode(out)))
    img = render(client, style, grid)  # what a map client would show
    print(f"{budget:>8} {measured:>7} {kept_rows:>5} {kept_cells:>10} "
          f"{d:>8.5f} {rmse(baseline_img, img):>7.2f} "
          f"{decision.solver_status.value:>12}")
    if "--png" in sys.argv:
        write_png(img, Path(__file__).with_name(f"tile_b{budget}.png"))

out, decision = sparsify_tile(t, SparsifyParams(budget_bytes=raw // 8, grid=grid))
nulled = sum(1 for f in out.features for j in (1, 2, 3) if f[j] is NULL)
print(f"\nat an eighth of the raw size: {sum(decision.y)} of {t.size} rows kept, "
      f"{nulled} attribute cells nulled")
if "--png" in sys.argv:
    print("PNG renders written next to this script")
