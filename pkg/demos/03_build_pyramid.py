"""Build a full tile pyramid from synthetic clustered points.

Generates a GeoJSONL file, runs the build at a small per-tile budget, and
prints the per-zoom size table. The output directory is directly servable:

    tilereduce serve demo_tiles --port 8787

Run:  python demos/03_build_pyramid.py [feature_count]
"""

import sys
import tempfile
import time
from pathlib import Path

from tilereduce.cli import main as cli
from tilereduce.pipeline import PipelineConfig, Tileset, build
from tilereduce.synth import clustered_points_geojsonl

n = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
workdir = Path(tempfile.mkdtemp(prefix="tilereduce_demo_"))
src = clustered_points_geojsonl(workdir / "points.geojsonl", seed=1, n=n, clusters=25)
print(f"wrote {n} synthetic features to {src}")

cfg = PipelineConfig(zoom_min=0, zoom_max=6, budget_bytes=16 * 1024)
t0 = time.time()
ts = build(src, cfg, workdir / "tiles")
dt = time.time() - t0

rows = ts.metadata["tile_status"]
print(f"built {len(rows)} tiles in {dt:.1f}s "
      f"({sum(r['bytes'] for r in rows) // 1024} KB total)")
over = [r for r in rows if r["over_budget"]]
print(f"tiles over the {cfg.budget_bytes // 1024} KB budget: {len(over)}")

cli(["stats", str(workdir / "tiles")])
print(f"\nserve it:  tilereduce serve {workdir / 'tiles'} --port 8787")
