"""Command-line entry points and the read-only tile HTTP server.

Subcommands: ``build`` (pyramid from a feature file), ``reduce`` (triage +
sparsify one encoded tile), ``stats`` (per-zoom size table), ``eval``
(baseline/reduced quality report), ``serve`` (z/x/y endpoint plus viewer
assets). Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import re
import sys
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import codec
from .pipeline import PipelineConfig, Tileset, build
from .quality import evaluate, load_styles
from .raster import PixelGrid
from .sparsify import sparsify_tile
from .triage import TriageConfig, triage

log = logging.getLogger("tilereduce")

_UNITS = {"B": 1, "KB": 1024, "MB": 1024 ** 2, "GB": 1024 ** 3}


def parse_bytes(text: str) -> int:
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*([KMG]?B)?\s*", text, re.IGNORECASE)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse byte size {text!r}")
    scale = _UNITS[(m.group(2) or "B").upper()]
    return int(float(m.group(1)) * scale)


def parse_zooms(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text.strip())
    if m:
        return int(m.group(1)), int(m.group(2))
    m = re.fullmatch(r"(\d+)", text.strip())
    if m:
        z = int(m.group(1))
        return z, z
    raise argparse.ArgumentTypeError(f"cannot parse zoom range {text!r} (want e.g. 0..8)")


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit((self.prog + ": " + message, 1))


def _build_parser() -> _Parser:
    p = _Parser(prog="tilereduce", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a tile pyramid from features")
    b.add_argument("-i", "--input", required=True)
    b.add_argument("-o", "--output", required=True)
    b.add_argument("--config", help="JSON config file (flags override it)")
    b.add_argument("--budget", type=parse_bytes)
    b.add_argument("--zooms", type=parse_zooms)
    b.add_argument("--layer")
    b.add_argument("--workers", type=int)
    b.add_argument("--alpha", type=float)
    b.add_argument("--capacity", type=int, help="triage cell capacity")
    b.add_argument("--seed", type=int)
    b.add_argument("--format", choices=["geojsonl", "csv"])

    r = sub.add_parser("reduce", help="reduce a single encoded tile")
    r.add_argument("-t", "--tile", required=True)
    r.add_argument("--budget", type=parse_bytes, required=True)
    r.add_argument("--out")
    r.add_argument("--alpha", type=float, default=0.5)

    s = sub.add_parser("stats", help="per-zoom tile size table")
    s.add_argument("tileset")

    e = sub.add_parser("eval", help="quality report for baseline vs reduced")
    e.add_argument("-b", "--baseline", required=True)
    e.add_argument("-r", "--reduced", required=True)
    e.add_argument("-s", "--styles", required=True)
    e.add_argument("--out", default="quality_report")
    e.add_argument("--max-tiles", type=int)

    v = sub.add_parser("serve", help="serve tilesets and the viewer")
    v.add_argument("tilesets", nargs="+",
                   help="tileset dirs, optionally as name=path")
    v.add_argument("--port", type=int, default=8787)
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--viewer-dir", help="static assets directory for /")
    return p


def _cmd_build(args) -> int:
    cfg = PipelineConfig()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = PipelineConfig.from_dict(json.load(fh))
    updates = {}
    if args.budget is not None:
        updates["budget_bytes"] = args.budget
    if args.zooms is not None:
        updates["zoom_min"], updates["zoom_max"] = args.zooms
    if args.layer is not None:
        updates["layer_name"] = args.layer
    if args.workers is not None:
        updates["worker_count"] = args.workers
    if args.format is not None:
        updates["input_format"] = args.format
    if updates:
        cfg = replace(cfg, **updates)
    tri, spa = cfg.triage, cfg.sparsify
    if args.capacity is not None:
        tri = replace(tri, capacity_value=args.capacity)
    if args.seed is not None:
        tri = replace(tri, seed=args.seed)
    if args.alpha is not None:
        spa = replace(spa, alpha=args.alpha)
    cfg = replace(cfg, triage=tri, sparsify=spa)
    ts = build(args.input, cfg, args.output)
    emitted = len(ts.metadata["tile_status"])
    over = sum(1 for row in ts.metadata["tile_status"] if row["over_budget"])
    print(f"wrote {emitted} tiles to {args.output} "
          f"({over} over budget, {ts.metadata['skipped_records']} records skipped)")
    return 0


def _cmd_reduce(args) -> int:
    data = Path(args.tile).read_bytes()
    t, layer_name, extent = codec.decode_info(data)
    grid = PixelGrid()
    t2 = triage(t, TriageConfig(), args.budget, grid, extent)
    measured = codec.measure(t2, extent, layer_name).total_bytes
    status = "optimal"
    if measured > args.budget:
        from .sparsify import SparsifyParams
        t2, decision = sparsify_tile(t2, SparsifyParams(
            budget_bytes=args.budget, alpha=args.alpha, grid=grid, extent=extent))
        status = decision.solver_status.value
    out = Path(args.out) if args.out else Path(args.tile).with_suffix(".reduced.mvt")
    encoded = codec.encode(t2, extent, layer_name)
    out.write_bytes(encoded)
    print(f"{len(data)} -> {len(encoded)} bytes (budget {args.budget}, {status}) -> {out}")
    return 0 if len(encoded) <= args.budget else 2


def _cmd_stats(args) -> int:
    ts = Tileset(args.tileset)
    budget = ts.metadata.get("budget_bytes")
    per_zoom: dict[int, list[int]] = {}
    for row in ts.metadata["tile_status"]:
        per_zoom.setdefault(row["z"], []).append(row["bytes"])
    print(f"{'zoom':>4} {'tiles':>6} {'min':>9} {'mean':>9} {'max':>9} {'over':>5}")
    for z in sorted(per_zoom):
        sizes = per_zoom[z]
        over = sum(1 for s in sizes if budget and s > budget)
        print(f"{z:>4} {len(sizes):>6} {min(sizes):>9} "
              f"{sum(sizes) // len(sizes):>9} {max(sizes):>9} {over:>5}")
    return 0


def _cmd_eval(args) -> int:
    baseline = Tileset(args.baseline)
    reduced = Tileset(args.reduced)
    styles = load_styles(args.styles)
    report = evaluate(baseline, reduced, styles, max_tiles=args.max_tiles)
    csv_path = Path(str(args.out) + ".csv")
    json_path = Path(str(args.out) + ".json")
    report.write_csv(csv_path)
    report.write_json(json_path)
    agg = report.aggregates
    for key in ("spearman_tld_rmse", "spearman_tld_psnr", "spearman_tld_ssim"):
        print(f"{key}: {agg.get(key)}")
    print(f"rows: {agg['rows']} skipped: {agg['skipped']} -> {csv_path}, {json_path}")
    return 0


# --------------------------------------------------------------------------
# HTTP server
# --------------------------------------------------------------------------

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>tilereduce</title></head>
<body><h1>tilereduce tile server</h1>
<p>No viewer assets are installed. Endpoints:</p>
<ul><li>GET /tiles/{name}/{z}/{x}/{y}.mvt</li>
<li>GET /metadata/{name}</li></ul>
<p>Tilesets: %s</p></body></html>
"""

_MIME = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".map": "application/json",
}


class TileRequestHandler(BaseHTTPRequestHandler):
    server_version = "tilereduce/0.1"
    tiles: dict[str, dict[tuple[int, int, int], bytes]] = {}
    metadata: dict[str, dict] = {}
    viewer_dir: Path | None = None

    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _headers(self, code: int, ctype: str | None = None, body: bytes | None = None):
        self.send_response(code)
        self.send_header("Access-Control-Allow-Origin", "*")
        if ctype:
            self.send_header("Content-Type", ctype)
        if body is not None:
            self.send_header("Content-Length", str(len(body)))
            self.send_header("ETag", '"%s"' % hashlib.md5(body).hexdigest())
        self.end_headers()

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, OPTIONS")
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        m = re.fullmatch(r"/tiles/([^/]+)/(-?\d+)/(-?\d+)/(-?\d+)\.mvt", path)
        if m:
            return self._tile(m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4)))
        if path.startswith("/tiles/"):
            return self._error(400, "malformed tile path")
        m = re.fullmatch(r"/metadata/([^/]+)", path)
        if m:
            return self._metadata(m.group(1))
        return self._static(path)

    def _error(self, code: int, message: str):
        body = json.dumps({"error": message}).encode()
        self._headers(code, "application/json", body)
        self.wfile.write(body)

    def _tile(self, name: str, z: int, x: int, y: int):
        store = self.tiles.get(name)
        if store is None:
            return self._error(400, f"unknown tileset {name!r}")
        if z < 0 or x < 0 or y < 0 or x >= (1 << z) or y >= (1 << z):
            return self._error(400, "tile coordinates out of range")
        data = store.get((z, x, y))
        if data is None:
            return self._headers(204)
        self._headers(200, "application/vnd.mapbox-vector-tile", data)
        self.wfile.write(data)

    def _metadata(self, name: str):
        meta = self.metadata.get(name)
        if meta is None:
            return self._error(400, f"unknown tileset {name!r}")
        body = json.dumps(meta).encode()
        self._headers(200, "application/json", body)
        self.wfile.write(body)

    def _static(self, path: str):
        if path in ("", "/"):
            path = "/index.html"
        if self.viewer_dir is not None:
            target = (self.viewer_dir / path.lstrip("/")).resolve()
            if not str(target).startswith(str(self.viewer_dir.resolve())):
                return self._error(400, "bad path")
            if target.is_file():
                body = target.read_bytes()
                ctype = _MIME.get(target.suffix.lower(), "application/octet-stream")
                self._headers(200, ctype, body)
                self.wfile.write(body)
                return
        if path == "/index.html":
            body = (_FALLBACK_PAGE % ", ".join(sorted(self.tiles))).encode()
            self._headers(200, "text/html; charset=utf-8", body)
            self.wfile.write(body)
            return
        self._error(404, "not found")


def make_server(tilesets: dict[str, str | Path], host: str = "127.0.0.1",
                port: int = 8787, viewer_dir: str | Path | None = None) -> ThreadingHTTPServer:
    """Load tilesets into memory and return a ready (unstarted) HTTP server.

    Tiles are served byte-identical to what was loaded; the server never
    re-encodes and has no write endpoints.
    """
    handler = type("BoundHandler", (TileRequestHandler,), {})
    handler.tiles = {}
    handler.metadata = {}
    for name, root in tilesets.items():
        ts = Tileset(root)
        store: dict[tuple[int, int, int], bytes] = {}
        for tc in ts.coords():
            data = ts.read_tile(tc.z, tc.x, tc.y)
            if data is not None:
                store[(tc.z, tc.x, tc.y)] = data
        handler.tiles[name] = store
        handler.metadata[name] = ts.metadata
    handler.viewer_dir = Path(viewer_dir) if viewer_dir else None
    return ThreadingHTTPServer((host, port), handler)


def _default_viewer_dir() -> Path | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


def _cmd_serve(args) -> int:
    named = {}
    for item in args.tilesets:
        if "=" in item:
            name, root = item.split("=", 1)
        else:
            name, root = Path(item).name, item
        named[name] = root
    viewer = args.viewer_dir or _default_viewer_dir()
    server = make_server(named, args.host, args.port, viewer)
    port = server.server_address[1]
    print(f"serving {', '.join(sorted(named))} on http://{args.host}:{port}/ "
          f"(viewer: {viewer or 'fallback page'})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


_COMMANDS = {
    "build": _cmd_build,
    "reduce": _cmd_reduce,
    "stats": _cmd_stats,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("TILEREDUCE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, tuple):
            print(exc.code[0], file=sys.stderr)
            return 1
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
