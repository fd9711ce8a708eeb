"""Styled rendering and image-quality evaluation.

Tiles are rendered deterministically through the internal rasterizer (no
anti-aliasing, painter's order) so that baseline/reduced image pairs differ
only by what the reduction removed. Error metrics are the usual RMSE, PSNR
(255 peak), and box-window SSIM; rank correlation against the style-free
tile distortion metric ties the two worlds together.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import codec
from .metrics import TldParams, tld
from .model import NULL, AttributeType, Feature, Schema, Tile, widen
from .pipeline import Tileset
from .raster import DEFAULT_EXTENT, PixelGrid, paint_index_image

Color = tuple[int, int, int]

# 12 high-contrast categorical colors, cycled by value rank.
DEFAULT_PALETTE: tuple[Color, ...] = (
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127),
    (188, 189, 34), (23, 190, 207), (174, 199, 232), (255, 187, 120),
)
DEFAULT_NULL_COLOR: Color = (64, 64, 64)
DEFAULT_BACKGROUND: Color = (255, 255, 255)


def _parse_color(c) -> Color:
    if isinstance(c, str):
        s = c.lstrip("#")
        if len(s) != 6:
            raise ValueError(f"bad hex color {c!r}")
        return tuple(int(s[k:k + 2], 16) for k in (0, 2, 4))  # type: ignore[return-value]
    r, g, b = c
    return int(r), int(g), int(b)


def _hex(c: Color) -> str:
    return "#%02x%02x%02x" % c


@dataclass(frozen=True)
class StyleSpec:
    """A client-side style: categorical palette or two-color gradient ramp.

    ``categories`` and ``domain`` freeze the value-to-color assignment from
    a baseline tile, so a reduced tile renders with identical colors. The
    JSON form of this object is shared verbatim with the viewer and the
    eval command.
    """

    mode: str  # "categorical" | "gradient"
    attribute: str
    palette: tuple[Color, ...] = DEFAULT_PALETTE
    null_color: Color = DEFAULT_NULL_COLOR
    background_color: Color = DEFAULT_BACKGROUND
    categories: tuple | None = None
    domain: tuple[float, float] | None = None

    def __post_init__(self):
        if self.mode not in ("categorical", "gradient"):
            raise ValueError(f"unknown style mode {self.mode!r}")
        if not self.palette:
            raise ValueError("palette must not be empty")
        object.__setattr__(self, "palette", tuple(_parse_color(c) for c in self.palette))
        object.__setattr__(self, "null_color", _parse_color(self.null_color))
        object.__setattr__(self, "background_color", _parse_color(self.background_color))

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "attribute": self.attribute,
            "palette": [_hex(c) for c in self.palette],
            "null_color": _hex(self.null_color),
            "background_color": _hex(self.background_color),
        }
        if self.categories is not None:
            out["categories"] = list(self.categories)
        if self.domain is not None:
            out["domain"] = list(self.domain)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "StyleSpec":
        return cls(
            mode=d["mode"],
            attribute=d["attribute"],
            palette=tuple(d.get("palette", DEFAULT_PALETTE)),
            null_color=d.get("null_color", DEFAULT_NULL_COLOR),
            background_color=d.get("background_color", DEFAULT_BACKGROUND),
            categories=tuple(d["categories"]) if d.get("categories") is not None else None,
            domain=tuple(d["domain"]) if d.get("domain") is not None else None,
        )


def load_styles(path: str | Path) -> list[StyleSpec]:
    """Read one style or a list of styles from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    return [StyleSpec.from_dict(d) for d in data]


def freeze_style(style: StyleSpec, baseline: Tile) -> StyleSpec:
    """Pin categorical value order / gradient min-max from a baseline tile."""
    if style.attribute not in baseline.schema.names:
        raise KeyError(f"style attribute {style.attribute!r} not in tile schema")
    j = baseline.schema.index_of(style.attribute)
    if style.mode == "categorical":
        if style.categories is not None:
            return style
        order = [v for v in baseline.domain(j) if v is not NULL]
        return replace(style, categories=tuple(order))
    if style.domain is not None:
        return style
    nums = [float(f[j]) for f in baseline.features
            if f[j] is not NULL and not isinstance(f[j], str)]
    lo, hi = (min(nums), max(nums)) if nums else (0.0, 1.0)
    return replace(style, domain=(lo, hi))


def render(t: Tile, style: StyleSpec, grid: PixelGrid | None = None,
           extent: int = DEFAULT_EXTENT) -> np.ndarray:
    """Rasterize a tile under a style into an RGB uint8 image (side, side, 3)."""
    grid = grid or PixelGrid()
    if style.attribute not in t.schema.names:
        raise KeyError(f"style attribute {style.attribute!r} not in tile schema")
    j = t.schema.index_of(style.attribute)
    paint = paint_index_image(t, grid, extent)
    values = [NULL if i in t.dropped else f[j] for i, f in enumerate(t.features)]

    colors = np.empty((t.size + 1, 3), dtype=np.uint8)
    colors[0] = style.background_color
    if style.mode == "categorical":
        rank: dict = {}
        if style.categories:
            for v in style.categories:
                rank.setdefault(_cat_key(v), len(rank))
        for i, v in enumerate(values):
            if v is NULL:
                colors[i + 1] = style.null_color
                continue
            k = _cat_key(v)
            if k not in rank:
                rank[k] = len(rank)
            colors[i + 1] = style.palette[rank[k] % len(style.palette)]
    else:
        lo, hi = style.domain if style.domain else (0.0, 1.0)
        c0 = np.array(style.palette[0], dtype=np.float64)
        c1 = np.array(style.palette[1 % len(style.palette)], dtype=np.float64)
        span = hi - lo
        for i, v in enumerate(values):
            if v is NULL or isinstance(v, str):
                colors[i + 1] = style.null_color
                continue
            tt = 0.5 if span == 0 else min(1.0, max(0.0, (float(v) - lo) / span))
            colors[i + 1] = np.round(c0 + (c1 - c0) * tt).astype(np.uint8)
    img = colors[paint + 1]
    return img.reshape(grid.side, grid.side, 3)


def _cat_key(v):
    if isinstance(v, bool):
        return ("b", v)
    if isinstance(v, (int, float)):
        return ("n", float(v))
    return ("s", str(v))


# --------------------------------------------------------------------------
# image metrics
# --------------------------------------------------------------------------

def _check_pair(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")


def mse(a: np.ndarray, b: np.ndarray) -> float:
    _check_pair(a, b)
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(diff * diff))


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    return math.sqrt(mse(a, b))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    m = mse(a, b)
    if m == 0:
        return math.inf
    return 20.0 * math.log10(255.0) - 10.0 * math.log10(m)


SSIM_WINDOW = 7
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2


def _window_means(x: np.ndarray, w: int) -> np.ndarray:
    """Mean of every fully-contained w x w window (via integral image)."""
    s = np.cumsum(np.cumsum(x, axis=0), axis=1)
    s = np.pad(s, ((1, 0), (1, 0)))
    total = s[w:, w:] - s[:-w, w:] - s[w:, :-w] + s[:-w, :-w]
    return total / (w * w)


def ssim(a: np.ndarray, b: np.ndarray, window: int = SSIM_WINDOW) -> float:
    """Mean structural similarity over sliding box windows and channels.

    Uniform (unweighted) windows with population moments; the result lies
    in [-1, 1] and equals 1 exactly when the images are identical.
    """
    _check_pair(a, b)
    if a.shape[0] < window or a.shape[1] < window:
        raise ValueError(f"images smaller than the {window}x{window} SSIM window")
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    if af.ndim == 2:
        af = af[:, :, None]
        bf = bf[:, :, None]
    scores = []
    for c in range(af.shape[2]):
        x, y = af[:, :, c], bf[:, :, c]
        mx = _window_means(x, window)
        my = _window_means(y, window)
        mxx = _window_means(x * x, window)
        myy = _window_means(y * y, window)
        mxy = _window_means(x * y, window)
        vx = mxx - mx * mx
        vy = myy - my * my
        cov = mxy - mx * my
        s = ((2 * mx * my + SSIM_C1) * (2 * cov + SSIM_C2)) / (
            (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2))
        scores.append(float(np.mean(s)))
    return float(np.mean(scores))


def _ranks(xs) -> np.ndarray:
    """Average ranks (1-based); ties share the mean of their rank span."""
    xs = np.asarray(xs, dtype=np.float64)
    order = np.argsort(xs, kind="stable")
    ranks = np.empty(len(xs))
    k = 0
    while k < len(xs):
        m = k
        while m + 1 < len(xs) and xs[order[m + 1]] == xs[order[k]]:
            m += 1
        ranks[order[k:m + 1]] = (k + m) / 2.0 + 1.0
        k = m + 1
    return ranks


def spearman(xs, ys) -> float | None:
    """Spearman rank correlation; None when either side has zero variance."""
    if len(xs) != len(ys):
        raise ValueError("sequences differ in length")
    if len(xs) < 3:
        raise ValueError("need at least 3 observations")
    rx, ry = _ranks(xs), _ranks(ys)
    sx, sy = rx.std(), ry.std()
    if sx == 0 or sy == 0:
        return None
    return float(np.mean((rx - rx.mean()) * (ry - ry.mean())) / (sx * sy))


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

@dataclass
class QualityReport:
    rows: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    skipped: int = 0

    def finalize(self):
        per_zoom: dict[int, dict] = {}
        for row in self.rows:
            z = per_zoom.setdefault(row["z"], {
                "rows": 0, "rmse": 0.0, "ssim": 0.0, "tld": 0.0,
                "psnr": 0.0, "psnr_rows": 0,
            })
            z["rows"] += 1
            z["rmse"] += row["rmse"]
            z["ssim"] += row["ssim"]
            z["tld"] += row["tld"]
            if math.isfinite(row["psnr"]):
                z["psnr"] += row["psnr"]
                z["psnr_rows"] += 1
        zoom_means = {}
        for z, acc in sorted(per_zoom.items()):
            zoom_means[str(z)] = {
                "rows": acc["rows"],
                "mean_rmse": acc["rmse"] / acc["rows"],
                "mean_ssim": acc["ssim"] / acc["rows"],
                "mean_tld": acc["tld"] / acc["rows"],
                "mean_psnr": (acc["psnr"] / acc["psnr_rows"]) if acc["psnr_rows"] else None,
            }
        corr = {}
        if len(self.rows) >= 3:
            tlds = [r["tld"] for r in self.rows]
            corr = {
                "spearman_tld_rmse": spearman(tlds, [r["rmse"] for r in self.rows]),
                "spearman_tld_psnr": spearman(tlds, [r["psnr"] for r in self.rows]),
                "spearman_tld_ssim": spearman(tlds, [r["ssim"] for r in self.rows]),
            }
        self.aggregates = {"per_zoom": zoom_means, "skipped": self.skipped,
                           "rows": len(self.rows), **corr}
        return self

    def write_csv(self, path: str | Path):
        cols = ["z", "x", "y", "style", "attribute", "rmse", "psnr", "ssim",
                "tld", "bytes_in", "bytes_out"]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for row in self.rows:
                fh.write(",".join(str(row[c]) for c in cols) + "\n")

    def write_json(self, path: str | Path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.aggregates, fh, indent=2, sort_keys=True)
            fh.write("\n")


def conform_pair(a: Tile, b: Tile) -> tuple[Tile, Tile]:
    """Rebuild both tiles over a shared schema (a's column order; types
    widened across both; columns missing from b become all-null).

    Needed whenever a reduced tile is decoded from the wire: columns that
    went entirely null emit no key there, yet the comparison still treats
    them as all-null columns of the original schema."""
    names = list(a.schema.names[1:])
    types = {}
    for name in names:
        ta = a.schema.type_of(a.schema.index_of(name))
        if name in b.schema.names:
            tb = b.schema.type_of(b.schema.index_of(name))
            ta = ta if ta == tb else widen(ta, tb)
        types[name] = ta
    schema = Schema((("geometry", AttributeType.GEOMETRY),)
                    + tuple((n, types[n]) for n in names))

    def conform(t: Tile) -> Tile:
        idx = {n: (t.schema.index_of(n) if n in t.schema.names else None) for n in names}
        feats = []
        for f in t.features:
            vals = [f.geometry]
            for n in names:
                j = idx[n]
                v = NULL if j is None else f[j]
                if v is not NULL and types[n] == AttributeType.FLOAT and isinstance(v, int) and not isinstance(v, bool):
                    v = float(v)
                vals.append(v)
            feats.append(Feature(tuple(vals)))
        return replace(t, schema=schema, features=tuple(feats))

    return conform(a), conform(b)


def evaluate(baseline: Tileset, reduced: Tileset, styles: list[StyleSpec],
             grid: PixelGrid | None = None, tld_params: TldParams | None = None,
             max_tiles: int | None = None) -> QualityReport:
    """Render every common tile under each style in both tilesets and score it.

    Styles are frozen against the baseline tile so colors cannot shift;
    distortion (tld) is computed once per tile and repeated on its style
    rows. Tiles present on one side only are counted as skipped.
    """
    grid = grid or PixelGrid()
    params = tld_params or TldParams(grid=grid)
    report = QualityReport()
    coords = baseline.coords()
    if max_tiles is not None:
        coords = coords[:max_tiles]
    for tc in coords:
        raw_base = baseline.read_tile(tc.z, tc.x, tc.y)
        raw_red = reduced.read_tile(tc.z, tc.x, tc.y)
        if raw_base is None or raw_red is None:
            report.skipped += 1
            continue
        t_base, t_red = conform_pair(codec.decode(raw_base), codec.decode(raw_red))
        tile_tld = tld(t_base, t_red, params)
        for style in styles:
            if style.attribute not in t_base.schema.names:
                report.skipped += 1
                continue
            frozen = freeze_style(style, t_base)
            img_a = render(t_base, frozen, grid)
            img_b = render(t_red, frozen, grid)
            report.rows.append({
                "z": tc.z, "x": tc.x, "y": tc.y,
                "style": style.mode, "attribute": style.attribute,
                "rmse": rmse(img_a, img_b),
                "psnr": psnr(img_a, img_b),
                "ssim": ssim(img_a, img_b),
                "tld": tile_tld,
                "bytes_in": len(raw_base), "bytes_out": len(raw_red),
            })
    return report.finalize()


def write_png(img: np.ndarray, path: str | Path):
    """Minimal RGB PNG writer (no dependencies); handy for eyeballing tiles."""
    h, w = img.shape[:2]
    raw = b"".join(b"\x00" + img[r].astype(np.uint8).tobytes() for r in range(h))

    def chunk(tag: bytes, payload: bytes) -> bytes:
        out = struct.pack(">I", len(payload)) + tag + payload
        return out + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)

    header = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    data = (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header)
            + chunk(b"IDAT", zlib.compress(raw, 6)) + chunk(b"IEND", b""))
    Path(path).write_bytes(data)
