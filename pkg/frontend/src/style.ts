/**
 * Style model shared with the evaluation pipeline.
 *
 * The JSON shape here is accepted unchanged by the `tilereduce eval`
 * command, so a style designed interactively in the viewer can be fed
 * straight into the metric run. Categorical colors follow first-appearance
 * rank (frozen via `categories` when comparing tilesets); gradients
 * interpolate between the first two palette entries over a frozen or
 * tile-derived numeric domain.
 */

import type { MvtFeature, TileValue } from "./mvt.js";

export type Mode = "categorical" | "gradient";

export interface StyleSpec {
  mode: Mode;
  attribute: string;
  palette: string[];
  null_color: string;
  background_color: string;
  categories?: TileValue[];
  domain?: [number, number];
}

export const DEFAULT_PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
];

export const NULL_COLOR = "#404040";
export const BACKGROUND_COLOR = "#ffffff";

export function defaultStyle(attribute: string, mode: Mode = "categorical"): StyleSpec {
  return {
    mode,
    attribute,
    palette: mode === "gradient" ? ["#14146e", "#ff5a00"] : [...DEFAULT_PALETTE],
    null_color: NULL_COLOR,
    background_color: BACKGROUND_COLOR,
  };
}

export function styleToJson(style: StyleSpec): string {
  const out: Record<string, unknown> = {
    mode: style.mode,
    attribute: style.attribute,
    palette: style.palette,
    null_color: style.null_color,
    background_color: style.background_color,
  };
  if (style.categories !== undefined) out.categories = style.categories;
  if (style.domain !== undefined) out.domain = style.domain;
  return JSON.stringify(out, null, 2);
}

export function styleFromJson(text: string): StyleSpec {
  const d = JSON.parse(text);
  if (d.mode !== "categorical" && d.mode !== "gradient") {
    throw new Error(`unknown style mode ${d.mode}`);
  }
  if (typeof d.attribute !== "string") throw new Error("style needs an attribute");
  return {
    mode: d.mode,
    attribute: d.attribute,
    palette: d.palette ?? [...DEFAULT_PALETTE],
    null_color: d.null_color ?? NULL_COLOR,
    background_color: d.background_color ?? BACKGROUND_COLOR,
    categories: d.categories,
    domain: d.domain,
  };
}

/** Stable key so 1, 1.0 and "1" behave like the evaluator. */
function catKey(v: TileValue): string {
  if (typeof v === "boolean") return `b:${v}`;
  if (typeof v === "number") return `n:${v}`;
  return `s:${v}`;
}

export class ColorAssigner {
  private rank = new Map<string, number>();

  constructor(private style: StyleSpec) {
    if (style.categories) {
      for (const v of style.categories) {
        if (!this.rank.has(catKey(v))) this.rank.set(catKey(v), this.rank.size);
      }
    }
  }

  colorFor(feature: MvtFeature): string {
    const v = feature.properties[this.style.attribute];
    if (v === undefined) return this.style.null_color;
    if (this.style.mode === "categorical") {
      const key = catKey(v);
      if (!this.rank.has(key)) this.rank.set(key, this.rank.size);
      const idx = this.rank.get(key)! % this.style.palette.length;
      return this.style.palette[idx];
    }
    if (typeof v === "string") return this.style.null_color;
    const [lo, hi] = this.style.domain ?? [0, 1];
    const span = hi - lo;
    const t = span === 0 ? 0.5 : Math.min(1, Math.max(0, (Number(v) - lo) / span));
    return lerpHex(this.style.palette[0], this.style.palette[1] ?? this.style.palette[0], t);
  }
}

export function parseHex(c: string): [number, number, number] {
  const s = c.replace("#", "");
  if (s.length !== 6) throw new Error(`bad hex color ${c}`);
  return [
    parseInt(s.slice(0, 2), 16),
    parseInt(s.slice(2, 4), 16),
    parseInt(s.slice(4, 6), 16),
  ];
}

export function lerpHex(a: string, b: string, t: number): string {
  const ca = parseHex(a);
  const cb = parseHex(b);
  const mix = ca.map((v, k) => Math.round(v + (cb[k] - v) * t));
  return "#" + mix.map((v) => v.toString(16).padStart(2, "0")).join("");
}

/** Freeze categorical order / gradient domain from baseline features. */
export function freezeStyle(style: StyleSpec, features: MvtFeature[]): StyleSpec {
  if (style.mode === "categorical") {
    if (style.categories) return style;
    const seen = new Map<string, TileValue>();
    for (const f of features) {
      const v = f.properties[style.attribute];
      if (v !== undefined && !seen.has(catKey(v))) seen.set(catKey(v), v);
    }
    return { ...style, categories: [...seen.values()] };
  }
  if (style.domain) return style;
  let lo = Infinity;
  let hi = -Infinity;
  for (const f of features) {
    const v = f.properties[style.attribute];
    if (typeof v === "number") {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!isFinite(lo)) {
    lo = 0;
    hi = 1;
  }
  return { ...style, domain: [lo, hi] };
}
