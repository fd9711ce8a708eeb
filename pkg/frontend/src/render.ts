/**
 * Canvas rendering of decoded tiles under a style.
 *
 * Deliberately simple: polygons fill with the even-odd rule plus a thin
 * stroke, lines stroke at one pixel, points draw as small squares. Null
 * cells render in the style's null color (hatched where patterns are
 * available) so sparsified values stay visibly distinct from data.
 */

import type { MvtLayer } from "./mvt.js";
import { ColorAssigner, StyleSpec } from "./style.js";

export interface Camera {
  /** web-mercator unit coordinates of the view center */
  cx: number;
  cy: number;
  /** fractional zoom; world is 256 * 2^zoom pixels wide */
  zoom: number;
}

export const TILE_PX = 256;

export function worldScale(zoom: number): number {
  return TILE_PX * Math.pow(2, zoom);
}

export function visibleTiles(cam: Camera, width: number, height: number,
                             zInt: number): Array<[number, number, number]> {
  const n = 1 << zInt;
  const scale = worldScale(cam.zoom);
  const x0 = cam.cx - width / 2 / scale;
  const x1 = cam.cx + width / 2 / scale;
  const y0 = cam.cy - height / 2 / scale;
  const y1 = cam.cy + height / 2 / scale;
  const tiles: Array<[number, number, number]> = [];
  const txa = Math.max(0, Math.floor(x0 * n));
  const txb = Math.min(n - 1, Math.floor(x1 * n));
  const tya = Math.max(0, Math.floor(y0 * n));
  const tyb = Math.min(n - 1, Math.floor(y1 * n));
  for (let tx = txa; tx <= txb; tx++) {
    for (let ty = tya; ty <= tyb; ty++) tiles.push([zInt, tx, ty]);
  }
  return tiles;
}

let hatchCache: CanvasPattern | string | null = null;

function nullPaint(ctx: CanvasRenderingContext2D, color: string): CanvasPattern | string {
  if (hatchCache) return hatchCache;
  try {
    const off = document.createElement("canvas");
    off.width = 6;
    off.height = 6;
    const octx = off.getContext("2d")!;
    octx.fillStyle = color;
    octx.globalAlpha = 0.55;
    octx.fillRect(0, 0, 6, 6);
    octx.globalAlpha = 1.0;
    octx.strokeStyle = color;
    octx.beginPath();
    octx.moveTo(0, 6);
    octx.lineTo(6, 0);
    octx.stroke();
    hatchCache = ctx.createPattern(off, "repeat") ?? color;
  } catch {
    hatchCache = color; // headless canvases may lack patterns
  }
  return hatchCache;
}

export function drawTile(
  ctx: CanvasRenderingContext2D,
  layer: MvtLayer,
  style: StyleSpec,
  originX: number,
  originY: number,
  sizePx: number,
): void {
  const assigner = new ColorAssigner(style);
  const s = sizePx / layer.extent;
  for (const feature of layer.features) {
    const hasValue = feature.properties[style.attribute] !== undefined;
    const color = assigner.colorFor(feature);
    const paint = hasValue ? color : nullPaint(ctx, style.null_color);
    if (feature.type === 3) {
      ctx.beginPath();
      for (const path of feature.paths) {
        path.points.forEach(([px, py], k) => {
          const x = originX + px * s;
          const y = originY + py * s;
          if (k === 0) ctx.moveTo(x, y);
          else ctx.lineTo(x, y);
        });
        ctx.closePath();
      }
      ctx.fillStyle = paint as string;
      ctx.fill("evenodd");
      ctx.strokeStyle = typeof paint === "string" ? paint : style.null_color;
      ctx.lineWidth = 1;
      ctx.stroke();
    } else if (feature.type === 2) {
      ctx.beginPath();
      for (const path of feature.paths) {
        path.points.forEach(([px, py], k) => {
          const x = originX + px * s;
          const y = originY + py * s;
          if (k === 0) ctx.moveTo(x, y);
          else ctx.lineTo(x, y);
        });
      }
      ctx.strokeStyle = typeof paint === "string" ? paint : style.null_color;
      ctx.lineWidth = 1.5;
      ctx.stroke();
    } else {
      ctx.fillStyle = paint as string;
      for (const path of feature.paths) {
        for (const [px, py] of path.points) {
          ctx.fillRect(originX + px * s - 1.5, originY + py * s - 1.5, 3, 3);
        }
      }
    }
  }
}
