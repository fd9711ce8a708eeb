/**
 * Single viewer store: tilesets, style, camera, compare mode.
 * All UI updates flow through update() so panes never drift apart.
 */

import type { Camera } from "./render.js";
import type { StyleSpec } from "./style.js";
import type { TileSource } from "./tiles.js";

export type CompareMode = "side_by_side" | "swipe" | "single";

export interface ViewerState {
  baseline: TileSource | null;
  reduced: TileSource | null;
  style: StyleSpec | null;
  camera: Camera;
  mode: CompareMode;
  /** 0..1 position of the swipe divider */
  swipe: number;
}

export type Listener = (state: ViewerState) => void;

export class Store {
  private listeners = new Set<Listener>();

  state: ViewerState = {
    baseline: null,
    reduced: null,
    style: null,
    camera: { cx: 0.5, cy: 0.5, zoom: 1 },
    mode: "side_by_side",
    swipe: 0.5,
  };

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  update(patch: Partial<ViewerState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  /** Attributes available for styling, from the baseline metadata schema. */
  attributes(): string[] {
    const schema = this.state.baseline?.metadata?.schema ?? [];
    return schema.filter((c) => c.type !== "geometry").map((c) => c.name);
  }
}
