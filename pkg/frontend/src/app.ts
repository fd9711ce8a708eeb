/**
 * Viewer application: synchronized baseline/reduced panes with client-side
 * restyling, swipe comparison, byte readout, and style export.
 *
 * Everything is wired through `mountViewer` so the app can run both in a
 * browser and under a DOM test harness with an injected fetch.
 */

import { Camera, drawTile, visibleTiles, worldScale } from "./render.js";
import { Store } from "./state.js";
import { StyleSpec, defaultStyle, freezeStyle, styleFromJson, styleToJson } from "./style.js";
import { FetchLike, TileSource } from "./tiles.js";
import type { MvtFeature } from "./mvt.js";

export interface ViewerOptions {
  serverUrl: string;
  baseline: string;
  reduced?: string;
  fetcher?: FetchLike;
  width?: number;
  height?: number;
}

export class ViewerApp {
  readonly store = new Store();
  readonly panes: HTMLCanvasElement[] = [];
  readonly statusLine: HTMLElement;
  readonly attributeSelect: HTMLSelectElement;
  readonly modeSelect: HTMLSelectElement;
  readonly compareSelect: HTMLSelectElement;
  readonly swipeInput: HTMLInputElement;
  readonly errorBanner: HTMLElement;
  private redrawScheduled = false;

  constructor(readonly root: HTMLElement, readonly opts: ViewerOptions) {
    const doc = root.ownerDocument;
    root.innerHTML = "";

    const controls = doc.createElement("div");
    controls.className = "controls";
    this.attributeSelect = doc.createElement("select");
    this.attributeSelect.id = "attribute";
    this.modeSelect = doc.createElement("select");
    this.modeSelect.id = "style-mode";
    for (const mode of ["categorical", "gradient"]) {
      const opt = doc.createElement("option");
      opt.value = mode;
      opt.textContent = mode;
      this.modeSelect.appendChild(opt);
    }
    this.compareSelect = doc.createElement("select");
    this.compareSelect.id = "compare-mode";
    for (const mode of ["side_by_side", "swipe", "single"]) {
      const opt = doc.createElement("option");
      opt.value = mode;
      opt.textContent = mode.replace("_", " ");
      this.compareSelect.appendChild(opt);
    }
    this.swipeInput = doc.createElement("input");
    this.swipeInput.type = "range";
    this.swipeInput.min = "0";
    this.swipeInput.max = "100";
    this.swipeInput.value = "50";
    this.swipeInput.id = "swipe";
    const exportBtn = doc.createElement("button");
    exportBtn.id = "export-style";
    exportBtn.textContent = "export style";
    controls.append(this.attributeSelect, this.modeSelect, this.compareSelect,
                    this.swipeInput, exportBtn);

    this.errorBanner = doc.createElement("div");
    this.errorBanner.id = "error-banner";
    this.errorBanner.style.display = "none";

    const panes = doc.createElement("div");
    panes.className = "panes";
    for (const name of ["baseline", "reduced"]) {
      const canvas = doc.createElement("canvas");
      canvas.width = opts.width ?? 512;
      canvas.height = opts.height ?? 512;
      canvas.dataset.pane = name;
      panes.appendChild(canvas);
      this.panes.push(canvas);
      this.bindNavigation(canvas);
    }

    this.statusLine = doc.createElement("div");
    this.statusLine.id = "status";
    root.append(controls, this.errorBanner, panes, this.statusLine);

    this.attributeSelect.addEventListener("change", () => this.applyStyleFromControls());
    this.modeSelect.addEventListener("change", () => this.applyStyleFromControls());
    this.compareSelect.addEventListener("change", () => {
      this.store.update({ mode: this.compareSelect.value as never });
    });
    this.swipeInput.addEventListener("input", () => {
      this.store.update({ swipe: Number(this.swipeInput.value) / 100 });
    });
    exportBtn.addEventListener("click", () => this.downloadStyle());

    this.store.subscribe(() => this.scheduleRedraw());
  }

  async load(): Promise<void> {
    const fetcher = this.opts.fetcher;
    const baseline = new TileSource(this.opts.serverUrl, this.opts.baseline,
                                    fetcher ?? ((u) => fetch(u)));
    let reduced: TileSource | null = null;
    try {
      await baseline.loadMetadata();
      if (this.opts.reduced) {
        reduced = new TileSource(this.opts.serverUrl, this.opts.reduced,
                                 fetcher ?? ((u) => fetch(u)));
        await reduced.loadMetadata();
      }
    } catch (err) {
      this.showError(`failed to load tileset: ${err}`);
      return;
    }
    this.store.update({ baseline, reduced });
    this.populateAttributes();
    const attrs = this.store.attributes();
    if (attrs.length) {
      this.attributeSelect.value = attrs[0];
      this.applyStyleFromControls();
    }
    const [zmin] = baseline.metadata!.zooms;
    this.store.update({ camera: { cx: 0.5, cy: 0.5, zoom: Math.max(1, zmin + 1) } });
    await this.prefetchVisible();
  }

  showError(message: string): void {
    this.errorBanner.textContent = message;
    this.errorBanner.style.display = "block";
  }

  populateAttributes(): void {
    this.attributeSelect.innerHTML = "";
    for (const name of this.store.attributes()) {
      const opt = this.root.ownerDocument.createElement("option");
      opt.value = name;
      opt.textContent = name;
      this.attributeSelect.appendChild(opt);
    }
  }

  /** All baseline features currently decoded, for freezing style ranks. */
  private baselineFeatures(): MvtFeature[] {
    const src = this.store.state.baseline;
    if (!src) return [];
    const out: MvtFeature[] = [];
    for (const layer of src.cache.values()) {
      if (layer) out.push(...layer.features);
    }
    return out;
  }

  applyStyleFromControls(): void {
    const style = defaultStyle(
      this.attributeSelect.value,
      this.modeSelect.value as StyleSpec["mode"],
    );
    this.applyStyle(style);
  }

  applyStyle(style: StyleSpec): void {
    this.store.update({ style: freezeStyle(style, this.baselineFeatures()) });
  }

  importStyleJson(text: string): void {
    this.applyStyle(styleFromJson(text));
  }

  exportStyleJson(): string {
    const style = this.store.state.style;
    if (!style) throw new Error("no style applied yet");
    return styleToJson(style);
  }

  private downloadStyle(): void {
    const doc = this.root.ownerDocument;
    let out = doc.getElementById("style-json") as HTMLTextAreaElement | null;
    if (!out) {
      out = doc.createElement("textarea");
      out.id = "style-json";
      out.rows = 12;
      this.root.appendChild(out);
    }
    out.value = this.exportStyleJson();
  }

  private bindNavigation(canvas: HTMLCanvasElement): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    canvas.addEventListener("mousedown", (ev) => {
      dragging = true;
      lastX = ev.clientX;
      lastY = ev.clientY;
    });
    canvas.addEventListener("mouseup", () => (dragging = false));
    canvas.addEventListener("mouseleave", () => (dragging = false));
    canvas.addEventListener("mousemove", (ev) => {
      if (!dragging) return;
      const scale = worldScale(this.store.state.camera.zoom);
      const cam = this.store.state.camera;
      this.setCamera({
        ...cam,
        cx: cam.cx - (ev.clientX - lastX) / scale,
        cy: cam.cy - (ev.clientY - lastY) / scale,
      });
      lastX = ev.clientX;
      lastY = ev.clientY;
    });
    canvas.addEventListener("wheel", (ev) => {
      const cam = this.store.state.camera;
      const dz = (ev as WheelEvent).deltaY < 0 ? 0.25 : -0.25;
      this.setCamera({ ...cam, zoom: Math.max(0, cam.zoom + dz) });
    });
  }

  setCamera(camera: Camera): void {
    // one camera drives every pane: panning either side moves both
    this.store.update({ camera });
    void this.prefetchVisible();
  }

  tileZoom(): number {
    const meta = this.store.state.baseline?.metadata;
    const z = Math.round(this.store.state.camera.zoom);
    if (!meta) return Math.max(0, z);
    return Math.min(meta.zooms[1], Math.max(meta.zooms[0], z));
  }

  async prefetchVisible(): Promise<void> {
    const { baseline, reduced, camera } = this.store.state;
    if (!baseline) return;
    const z = this.tileZoom();
    const wanted = visibleTiles(camera, this.panes[0].width, this.panes[0].height, z);
    const jobs: Promise<unknown>[] = [];
    for (const [tz, tx, ty] of wanted) {
      jobs.push(baseline.tile(tz, tx, ty));
      if (reduced) jobs.push(reduced.tile(tz, tx, ty));
    }
    await Promise.all(jobs);
    this.scheduleRedraw();
  }

  scheduleRedraw(): void {
    if (this.redrawScheduled) return;
    this.redrawScheduled = true;
    const run = () => {
      this.redrawScheduled = false;
      this.redraw();
    };
    if (typeof requestAnimationFrame === "function") requestAnimationFrame(run);
    else setTimeout(run, 0);
  }

  redraw(): void {
    const { baseline, reduced, style, mode } = this.store.state;
    if (!baseline || !style) return;
    const [baseCanvas, redCanvas] = this.panes;
    if (mode === "swipe" && reduced) {
      redCanvas.style.display = "none";
      this.drawPane(baseCanvas, baseline, style);
      this.drawPane(baseCanvas, reduced, style, this.store.state.swipe);
    } else if (mode === "single" || !reduced) {
      redCanvas.style.display = "none";
      this.drawPane(baseCanvas, baseline, style);
    } else {
      redCanvas.style.display = "";
      this.drawPane(baseCanvas, baseline, style);
      this.drawPane(redCanvas, reduced, style);
    }
    this.updateStatus();
  }

  private drawPane(canvas: HTMLCanvasElement, source: TileSource,
                   style: StyleSpec, clipFraction?: number): void {
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const cam = this.store.state.camera;
    const z = this.tileZoom();
    ctx.save();
    if (clipFraction !== undefined) {
      // swipe reveals the reduced tileset over the baseline, left of the divider
      ctx.beginPath();
      ctx.rect(0, 0, canvas.width * clipFraction, canvas.height);
      ctx.clip();
      ctx.clearRect(0, 0, canvas.width * clipFraction, canvas.height);
    }
    ctx.fillStyle = style.background_color;
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    const scale = worldScale(cam.zoom);
    const sizePx = scale / (1 << z);
    for (const [tz, tx, ty] of visibleTiles(cam, canvas.width, canvas.height, z)) {
      const layer = source.cachedTile(tz, tx, ty);
      if (!layer) continue;
      const originX = canvas.width / 2 + (tx / (1 << tz) - cam.cx) * scale;
      const originY = canvas.height / 2 + (ty / (1 << tz) - cam.cy) * scale;
      drawTile(ctx, layer, style, originX, originY, sizePx);
    }
    ctx.restore();
  }

  private updateStatus(): void {
    const { baseline, reduced, camera } = this.store.state;
    if (!baseline) return;
    const z = this.tileZoom();
    const n = 1 << z;
    const tx = Math.min(n - 1, Math.max(0, Math.floor(camera.cx * n)));
    const ty = Math.min(n - 1, Math.max(0, Math.floor(camera.cy * n)));
    const parts = [`tile ${z}/${tx}/${ty}`];
    const b = baseline.bytesOf(z, tx, ty);
    parts.push(`baseline: ${b === null ? "-" : b + " B"}`);
    if (reduced) {
      const r = reduced.bytesOf(z, tx, ty);
      parts.push(`reduced: ${r === null ? "-" : r + " B"}`);
    }
    parts.push(`requests: ${baseline.tileRequests + (reduced?.tileRequests ?? 0)}`);
    this.statusLine.textContent = parts.join(" | ");
  }

  totalTileRequests(): number {
    const { baseline, reduced } = this.store.state;
    return (baseline?.tileRequests ?? 0) + (reduced?.tileRequests ?? 0);
  }
}

export function mountViewer(root: HTMLElement, opts: ViewerOptions): ViewerApp {
  return new ViewerApp(root, opts);
}

// browser auto-mount; tests import and mount explicitly
declare const window: (Window & { __TILEREDUCE_TEST__?: boolean }) | undefined;
if (typeof window !== "undefined" && !window.__TILEREDUCE_TEST__) {
  const rootEl = window.document?.getElementById("viewer-root");
  if (rootEl) {
    const params = new URLSearchParams(window.location.search);
    const app = mountViewer(rootEl as HTMLElement, {
      serverUrl: params.get("server") ?? "",
      baseline: params.get("baseline") ?? "baseline",
      reduced: params.get("reduced") ?? undefined,
    });
    void app.load();
  }
}
