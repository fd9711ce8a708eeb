/**
 * Tile fetching and caching.
 *
 * Every (tileset, z, x, y) is fetched at most once per session: styling is
 * entirely client-side, so switching styles must never touch the network.
 * The request counter exists so tests (and the curious) can verify that.
 */

import { decodeTile, MvtLayer } from "./mvt.js";

export interface TilesetMetadata {
  layer: string;
  zooms: [number, number];
  budget_bytes: number;
  schema: Array<{ name: string; type: string }>;
  tile_status: Array<{ z: number; x: number; y: number; bytes: number }>;
}

export type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  arrayBuffer(): Promise<ArrayBuffer>;
  json(): Promise<unknown>;
}>;

export class TileSource {
  readonly cache = new Map<string, MvtLayer | null>();
  tileRequests = 0;
  metadata: TilesetMetadata | null = null;
  private inflight = new Map<string, Promise<MvtLayer | null>>();

  constructor(
    readonly baseUrl: string,
    readonly name: string,
    private fetcher: FetchLike = (url) => fetch(url),
  ) {}

  async loadMetadata(): Promise<TilesetMetadata> {
    const resp = await this.fetcher(`${this.baseUrl}/metadata/${this.name}`);
    if (!resp.ok) throw new Error(`metadata request failed (${resp.status})`);
    this.metadata = (await resp.json()) as TilesetMetadata;
    return this.metadata;
  }

  bytesOf(z: number, x: number, y: number): number | null {
    const row = this.metadata?.tile_status.find(
      (r) => r.z === z && r.x === x && r.y === y,
    );
    return row ? row.bytes : null;
  }

  /** Cached decode; a 204 (absent tile) caches as null. */
  tile(z: number, x: number, y: number): Promise<MvtLayer | null> {
    const key = `${z}/${x}/${y}`;
    if (this.cache.has(key)) return Promise.resolve(this.cache.get(key)!);
    const pending = this.inflight.get(key);
    if (pending) return pending;
    const promise = (async () => {
      this.tileRequests += 1;
      const url = `${this.baseUrl}/tiles/${this.name}/${key}.mvt`;
      const resp = await this.fetcher(url);
      let layer: MvtLayer | null = null;
      if (resp.ok && resp.status === 200) {
        layer = decodeTile(new Uint8Array(await resp.arrayBuffer()));
      }
      this.cache.set(key, layer);
      this.inflight.delete(key);
      return layer;
    })();
    this.inflight.set(key, promise);
    return promise;
  }

  /** Synchronous cache view used by the render loop. */
  cachedTile(z: number, x: number, y: number): MvtLayer | null | undefined {
    return this.cache.get(`${z}/${x}/${y}`);
  }
}
