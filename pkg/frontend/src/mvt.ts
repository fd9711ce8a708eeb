/**
 * Minimal Mapbox Vector Tile 2.1 decoder.
 *
 * Decodes a single-layer MVT protobuf into plain objects. Geometry comes
 * out as absolute integer tile coordinates grouped into paths, each flagged
 * closed (polygon ring) or open (line); point features carry one-point
 * paths. Null cells simply have no entry in a feature's properties.
 */

export type TileValue = string | number | boolean;

export interface MvtPath {
  closed: boolean;
  points: Array<[number, number]>;
}

export interface MvtFeature {
  /** 1 point, 2 line, 3 polygon */
  type: number;
  properties: Record<string, TileValue>;
  paths: MvtPath[];
}

export interface MvtLayer {
  name: string;
  extent: number;
  keys: string[];
  features: MvtFeature[];
}

class Reader {
  pos = 0;
  constructor(private buf: Uint8Array, private end = buf.length) {}

  eof(): boolean {
    return this.pos >= this.end;
  }

  varint(): number {
    let shift = 0;
    let out = 0;
    for (;;) {
      if (this.pos >= this.end) throw new Error("truncated varint");
      const b = this.buf[this.pos++];
      // stay in float space: tile varints comfortably fit in 2^53
      out += (b & 0x7f) * 2 ** shift;
      if ((b & 0x80) === 0) return out;
      shift += 7;
      if (shift > 63) throw new Error("varint too long");
    }
  }

  tag(): [number, number] {
    const t = this.varint();
    return [Math.floor(t / 8), t & 0x7];
  }

  bytes(n: number): Uint8Array {
    if (this.pos + n > this.end) throw new Error("truncated message");
    const out = this.buf.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  lengthDelimited(): Uint8Array {
    return this.bytes(this.varint());
  }

  skip(wire: number): void {
    if (wire === 0) this.varint();
    else if (wire === 1) this.bytes(8);
    else if (wire === 2) this.lengthDelimited();
    else if (wire === 5) this.bytes(4);
    else throw new Error(`unsupported wire type ${wire}`);
  }
}

function unzigzag(v: number): number {
  return v % 2 === 1 ? -(v + 1) / 2 : v / 2;
}

function parseValue(buf: Uint8Array): TileValue {
  const r = new Reader(buf);
  let out: TileValue | undefined;
  while (!r.eof()) {
    const [field, wire] = r.tag();
    if (field === 1) out = new TextDecoder().decode(r.lengthDelimited());
    else if (field === 2) out = new DataView(r.bytes(4).slice().buffer).getFloat32(0, true);
    else if (field === 3) out = new DataView(r.bytes(8).slice().buffer).getFloat64(0, true);
    else if (field === 4 || field === 5) out = r.varint();
    else if (field === 6) out = unzigzag(r.varint());
    else if (field === 7) out = r.varint() !== 0;
    else r.skip(wire);
  }
  if (out === undefined) throw new Error("empty value message");
  return out;
}

function decodeGeometry(stream: number[]): MvtPath[] {
  const paths: MvtPath[] = [];
  let x = 0;
  let y = 0;
  let pos = 0;
  while (pos < stream.length) {
    const cmdInt = stream[pos++];
    const cmd = cmdInt & 0x7;
    const count = cmdInt >> 3;
    if (cmd === 1) {
      for (let k = 0; k < count; k++) {
        x += unzigzag(stream[pos++]);
        y += unzigzag(stream[pos++]);
        paths.push({ closed: false, points: [[x, y]] });
      }
    } else if (cmd === 2) {
      const path = paths[paths.length - 1];
      if (!path) throw new Error("LineTo before MoveTo");
      for (let k = 0; k < count; k++) {
        x += unzigzag(stream[pos++]);
        y += unzigzag(stream[pos++]);
        path.points.push([x, y]);
      }
    } else if (cmd === 7) {
      const path = paths[paths.length - 1];
      if (!path) throw new Error("ClosePath before MoveTo");
      path.closed = true;
    } else {
      throw new Error(`unknown geometry command ${cmd}`);
    }
  }
  return paths;
}

export function decodeTile(data: Uint8Array): MvtLayer {
  const r = new Reader(data);
  const layers: Uint8Array[] = [];
  while (!r.eof()) {
    const [field, wire] = r.tag();
    if (field === 3 && wire === 2) layers.push(r.lengthDelimited());
    else r.skip(wire);
  }
  if (layers.length !== 1) {
    throw new Error(`expected exactly one layer, found ${layers.length}`);
  }
  const lr = new Reader(layers[0]);
  let name = "";
  let extent = 4096;
  const keys: string[] = [];
  const values: TileValue[] = [];
  const rawFeatures: Array<{ tags: number[]; type: number; geom: number[] }> = [];
  while (!lr.eof()) {
    const [field, wire] = lr.tag();
    if (field === 1) name = new TextDecoder().decode(lr.lengthDelimited());
    else if (field === 2) {
      const fr = new Reader(lr.lengthDelimited());
      const feat = { tags: [] as number[], type: 0, geom: [] as number[] };
      while (!fr.eof()) {
        const [ff, fw] = fr.tag();
        if (ff === 2) {
          const pr = new Reader(fr.lengthDelimited());
          while (!pr.eof()) feat.tags.push(pr.varint());
        } else if (ff === 3) feat.type = fr.varint();
        else if (ff === 4) {
          const pr = new Reader(fr.lengthDelimited());
          while (!pr.eof()) feat.geom.push(pr.varint());
        } else fr.skip(fw);
      }
      rawFeatures.push(feat);
    } else if (field === 3) keys.push(new TextDecoder().decode(lr.lengthDelimited()));
    else if (field === 4) values.push(parseValue(lr.lengthDelimited()));
    else if (field === 5) extent = lr.varint();
    else lr.skip(wire);
  }
  const features: MvtFeature[] = rawFeatures.map((raw) => {
    const properties: Record<string, TileValue> = {};
    for (let k = 0; k + 1 < raw.tags.length; k += 2) {
      const key = keys[raw.tags[k]];
      const value = values[raw.tags[k + 1]];
      if (key === undefined || value === undefined) {
        throw new Error("tag index out of range");
      }
      properties[key] = value;
    }
    return { type: raw.type, properties, paths: decodeGeometry(raw.geom) };
  });
  return { name, extent, keys, features };
}
