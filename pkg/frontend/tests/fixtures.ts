/** Hand-assembled MVT fixture bytes, mirroring the published wire layout. */

function varint(n: number): number[] {
  const out: number[] = [];
  for (;;) {
    const b = n & 0x7f;
    n = Math.floor(n / 128);
    if (n) out.push(b | 0x80);
    else {
      out.push(b);
      return out;
    }
  }
}

function zigzag(n: number): number {
  return n < 0 ? -2 * n - 1 : 2 * n;
}

function field(num: number, wire: number, payload: number[] | number): number[] {
  const head = varint(num * 8 + wire);
  if (wire === 0) return [...head, ...varint(payload as number)];
  const body = payload as number[];
  return [...head, ...varint(body.length), ...body];
}

function str(text: string): number[] {
  return [...new TextEncoder().encode(text)];
}

/**
 * One layer, two features over keys [zone, score]:
 *  - a square polygon (0,0)-(100,0)-(100,100)-(0,100) with zone=wet, score=7
 *  - a 2-point line with zone=dry only
 */
export function fixtureTile(): Uint8Array {
  const values = [
    field(1, 2, str("wet")),
    field(4, 0, 7),
    field(1, 2, str("dry")),
  ];
  const polyGeom = [
    ...varint((1 << 3) | 1), ...varint(zigzag(0)), ...varint(zigzag(0)),
    ...varint((3 << 3) | 2),
    ...varint(zigzag(100)), ...varint(zigzag(0)),
    ...varint(zigzag(0)), ...varint(zigzag(100)),
    ...varint(zigzag(-100)), ...varint(zigzag(0)),
    ...varint((1 << 3) | 7),
  ];
  const f1 = [
    ...field(2, 2, [...varint(0), ...varint(0), ...varint(1), ...varint(1)]),
    ...field(3, 0, 3),
    ...field(4, 2, polyGeom),
  ];
  const lineGeom = [
    ...varint((1 << 3) | 1), ...varint(zigzag(500)), ...varint(zigzag(500)),
    ...varint((1 << 3) | 2), ...varint(zigzag(300)), ...varint(zigzag(-100)),
  ];
  const f2 = [
    ...field(2, 2, [...varint(0), ...varint(2)]),
    ...field(3, 0, 2),
    ...field(4, 2, lineGeom),
  ];
  const layer = [
    ...field(1, 2, str("demo")),
    ...field(2, 2, f1),
    ...field(2, 2, f2),
    ...field(3, 2, str("zone")),
    ...field(3, 2, str("score")),
    ...values.flatMap((v) => field(4, 2, v)),
    ...field(5, 0, 4096),
    ...field(15, 0, 2),
  ];
  return new Uint8Array(field(3, 2, layer));
}

export function twoLayerTile(): Uint8Array {
  const one = fixtureTile();
  const out = new Uint8Array(one.length * 2);
  out.set(one, 0);
  out.set(one, one.length);
  return out;
}
