import { describe, expect, it } from "vitest";

import { decodeTile } from "../src/mvt.js";
import { fixtureTile, twoLayerTile } from "./fixtures.js";

describe("mvt decoder", () => {
  it("decodes the fixture layer", () => {
    const layer = decodeTile(fixtureTile());
    expect(layer.name).toBe("demo");
    expect(layer.extent).toBe(4096);
    expect(layer.keys).toEqual(["zone", "score"]);
    expect(layer.features).toHaveLength(2);
  });

  it("maps tag pairs to properties and leaves null cells absent", () => {
    const [poly, line] = decodeTile(fixtureTile()).features;
    expect(poly.properties).toEqual({ zone: "wet", score: 7 });
    expect(line.properties).toEqual({ zone: "dry" });
    expect(line.properties.score).toBeUndefined();
  });

  it("reconstructs absolute coordinates from zigzag deltas", () => {
    const [poly, line] = decodeTile(fixtureTile()).features;
    expect(poly.type).toBe(3);
    expect(poly.paths).toHaveLength(1);
    expect(poly.paths[0].closed).toBe(true);
    expect(poly.paths[0].points).toEqual([
      [0, 0], [100, 0], [100, 100], [0, 100],
    ]);
    expect(line.type).toBe(2);
    expect(line.paths[0].closed).toBe(false);
    expect(line.paths[0].points).toEqual([[500, 500], [800, 400]]);
  });

  it("rejects truncated buffers", () => {
    const data = fixtureTile();
    expect(() => decodeTile(data.subarray(0, data.length / 2))).toThrow();
  });

  it("rejects multi-layer tiles", () => {
    expect(() => decodeTile(twoLayerTile())).toThrow(/one layer/);
  });
});
