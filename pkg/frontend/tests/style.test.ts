import { describe, expect, it } from "vitest";

import { decodeTile } from "../src/mvt.js";
import {
  ColorAssigner,
  defaultStyle,
  freezeStyle,
  lerpHex,
  styleFromJson,
  styleToJson,
} from "../src/style.js";
import { fixtureTile } from "./fixtures.js";

describe("style model", () => {
  it("round-trips through the shared JSON schema", () => {
    const style = {
      ...defaultStyle("zone"),
      categories: ["wet", "dry"],
    };
    const again = styleFromJson(styleToJson(style));
    expect(again).toEqual(style);
    const parsed = JSON.parse(styleToJson(style));
    // the exact keys the evaluation pipeline expects
    expect(Object.keys(parsed).sort()).toEqual(
      ["attribute", "background_color", "categories", "mode", "null_color", "palette"],
    );
  });

  it("rejects malformed styles", () => {
    expect(() => styleFromJson('{"mode":"nope","attribute":"a"}')).toThrow();
    expect(() => styleFromJson('{"mode":"categorical"}')).toThrow();
  });

  it("assigns categorical colors by first-appearance rank", () => {
    const features = decodeTile(fixtureTile()).features;
    const style = defaultStyle("zone");
    const assigner = new ColorAssigner(style);
    expect(assigner.colorFor(features[0])).toBe(style.palette[0]); // wet
    expect(assigner.colorFor(features[1])).toBe(style.palette[1]); // dry
    // repeat lookups are stable
    expect(assigner.colorFor(features[0])).toBe(style.palette[0]);
  });

  it("respects frozen category order", () => {
    const features = decodeTile(fixtureTile()).features;
    const style = { ...defaultStyle("zone"), categories: ["dry", "wet"] };
    const assigner = new ColorAssigner(style);
    expect(assigner.colorFor(features[0])).toBe(style.palette[1]); // wet is rank 1 now
  });

  it("renders missing cells in the null color", () => {
    const features = decodeTile(fixtureTile()).features;
    const style = defaultStyle("score", "gradient");
    const assigner = new ColorAssigner({ ...style, domain: [0, 10] });
    expect(assigner.colorFor(features[1])).toBe(style.null_color); // no score
  });

  it("interpolates gradients over the frozen domain", () => {
    const features = decodeTile(fixtureTile()).features;
    const style = {
      ...defaultStyle("score", "gradient"),
      palette: ["#000000", "#ffffff"],
      domain: [0, 7] as [number, number],
    };
    const assigner = new ColorAssigner(style);
    expect(assigner.colorFor(features[0])).toBe("#ffffff"); // score 7 = hi end
    expect(lerpHex("#000000", "#ffffff", 0.5)).toBe("#808080");
  });

  it("freezes categories and domains from baseline features", () => {
    const features = decodeTile(fixtureTile()).features;
    const cat = freezeStyle(defaultStyle("zone"), features);
    expect(cat.categories).toEqual(["wet", "dry"]);
    const grad = freezeStyle(defaultStyle("score", "gradient"), features);
    expect(grad.domain).toEqual([7, 7]);
  });
});
