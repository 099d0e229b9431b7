import { describe, expect, it } from "vitest";

import { DIM, embedImage, embedText } from "../src/model.js";
import { decodePng } from "../src/png.js";
import { discImage, encodePng, rectImage, solidRgb } from "./pngutil.js";

function norm(v: number[]): number {
  return Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
}

function cosine(a: number[], b: number[]): number {
  return a.reduce((acc, x, i) => acc + x * b[i], 0);
}

function image(raw: Uint8Array, w: number, h: number) {
  return decodePng(encodePng(raw, w, h, 3));
}

describe("embeddings", () => {
  it("are unit norm and the declared dimension", () => {
    const vecs = [
      embedText("a red square"),
      embedText("violet particles everywhere"),
      embedImage(image(solidRgb(32, 32, [255, 0, 0]), 32, 32)),
      embedImage(image(rectImage(64, 64, [30, 200, 40], 10, 10, 40, 50), 64, 64)),
    ];
    for (const v of vecs) {
      expect(v.length).toBe(DIM);
      expect(norm(v)).toBeCloseTo(1.0, 6);
    }
  });

  it("is deterministic", () => {
    const a = embedText("an orange blob");
    const b = embedText("an orange blob");
    expect(a).toEqual(b);
    const img = image(discImage(48, [255, 140, 25], 14), 48, 48);
    expect(embedImage(img)).toEqual(embedImage(img));
  });

  it("matches a red square to the red prompt over the blue prompt", () => {
    const img = embedImage(
      image(rectImage(64, 64, [230, 25, 25], 16, 16, 48, 48), 64, 64)
    );
    const red = embedText("a red square");
    const blue = embedText("a blue square");
    expect(cosine(img, red)).toBeGreaterThan(cosine(img, blue));
  });

  it("matches an orange disc to the orange blob prompt", () => {
    const img = embedImage(image(discImage(64, [255, 140, 25], 18), 64, 64));
    const orange = embedText("an orange blob");
    const blue = embedText("a blue square");
    expect(cosine(img, orange)).toBeGreaterThan(cosine(img, blue));
    expect(cosine(img, orange)).toBeGreaterThan(0.1);
  });

  it("separates colors seen in images", () => {
    const red = embedImage(image(solidRgb(16, 16, [255, 0, 0]), 16, 16));
    const blue = embedImage(image(solidRgb(16, 16, [0, 0, 255]), 16, 16));
    expect(cosine(red, blue)).toBeLessThan(0.5);
  });

  it("separates square from scattered layouts in prompts", () => {
    const square = embedText("a big square");
    const scattered = embedText("scattered particles");
    expect(cosine(square, scattered)).toBeLessThan(0.5);
  });

  it("maps unknown prompts to distinct stable vectors", () => {
    const a = embedText("zyxxgarble");
    const b = embedText("qwombat flurp");
    expect(norm(a)).toBeCloseTo(1.0, 6);
    expect(cosine(a, b)).toBeLessThan(0.99);
    expect(embedText("zyxxgarble")).toEqual(a);
  });

  it("rejects the empty prompt", () => {
    expect(() => embedText("")).toThrow(/empty/);
  });
});
