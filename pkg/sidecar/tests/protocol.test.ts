import { describe, expect, it } from "vitest";

import { DIM, MODEL_NAME } from "../src/model.js";
import { LineSplitter, handleLine } from "../src/protocol.js";
import { encodePng, solidRgb } from "./pngutil.js";

describe("handleLine", () => {
  it("answers describe without an id", () => {
    const reply = JSON.parse(handleLine(JSON.stringify({ op: "describe" })));
    expect(reply).toEqual({ name: MODEL_NAME, dim: DIM, supports_text: true });
  });

  it("echoes the id on embed_text", () => {
    const reply = JSON.parse(
      handleLine(JSON.stringify({ id: 42, op: "embed_text", text: "a red square" }))
    );
    expect(reply.id).toBe(42);
    expect(reply.embedding).toHaveLength(DIM);
  });

  it("embeds images from base64 PNG", () => {
    const png = encodePng(solidRgb(16, 16, [0, 0, 255]), 16, 16, 3);
    const reply = JSON.parse(
      handleLine(
        JSON.stringify({ id: 7, op: "embed_image", png_b64: png.toString("base64") })
      )
    );
    expect(reply.id).toBe(7);
    expect(reply.embedding).toHaveLength(DIM);
    const norm = Math.sqrt(
      reply.embedding.reduce((acc: number, x: number) => acc + x * x, 0)
    );
    expect(norm).toBeCloseTo(1.0, 5);
  });

  it("echoes the id on errors", () => {
    const bad = JSON.parse(handleLine(JSON.stringify({ id: 9, op: "transmogrify" })));
    expect(bad.id).toBe(9);
    expect(bad.error).toMatch(/unknown op/);

    const empty = JSON.parse(
      handleLine(JSON.stringify({ id: 10, op: "embed_text", text: "" }))
    );
    expect(empty.id).toBe(10);
    expect(empty.error).toMatch(/empty/);

    const noPng = JSON.parse(handleLine(JSON.stringify({ id: 11, op: "embed_image" })));
    expect(noPng.id).toBe(11);
    expect(noPng.error).toMatch(/png_b64/);
  });

  it("reports malformed JSON", () => {
    const reply = JSON.parse(handleLine("{nope"));
    expect(reply.id).toBeNull();
    expect(reply.error).toMatch(/malformed/);
  });
});

describe("LineSplitter", () => {
  it("reassembles lines across chunk boundaries", () => {
    const s = new LineSplitter();
    expect(s.push('{"op":"desc')).toEqual([]);
    expect(s.push('ribe"}\n{"id":1')).toEqual(['{"op":"describe"}']);
    expect(s.push("}\n")).toEqual(['{"id":1}']);
  });

  it("handles several lines in one chunk", () => {
    const s = new LineSplitter();
    expect(s.push("a\nb\nc\n")).toEqual(["a", "b", "c"]);
  });
});
