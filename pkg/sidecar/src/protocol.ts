/**
 * Newline-delimited JSON protocol.
 *
 * Requests:  {"op":"describe"}
 *            {"id":u64,"op":"embed_image","png_b64":"..."}
 *            {"id":u64,"op":"embed_text","text":"..."}
 * Responses: {"name":...,"dim":...,"supports_text":...}   (describe)
 *            {"id":u64,"embedding":[...]}
 *            {"id":u64,"error":"..."}
 *
 * One request is answered per line, ids echoed verbatim; a connection
 * handles one request at a time.
 */

import { decodePng } from "./png.js";
import { DIM, MODEL_NAME, embedImage, embedText } from "./model.js";

export function handleLine(line: string): string {
  let req: any;
  try {
    req = JSON.parse(line);
  } catch (e) {
    return JSON.stringify({ id: null, error: `malformed JSON: ${(e as Error).message}` });
  }
  const id = req?.id ?? null;
  try {
    switch (req?.op) {
      case "describe":
        return JSON.stringify({
          name: MODEL_NAME,
          dim: DIM,
          supports_text: true,
        });
      case "embed_image": {
        if (typeof req.png_b64 !== "string") throw new Error("missing png_b64");
        const img = decodePng(Buffer.from(req.png_b64, "base64"));
        return JSON.stringify({ id, embedding: embedImage(img) });
      }
      case "embed_text": {
        if (typeof req.text !== "string") throw new Error("missing text");
        return JSON.stringify({ id, embedding: embedText(req.text) });
      }
      default:
        throw new Error(`unknown op ${JSON.stringify(req?.op)}`);
    }
  } catch (e) {
    return JSON.stringify({ id, error: (e as Error).message });
  }
}

/** Accumulates chunks and yields complete newline-terminated lines. */
export class LineSplitter {
  private buffer = "";

  push(chunk: string): string[] {
    this.buffer += chunk;
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    return lines.filter((l) => l.trim().length > 0);
  }
}
