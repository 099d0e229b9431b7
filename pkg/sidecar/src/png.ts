/**
 * Minimal PNG decoder: 8-bit grayscale / RGB / RGBA, non-interlaced,
 * all five scanline filters. Enough to read the frames the search
 * engine sends; anything fancier is rejected loudly.
 */

import * as zlib from "node:zlib";

export interface DecodedImage {
  width: number;
  height: number;
  /** RGB, row-major, values in [0, 1] */
  pixels: Float64Array;
}

const SIGNATURE = Buffer.from([137, 80, 78, 71, 13, 10, 26, 10]);

function channelsFor(colorType: number): number {
  switch (colorType) {
    case 0:
      return 1; // grayscale
    case 2:
      return 3; // RGB
    case 6:
      return 4; // RGBA
    default:
      throw new Error(`unsupported PNG color type ${colorType}`);
  }
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodePng(data: Buffer): DecodedImage {
  if (!data.subarray(0, 8).equals(SIGNATURE)) {
    throw new Error("not a PNG: bad signature");
  }
  let width = 0;
  let height = 0;
  let colorType = -1;
  const idat: Buffer[] = [];

  let off = 8;
  while (off < data.length) {
    const length = data.readUInt32BE(off);
    const type = data.toString("ascii", off + 4, off + 8);
    const body = data.subarray(off + 8, off + 8 + length);
    if (type === "IHDR") {
      width = body.readUInt32BE(0);
      height = body.readUInt32BE(4);
      const bitDepth = body.readUInt8(8);
      colorType = body.readUInt8(9);
      const interlace = body.readUInt8(12);
      if (bitDepth !== 8) throw new Error(`unsupported bit depth ${bitDepth}`);
      if (interlace !== 0) throw new Error("interlaced PNG unsupported");
      channelsFor(colorType); // validates
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    off += 12 + length; // length + type + body + crc
  }
  if (width === 0 || height === 0) throw new Error("missing IHDR");
  if (idat.length === 0) throw new Error("missing IDAT");

  const channels = channelsFor(colorType);
  const raw = zlib.inflateSync(Buffer.concat(idat));
  const stride = width * channels;
  if (raw.length !== height * (stride + 1)) {
    throw new Error("PNG data length mismatch");
  }

  const out = new Uint8Array(height * stride);
  let prevRow = new Uint8Array(stride);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const row = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const line = out.subarray(y * stride, (y + 1) * stride);
    for (let x = 0; x < stride; x++) {
      const left = x >= channels ? line[x - channels] : 0;
      const up = prevRow[x];
      const upLeft = x >= channels ? prevRow[x - channels] : 0;
      let value: number;
      switch (filter) {
        case 0:
          value = row[x];
          break;
        case 1:
          value = row[x] + left;
          break;
        case 2:
          value = row[x] + up;
          break;
        case 3:
          value = row[x] + Math.floor((left + up) / 2);
          break;
        case 4:
          value = row[x] + paeth(left, up, upLeft);
          break;
        default:
          throw new Error(`bad PNG filter ${filter}`);
      }
      line[x] = value & 0xff;
    }
    prevRow = line;
  }

  const pixels = new Float64Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    const src = i * channels;
    if (channels === 1) {
      const v = out[src] / 255;
      pixels[i * 3] = v;
      pixels[i * 3 + 1] = v;
      pixels[i * 3 + 2] = v;
    } else {
      pixels[i * 3] = out[src] / 255;
      pixels[i * 3 + 1] = out[src + 1] / 255;
      pixels[i * 3 + 2] = out[src + 2] / 255;
    }
  }
  return { width, height, pixels };
}
