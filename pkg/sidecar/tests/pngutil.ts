/** Test-side PNG encoder: 8-bit RGB/gray/RGBA with selectable per-row
 * filters, so the decoder is exercised against all filter types. */

import * as zlib from "node:zlib";

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Buffer): number {
  let c = 0xffffffff;
  for (const byte of buf) {
    c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, body: Buffer): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(body.length, 0);
  head.write(type, 4, "ascii");
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(Buffer.concat([head.subarray(4), body])), 0);
  return Buffer.concat([head, body, crc]);
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

export function encodePng(
  raw: Uint8Array,
  width: number,
  height: number,
  channels: 1 | 3 | 4,
  rowFilter: (y: number) => number = () => 0
): Buffer {
  const colorType = channels === 1 ? 0 : channels === 3 ? 2 : 6;
  const stride = width * channels;
  const filtered = Buffer.alloc(height * (stride + 1));
  for (let y = 0; y < height; y++) {
    const f = rowFilter(y);
    filtered[y * (stride + 1)] = f;
    for (let x = 0; x < stride; x++) {
      const cur = raw[y * stride + x];
      const left = x >= channels ? raw[y * stride + x - channels] : 0;
      const up = y > 0 ? raw[(y - 1) * stride + x] : 0;
      const upLeft = y > 0 && x >= channels ? raw[(y - 1) * stride + x - channels] : 0;
      let v: number;
      switch (f) {
        case 0:
          v = cur;
          break;
        case 1:
          v = cur - left;
          break;
        case 2:
          v = cur - up;
          break;
        case 3:
          v = cur - Math.floor((left + up) / 2);
          break;
        case 4:
          v = cur - paeth(left, up, upLeft);
          break;
        default:
          throw new Error(`bad filter ${f}`);
      }
      filtered[y * (stride + 1) + 1 + x] = v & 0xff;
    }
  }

  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr.writeUInt8(8, 8);
  ihdr.writeUInt8(colorType, 9);
  const signature = Buffer.from([137, 80, 78, 71, 13, 10, 26, 10]);
  return Buffer.concat([
    signature,
    chunk("IHDR", ihdr),
    chunk("IDAT", zlib.deflateSync(filtered)),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

export function solidRgb(
  width: number,
  height: number,
  rgb: [number, number, number]
): Uint8Array {
  const raw = new Uint8Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    raw[i * 3] = rgb[0];
    raw[i * 3 + 1] = rgb[1];
    raw[i * 3 + 2] = rgb[2];
  }
  return raw;
}

/** Solid-color rectangle on a black background. */
export function rectImage(
  width: number,
  height: number,
  rgb: [number, number, number],
  x0: number,
  y0: number,
  x1: number,
  y1: number
): Uint8Array {
  const raw = new Uint8Array(width * height * 3);
  for (let y = y0; y < y1; y++) {
    for (let x = x0; x < x1; x++) {
      const i = (y * width + x) * 3;
      raw[i] = rgb[0];
      raw[i + 1] = rgb[1];
      raw[i + 2] = rgb[2];
    }
  }
  return raw;
}

/** Solid-color disc on a black background. */
export function discImage(
  size: number,
  rgb: [number, number, number],
  radius: number
): Uint8Array {
  const raw = new Uint8Array(size * size * 3);
  const c = (size - 1) / 2;
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      if ((x - c) ** 2 + (y - c) ** 2 <= radius * radius) {
        const i = (y * size + x) * 3;
        raw[i] = rgb[0];
        raw[i + 1] = rgb[1];
        raw[i + 2] = rgb[2];
      }
    }
  }
  return raw;
}
