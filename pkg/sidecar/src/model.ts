/**
 * Deterministic built-in vision-language embedder.
 *
 * Images and prompts both map onto a shared bank of semantic anchors
 * (colors and coarse shape/layout statistics, plus hashed slots for
 * out-of-lexicon words). Anchor activations are projected through a
 * fixed orthonormal 512-column matrix and L2-normalized, so cosine
 * similarity in the output space equals cosine in anchor space.
 *
 * No downloaded weights: behavior is a pure function of this source.
 */

import { DecodedImage } from "./png.js";

export const MODEL_NAME = "mini-vlm";
export const DIM = 512;

const COLOR_NAMES = [
  "red",
  "orange",
  "yellow",
  "green",
  "cyan",
  "blue",
  "purple",
  "magenta",
  "white",
  "black",
  "gray",
] as const;
const HUES = [0, 30, 60, 120, 180, 240, 275, 315]; // chromatic anchors
const STRUCTURE_NAMES = ["blob", "square", "scattered", "uniform", "textured"] as const;
const HASH_SLOTS = 16;
const N_ANCHORS = COLOR_NAMES.length + STRUCTURE_NAMES.length + HASH_SLOTS;

const STRUCT_BASE = COLOR_NAMES.length;
const HASH_BASE = STRUCT_BASE + STRUCTURE_NAMES.length;

// ---------------------------------------------------------------- projection

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussianPairs(rand: () => number, n: number): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i += 2) {
    const u = Math.max(rand(), 1e-12);
    const v = rand();
    const r = Math.sqrt(-2 * Math.log(u));
    out[i] = r * Math.cos(2 * Math.PI * v);
    if (i + 1 < n) out[i + 1] = r * Math.sin(2 * Math.PI * v);
  }
  return out;
}

/** DIM x N_ANCHORS with orthonormal columns, from a fixed seed. */
function buildProjection(): Float64Array[] {
  const rand = mulberry32(0x5eed1234);
  const cols: Float64Array[] = [];
  for (let c = 0; c < N_ANCHORS; c++) {
    const col = gaussianPairs(rand, DIM);
    for (const prev of cols) {
      let dot = 0;
      for (let i = 0; i < DIM; i++) dot += col[i] * prev[i];
      for (let i = 0; i < DIM; i++) col[i] -= dot * prev[i];
    }
    let norm = 0;
    for (let i = 0; i < DIM; i++) norm += col[i] * col[i];
    norm = Math.sqrt(norm);
    for (let i = 0; i < DIM; i++) col[i] /= norm;
    cols.push(col);
  }
  return cols;
}

const PROJECTION = buildProjection();

function project(anchors: Float64Array): number[] {
  const out = new Float64Array(DIM);
  for (let c = 0; c < N_ANCHORS; c++) {
    const w = anchors[c];
    if (w === 0) continue;
    const col = PROJECTION[c];
    for (let i = 0; i < DIM; i++) out[i] += w * col[i];
  }
  let norm = 0;
  for (let i = 0; i < DIM; i++) norm += out[i] * out[i];
  norm = Math.sqrt(norm);
  if (norm < 1e-12) {
    const fallback = new Array(DIM).fill(0);
    fallback[0] = 1;
    return fallback;
  }
  return Array.from(out, (v) => v / norm);
}

// ---------------------------------------------------------------- image path

function rgbToHsv(r: number, g: number, b: number): [number, number, number] {
  const max = Math.max(r, g, b);
  const min = Math.min(r, g, b);
  const d = max - min;
  let h = 0;
  if (d > 1e-9) {
    if (max === r) h = 60 * (((g - b) / d) % 6);
    else if (max === g) h = 60 * ((b - r) / d + 2);
    else h = 60 * ((r - g) / d + 4);
  }
  if (h < 0) h += 360;
  const s = max < 1e-9 ? 0 : d / max;
  return [h, s, max];
}

function clamp01(x: number): number {
  return x < 0 ? 0 : x > 1 ? 1 : x;
}

export function imageAnchors(img: DecodedImage): Float64Array {
  const { width, height, pixels } = img;
  const n = width * height;
  const anchors = new Float64Array(N_ANCHORS);

  const lum = new Float64Array(n);
  let lumMean = 0;
  const fgIdx: number[] = [];
  for (let i = 0; i < n; i++) {
    const r = pixels[i * 3];
    const g = pixels[i * 3 + 1];
    const b = pixels[i * 3 + 2];
    const [h, s, v] = rgbToHsv(r, g, b);
    lum[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    lumMean += lum[i];

    for (let c = 0; c < HUES.length; c++) {
      let dh = Math.abs(h - HUES[c]);
      if (dh > 180) dh = 360 - dh;
      anchors[c] += Math.exp(-(dh * dh) / (2 * 22 * 22)) * s * v;
    }
    anchors[8] += clamp01((v - 0.6) / 0.4) * clamp01((0.25 - s) / 0.25); // white
    anchors[9] += clamp01((0.22 - v) / 0.22); // black
    anchors[10] +=
      clamp01((0.3 - s) / 0.3) * clamp01(1 - Math.abs(v - 0.5) / 0.45); // gray

    if (v >= 0.2) fgIdx.push(i);
  }
  for (let c = 0; c < COLOR_NAMES.length; c++) anchors[c] /= n;
  lumMean /= n;

  // layout statistics over the foreground mask
  const frac = fgIdx.length / n;
  let lumVar = 0;
  for (let i = 0; i < n; i++) lumVar += (lum[i] - lumMean) ** 2;
  const lumStd = Math.sqrt(lumVar / n);
  anchors[STRUCT_BASE + 3] = clamp01(1 - lumStd * 6); // uniform

  let grad = 0;
  for (let y = 0; y < height - 1; y++) {
    for (let x = 0; x < width - 1; x++) {
      const i = y * width + x;
      grad += Math.abs(lum[i + 1] - lum[i]) + Math.abs(lum[i + width] - lum[i]);
    }
  }
  anchors[STRUCT_BASE + 4] = clamp01((grad / n) * 4); // textured

  if (frac > 0.002 && frac < 0.85) {
    let cx = 0;
    let cy = 0;
    let minX = width;
    let maxX = 0;
    let minY = height;
    let maxY = 0;
    for (const i of fgIdx) {
      const x = i % width;
      const y = (i / width) | 0;
      cx += x;
      cy += y;
      if (x < minX) minX = x;
      if (x > maxX) maxX = x;
      if (y < minY) minY = y;
      if (y > maxY) maxY = y;
    }
    cx /= fgIdx.length;
    cy /= fgIdx.length;
    let meanDist = 0;
    for (const i of fgIdx) {
      const x = i % width;
      const y = (i / width) | 0;
      meanDist += Math.hypot(x - cx, y - cy);
    }
    meanDist /= fgIdx.length;
    // a filled disc of the same area has mean centroid distance 2R/3
    const discR = Math.sqrt(fgIdx.length / Math.PI);
    const blob = clamp01(((2 / 3) * discR) / Math.max(meanDist, 1e-9));
    anchors[STRUCT_BASE + 0] = blob * clamp01(frac * 8);

    const bboxArea = (maxX - minX + 1) * (maxY - minY + 1);
    const fill = fgIdx.length / bboxArea;
    anchors[STRUCT_BASE + 1] = clamp01((fill - 0.82) / 0.18) * clamp01(frac * 8);

    let boundary = 0;
    const fgSet = new Uint8Array(n);
    for (const i of fgIdx) fgSet[i] = 1;
    for (const i of fgIdx) {
      const x = i % width;
      const y = (i / width) | 0;
      if (
        x === 0 ||
        x === width - 1 ||
        y === 0 ||
        y === height - 1 ||
        !fgSet[i - 1] ||
        !fgSet[i + 1] ||
        !fgSet[i - width] ||
        !fgSet[i + width]
      ) {
        boundary++;
      }
    }
    anchors[STRUCT_BASE + 2] = clamp01((boundary / fgIdx.length - 0.35) / 0.65);
  }
  return anchors;
}

// ---------------------------------------------------------------- text path

const LEXICON: Record<string, Array<[number, number]>> = {};

function addWords(words: string[], anchor: number, weight = 1.0): void {
  for (const w of words) {
    (LEXICON[w] ??= []).push([anchor, weight]);
  }
}

COLOR_NAMES.forEach((name, idx) => addWords([name], idx));
addWords(["crimson", "scarlet", "ruby"], 0);
addWords(["amber", "tangerine"], 1);
addWords(["gold", "golden"], 2, 0.8);
addWords(["lime", "emerald"], 3);
addWords(["teal", "turquoise", "aqua"], 4);
addWords(["navy", "azure", "indigo"], 5);
addWords(["violet", "lavender"], 6);
addWords(["pink", "rose"], 7, 0.8);
addWords(["grey", "silver"], 10);
addWords(["dark"], 9, 0.5);
addWords(["bright", "light"], 8, 0.4);

addWords(
  ["blob", "circle", "disc", "disk", "ball", "dot", "sphere", "round", "cell",
   "organism", "creature", "amoeba", "bacteria"],
  STRUCT_BASE + 0
);
addWords(["square", "box", "rectangle", "block", "cube", "grid"], STRUCT_BASE + 1);
addWords(
  ["scattered", "particles", "dust", "spray", "swarm", "specks", "stars", "noise"],
  STRUCT_BASE + 2
);
addWords(["empty", "plain", "blank", "smooth", "flat"], STRUCT_BASE + 3);
addWords(["textured", "pattern", "patterns", "detailed", "complex"], STRUCT_BASE + 4);

const STOPWORDS = new Set([
  "a", "an", "the", "of", "in", "on", "with", "and", "or", "to", "is", "are",
  "some", "one", "two", "image", "picture", "photo",
]);

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

export function textAnchors(prompt: string): Float64Array {
  const anchors = new Float64Array(N_ANCHORS);
  const words = prompt
    .toLowerCase()
    .split(/[^a-z]+/)
    .filter((w) => w.length > 0 && !STOPWORDS.has(w));
  for (const word of words) {
    const hits = LEXICON[word];
    if (hits) {
      for (const [anchor, weight] of hits) anchors[anchor] += weight;
    } else {
      anchors[HASH_BASE + (fnv1a(word) % HASH_SLOTS)] += 0.4;
    }
  }
  if (anchors.every((v) => v === 0)) {
    anchors[HASH_BASE + (fnv1a(prompt) % HASH_SLOTS)] = 1;
  }
  return anchors;
}

// ---------------------------------------------------------------- public api

function normalized(anchors: Float64Array): Float64Array {
  let norm = 0;
  for (const v of anchors) norm += v * v;
  norm = Math.sqrt(norm);
  if (norm < 1e-12) {
    const out = new Float64Array(N_ANCHORS);
    out[9] = 1; // treat a featureless input as black
    return out;
  }
  return anchors.map((v) => v / norm) as Float64Array;
}

export function embedImage(img: DecodedImage): number[] {
  return project(normalized(imageAnchors(img)));
}

export function embedText(prompt: string): number[] {
  if (prompt.length === 0) {
    throw new Error("empty prompt");
  }
  return project(normalized(textAnchors(prompt)));
}
