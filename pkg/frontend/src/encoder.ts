/**
 * A small deterministic contextual encoder standing in for a full
 * pre-trained language model.  Weights derive from the model file's seed,
 * so the same model file always produces the same vectors.
 *
 * Text is split into subwords (runs of one script class, at most two
 * characters).  Layer 0 embeds each subword from its characters; each
 * further layer mixes the previous layer through a recurrence that
 * alternates direction per layer, so deeper layers see context from both
 * sides.
 */

import * as fs from 'node:fs';

export interface ModelSpec {
  kind: string;
  dim: number;
  layers: number;
  seed: number;
}

export const MODEL_KIND = 'toy-contextual-encoder';

export function loadModel(path: string): ModelSpec {
  const spec = JSON.parse(fs.readFileSync(path, 'utf-8')) as ModelSpec;
  if (spec.kind !== MODEL_KIND) {
    throw new Error(`${path}: unknown model kind ${spec.kind}`);
  }
  if (!(spec.dim > 0) || !(spec.layers > 0)) {
    throw new Error(`${path}: dim and layers must be positive`);
  }
  return spec;
}

export function writeModel(path: string, dim: number, layers: number, seed: number): void {
  const spec: ModelSpec = { kind: MODEL_KIND, dim, layers, seed };
  fs.writeFileSync(path, JSON.stringify(spec) + '\n', 'utf-8');
}

/** mulberry32: tiny deterministic PRNG over a 32-bit state. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return (((t ^ (t >>> 14)) >>> 0) / 4294967296) * 2 - 1; // [-1, 1)
  };
}

function hash32(...parts: number[]): number {
  let h = 0x811c9dc5;
  for (const p of parts) {
    h ^= p >>> 0;
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export interface Subword {
  start: number; // char offset in the raw text, half-open range
  end: number;
}

type ScriptClass = 'kanji' | 'hiragana' | 'katakana' | 'latin' | 'other';

function classOf(ch: string): ScriptClass {
  const c = ch.codePointAt(0)!;
  if (c >= 0x4e00 && c <= 0x9fff) return 'kanji';
  if (c >= 0x3041 && c <= 0x3096) return 'hiragana';
  if ((c >= 0x30a1 && c <= 0x30fa) || c === 0x30fc) return 'katakana';
  if (/[A-Za-z0-9]/.test(ch)) return 'latin';
  return 'other';
}

const MAX_SUBWORD = 2;

/** Greedy segmentation into same-class runs of at most two characters. */
export function subwordize(text: string): Subword[] {
  const chars = [...text];
  const out: Subword[] = [];
  let i = 0;
  while (i < chars.length) {
    const cls = classOf(chars[i]);
    let j = i + 1;
    while (j < chars.length && j - i < MAX_SUBWORD && classOf(chars[j]) === cls) {
      j += 1;
    }
    out.push({ start: i, end: j });
    i = j;
  }
  return out;
}

export class Encoder {
  private readonly spec: ModelSpec;
  private readonly mix: Float64Array[]; // per layer: dim x dim input mixing
  private readonly rec: Float64Array[]; // per layer: dim x dim recurrence

  constructor(spec: ModelSpec) {
    this.spec = spec;
    this.mix = [];
    this.rec = [];
    const scale = 1.0 / Math.sqrt(spec.dim);
    for (let layer = 0; layer < spec.layers; layer++) {
      const mixRng = mulberry32(hash32(spec.seed, 0x5eed, layer, 1));
      const recRng = mulberry32(hash32(spec.seed, 0x5eed, layer, 2));
      const mix = new Float64Array(spec.dim * spec.dim);
      const rec = new Float64Array(spec.dim * spec.dim);
      for (let k = 0; k < mix.length; k++) mix[k] = mixRng() * scale;
      for (let k = 0; k < rec.length; k++) rec[k] = recRng() * 0.5 * scale;
      this.mix.push(mix);
      this.rec.push(rec);
    }
  }

  get dim(): number {
    return this.spec.dim;
  }

  get layers(): number {
    return this.spec.layers;
  }

  private charVector(ch: string): Float64Array {
    const rng = mulberry32(hash32(this.spec.seed, ch.codePointAt(0)!));
    const v = new Float64Array(this.spec.dim);
    for (let d = 0; d < this.spec.dim; d++) v[d] = rng() * 0.5;
    return v;
  }

  /** Layer-0 embedding: mean of the subword's character vectors. */
  private embedSubword(text: string, sw: Subword): Float64Array {
    const chars = [...text].slice(sw.start, sw.end);
    const v = new Float64Array(this.spec.dim);
    for (const ch of chars) {
      const cv = this.charVector(ch);
      for (let d = 0; d < this.spec.dim; d++) v[d] += cv[d];
    }
    for (let d = 0; d < this.spec.dim; d++) v[d] /= chars.length;
    return v;
  }

  /**
   * Hidden states for every layer: result[layer][subword] is a dim-wide
   * vector.  Even layers run left to right, odd layers right to left.
   */
  encode(text: string, subwords: Subword[]): Float64Array[][] {
    const D = this.spec.dim;
    const n = subwords.length;
    let prev: Float64Array[] = subwords.map((sw) => this.embedSubword(text, sw));
    const all: Float64Array[][] = [];
    for (let layer = 0; layer < this.spec.layers; layer++) {
      const mix = this.mix[layer];
      const rec = this.rec[layer];
      const cur: Float64Array[] = Array.from({ length: n }, () => new Float64Array(D));
      const order = [...Array(n).keys()];
      if (layer % 2 === 1) order.reverse();
      let state = new Float64Array(D);
      for (const t of order) {
        const next = new Float64Array(D);
        for (let i = 0; i < D; i++) {
          let acc = 0;
          for (let j = 0; j < D; j++) {
            acc += mix[i * D + j] * prev[t][j] + rec[i * D + j] * state[j];
          }
          next[i] = Math.tanh(acc);
        }
        cur[t] = next;
        state = next;
      }
      all.push(cur);
      prev = cur;
    }
    return all;
  }
}
