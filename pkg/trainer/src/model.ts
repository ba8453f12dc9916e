/**
 * A small character-level causal language model.
 *
 * Fixed-width context window: the previous C token embeddings feed one
 * tanh hidden layer (inverted dropout during training) and a softmax over
 * the vocabulary. Gradients are hand-derived; the optimizer is Adam.
 * Deliberately tiny - the training contract (loss shape, gating, early
 * stopping, serving) is what matters at this scale, not fluency.
 */

import { PAD, Vocab, decodeId, encodeChar, vocabSize, BOS, SEP, EOS } from "./data";

export interface ModelDims {
  context: number;
  embed: number;
  hidden: number;
}

export const DEFAULT_DIMS: ModelDims = { context: 6, embed: 12, hidden: 48 };

export interface Checkpoint {
  formatVersion: number;
  role: string;
  dims: ModelDims;
  vocabChars: string[];
  params: Record<string, number[]>;
}

/** Deterministic 32-bit PRNG (mulberry32). */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussian(rng: () => number): number {
  // Box-Muller; rng() is in [0, 1)
  const u = Math.max(rng(), 1e-12);
  const v = rng();
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
}

export class CharLm {
  readonly vocab: Vocab;
  readonly dims: ModelDims;
  readonly v: number;
  embed: Float64Array; // v x d
  w1: Float64Array; // (C*d) x h
  b1: Float64Array; // h
  w2: Float64Array; // h x v
  b2: Float64Array; // v

  constructor(vocab: Vocab, dims: ModelDims = DEFAULT_DIMS, seed = 0) {
    this.vocab = vocab;
    this.dims = dims;
    this.v = vocabSize(vocab);
    const rng = makeRng(seed * 2654435761 + 12345);
    const { context, embed, hidden } = dims;
    this.embed = this.init(this.v * embed, 0.08, rng);
    this.w1 = this.init(context * embed * hidden, 0.08, rng);
    this.b1 = new Float64Array(hidden);
    this.w2 = this.init(hidden * this.v, 0.08, rng);
    this.b2 = new Float64Array(this.v);
  }

  private init(n: number, scale: number, rng: () => number): Float64Array {
    const arr = new Float64Array(n);
    for (let i = 0; i < n; i++) arr[i] = gaussian(rng) * scale;
    return arr;
  }

  paramArrays(): Record<string, Float64Array> {
    return { embed: this.embed, w1: this.w1, b1: this.b1, w2: this.w2, b2: this.b2 };
  }

  /** Softmax probabilities for the next token given the context ids. */
  probs(context: number[]): Float64Array {
    const { embed: d, hidden: h } = this.dims;
    const c = this.dims.context;
    const x = new Float64Array(c * d);
    for (let i = 0; i < c; i++) {
      const row = context[i] * d;
      for (let j = 0; j < d; j++) x[i * d + j] = this.embed[row + j];
    }
    const a = new Float64Array(h);
    for (let k = 0; k < h; k++) {
      let z = this.b1[k];
      for (let i = 0; i < c * d; i++) z += x[i] * this.w1[i * h + k];
      a[k] = Math.tanh(z);
    }
    const logits = new Float64Array(this.v);
    for (let o = 0; o < this.v; o++) {
      let z = this.b2[o];
      for (let k = 0; k < h; k++) z += a[k] * this.w2[k * this.v + o];
      logits[o] = z;
    }
    return softmax(logits, 1.0);
  }

  /**
   * Greedy (temperature 0) or ancestral-sampled continuation of `prompt`.
   * Generation stops at EOS or after maxChars characters.
   */
  generate(prompt: string, maxChars: number, temperature: number, rng?: () => number): string {
    const c = this.dims.context;
    const context: number[] = new Array(c).fill(PAD);
    const push = (id: number) => {
      context.shift();
      context.push(id);
    };
    push(BOS);
    const tail = prompt.length > 256 ? prompt.slice(-256) : prompt;
    for (const ch of tail) push(encodeChar(this.vocab, ch));
    push(SEP);
    let out = "";
    for (let step = 0; step < maxChars; step++) {
      const p = this.probs(context);
      let next: number;
      if (temperature <= 0 || !rng) {
        next = argmax(p);
      } else {
        next = sampleFrom(p, temperature, rng);
      }
      if (next === EOS) break;
      out += decodeId(this.vocab, next);
      push(next);
    }
    return out;
  }
}

export function softmax(logits: Float64Array, temperature: number): Float64Array {
  const out = new Float64Array(logits.length);
  let max = -Infinity;
  for (const z of logits) if (z > max) max = z;
  let total = 0;
  for (let i = 0; i < logits.length; i++) {
    const e = Math.exp((logits[i] - max) / temperature);
    out[i] = e;
    total += e;
  }
  for (let i = 0; i < logits.length; i++) out[i] /= total;
  return out;
}

export function argmax(p: Float64Array): number {
  let best = 0;
  for (let i = 1; i < p.length; i++) if (p[i] > p[best]) best = i;
  return best;
}

function sampleFrom(p: Float64Array, temperature: number, rng: () => number): number {
  let probs = p;
  if (temperature !== 1.0) {
    const logits = new Float64Array(p.length);
    for (let i = 0; i < p.length; i++) logits[i] = Math.log(Math.max(p[i], 1e-30));
    probs = softmax(logits, temperature);
  }
  const u = rng();
  let acc = 0;
  for (let i = 0; i < probs.length; i++) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.length - 1;
}

export function saveCheckpoint(model: CharLm, role: string): Checkpoint {
  const params: Record<string, number[]> = {};
  for (const [name, arr] of Object.entries(model.paramArrays())) {
    params[name] = Array.from(arr);
  }
  return {
    formatVersion: 1,
    role,
    dims: model.dims,
    vocabChars: model.vocab.chars,
    params,
  };
}

export function loadCheckpoint(checkpoint: Checkpoint): CharLm {
  if (checkpoint.formatVersion !== 1) {
    throw new Error(`unsupported checkpoint version ${checkpoint.formatVersion}`);
  }
  const index = new Map<string, number>();
  checkpoint.vocabChars.forEach((ch, i) => index.set(ch, i + 5));
  const model = new CharLm({ chars: checkpoint.vocabChars, index }, checkpoint.dims, 0);
  const arrays = model.paramArrays();
  for (const [name, values] of Object.entries(checkpoint.params)) {
    const target = arrays[name];
    if (!target || target.length !== values.length) {
      throw new Error(`checkpoint parameter ${name} has unexpected shape`);
    }
    target.set(values);
  }
  return model;
}
