/**
 * Deterministic text encoder.
 *
 * Each whitespace token hashes to a seed, the seed drives a small
 * PRNG that emits a fixed pseudo-random direction, and the text's
 * vector is the L2-normalized mean of its token directions. No model
 * weights are involved, so output depends only on the text, the
 * dimension, and the encoder version baked into the model name.
 */

export interface EncoderConfig {
  model: string;
  dim: number;
  maxBatch: number;
}

export const DEFAULTS: EncoderConfig = {
  model: "hashed-mean-v1",
  dim: 384,
  maxBatch: 64,
};

export function configFromEnv(env: NodeJS.ProcessEnv = process.env): EncoderConfig {
  const dim = env.EMBED_DIM ? Number(env.EMBED_DIM) : DEFAULTS.dim;
  const maxBatch = env.MAX_BATCH ? Number(env.MAX_BATCH) : DEFAULTS.maxBatch;
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`EMBED_DIM must be a positive integer, got ${env.EMBED_DIM}`);
  }
  if (!Number.isInteger(maxBatch) || maxBatch < 1) {
    throw new Error(`MAX_BATCH must be a positive integer, got ${env.MAX_BATCH}`);
  }
  return { model: env.EMBED_MODEL ?? DEFAULTS.model, dim, maxBatch };
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function tokenDirection(token: string, dim: number): Float64Array {
  const next = mulberry32(fnv1a(token));
  const out = new Float64Array(dim);
  for (let i = 0; i < dim; i++) {
    out[i] = next() * 2 - 1;
  }
  return out;
}

export function encode(text: string, dim: number): number[] {
  const tokens = text.toLowerCase().split(/\s+/).filter((t) => t.length > 0);
  const sum = new Float64Array(dim);
  for (const token of tokens) {
    const dir = tokenDirection(token, dim);
    for (let i = 0; i < dim; i++) {
      sum[i] += dir[i];
    }
  }
  if (tokens.length > 0) {
    for (let i = 0; i < dim; i++) {
      sum[i] /= tokens.length;
    }
  }
  let norm = 0;
  for (let i = 0; i < dim; i++) {
    norm += sum[i] * sum[i];
  }
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < dim; i++) {
      sum[i] /= norm;
    }
  }
  return Array.from(sum);
}

export function encodeBatch(texts: string[], dim: number): number[][] {
  return texts.map((text) => encode(text, dim));
}
