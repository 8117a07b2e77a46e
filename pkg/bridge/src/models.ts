// Stub models. A real adapter wraps an actual seq2seq model here: feed it
// source/prompt/prefix, marginalize its subword distribution onto each
// allowed token string, and return one logprob per token. How a multi-
// subword token aggregates (sum of forced subwords vs first-subword mass)
// is the adapter's call; the protocol only requires finite, deterministic
// values.

import type { Model, ScoreRequest } from "./protocol.js";

/** 0.0 for everything: the decoder then ranks purely by the trie tie-break. */
export const echoModel: Model = {
  name: "echo",
  score(request: ScoreRequest): number[] {
    return request.allowed.map(() => 0.0);
  },
};

/** Fixed position-based logprobs: -1.0, -1.5, -2.0, ... over the allowed list. */
export const affineModel: Model = {
  name: "affine",
  score(request: ScoreRequest): number[] {
    return request.allowed.map((_tok, i) => -1.0 - 0.5 * i);
  },
};

/** Shorter tokens score higher: -(length), a crude brevity prior. */
export const neglenModel: Model = {
  name: "neglen",
  score(request: ScoreRequest): number[] {
    return request.allowed.map((tok) => -tok.length);
  },
};

const registry: Record<string, Model> = {
  echo: echoModel,
  affine: affineModel,
  neglen: neglenModel,
};

export function modelByName(name: string): Model {
  const model = registry[name];
  if (!model) {
    throw new Error(`unknown model '${name}' (have: ${Object.keys(registry).join(", ")})`);
  }
  return model;
}
