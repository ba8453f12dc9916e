/**
 * Training-pair JSONL loading and character-level encoding.
 *
 * The on-disk contract with the core pipeline is one JSON object per line:
 * {"input": string, "label": string, "role": "generator" | "cot"}.
 */

import * as fs from "fs";

export class DataError extends Error {}

export interface TrainingPair {
  input: string;
  label: string;
  role: string;
}

export function readPairs(path: string, role?: string): TrainingPair[] {
  let raw: string;
  try {
    raw = fs.readFileSync(path, "utf-8");
  } catch (err) {
    throw new DataError(`cannot read ${path}: ${err}`);
  }
  const pairs: TrainingPair[] = [];
  const lines = raw.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new DataError(`line ${i + 1}: invalid JSON (${err})`);
    }
    const rec = obj as Record<string, unknown>;
    if (typeof rec.input !== "string" || typeof rec.label !== "string" || typeof rec.role !== "string") {
      throw new DataError(`line ${i + 1}: expected string fields input/label/role`);
    }
    if (rec.input.length === 0 || rec.label.length === 0) {
      throw new DataError(`line ${i + 1}: empty input or label`);
    }
    if (!role || rec.role === role) {
      pairs.push({ input: rec.input, label: rec.label, role: rec.role });
    }
  }
  return pairs;
}

// Special token ids occupy the first vocabulary slots.
export const PAD = 0;
export const BOS = 1;
export const SEP = 2;
export const EOS = 3;
export const UNK = 4;
export const N_SPECIAL = 5;

export interface Vocab {
  chars: string[]; // index - N_SPECIAL -> character
  index: Map<string, number>;
}

export function buildVocab(pairs: TrainingPair[]): Vocab {
  const seen = new Set<string>();
  for (const pair of pairs) {
    for (const ch of pair.input) seen.add(ch);
    for (const ch of pair.label) seen.add(ch);
  }
  const chars = Array.from(seen).sort();
  const index = new Map<string, number>();
  chars.forEach((ch, i) => index.set(ch, i + N_SPECIAL));
  return { chars, index };
}

export function vocabSize(vocab: Vocab): number {
  return vocab.chars.length + N_SPECIAL;
}

export function encodeChar(vocab: Vocab, ch: string): number {
  return vocab.index.get(ch) ?? UNK;
}

export function decodeId(vocab: Vocab, id: number): string {
  if (id >= N_SPECIAL && id - N_SPECIAL < vocab.chars.length) {
    return vocab.chars[id - N_SPECIAL];
  }
  return "";
}

export interface EncodedPair {
  /** Full token sequence: BOS input... SEP label... EOS. */
  tokens: number[];
  /** Index of the first position whose TARGET is scored (the first label char). */
  lossStart: number;
}

/**
 * Encode one pair, keeping the tail of long inputs and the head of long
 * labels so sequences stay within budget.
 */
export function encodePair(
  vocab: Vocab,
  pair: TrainingPair,
  inputBudget: number,
  labelBudget: number,
): EncodedPair {
  const input = pair.input.length > inputBudget ? pair.input.slice(-inputBudget) : pair.input;
  const label = pair.label.length > labelBudget ? pair.label.slice(0, labelBudget) : pair.label;
  const tokens: number[] = [BOS];
  for (const ch of input) tokens.push(encodeChar(vocab, ch));
  tokens.push(SEP);
  const lossStart = tokens.length;
  for (const ch of label) tokens.push(encodeChar(vocab, ch));
  tokens.push(EOS);
  return { tokens, lossStart };
}
