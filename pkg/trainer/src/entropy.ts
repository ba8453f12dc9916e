/**
 * Character-level Shannon entropy and the entropy-weighted loss.
 *
 * These mirror the core pipeline's formulas exactly: entropy in bits over
 * the characters of the exact string, cross-entropy as the natural-log
 * token sum, and the weighted loss as their quotient. The golden-file test
 * holds this module to 1e-6 agreement with the core.
 */

export class EmptyTextError extends Error {}

export class ShapeError extends Error {}

export class GateRejectedError extends Error {}

/** Shannon entropy in bits of the character distribution of `text`. */
export function charEntropyBits(text: string): number {
  if (text.length === 0) {
    throw new EmptyTextError("cannot compute entropy of an empty string");
  }
  const counts = new Map<string, number>();
  for (const ch of text) {
    counts.set(ch, (counts.get(ch) ?? 0) + 1);
  }
  let total = 0;
  let acc = 0;
  for (const c of counts.values()) {
    total += c;
    acc += c * Math.log2(c);
  }
  return Math.log2(total) - acc / total;
}

/** Natural-log cross entropy: -sum over positions of ln(probs[j][label_j]). */
export function crossEntropySum(labelTokens: number[], predictedProbs: number[][]): number {
  if (labelTokens.length !== predictedProbs.length) {
    throw new ShapeError(
      `${labelTokens.length} label tokens vs ${predictedProbs.length} probability rows`,
    );
  }
  if (labelTokens.length === 0) {
    throw new ShapeError("need at least one label token");
  }
  let ce = 0;
  for (let j = 0; j < labelTokens.length; j++) {
    const row = predictedProbs[j];
    const total = row.reduce((a, b) => a + b, 0);
    if (Math.abs(total - 1.0) > 1e-6) {
      throw new ShapeError(`probability row ${j} sums to ${total}, not 1`);
    }
    const label = labelTokens[j];
    if (label < 0 || label >= row.length) {
      throw new ShapeError(`label token ${label} out of range at position ${j}`);
    }
    ce -= Math.log(row[label]);
  }
  return ce;
}

export interface WeightedLossReport {
  crossEntropy: number;
  entropyBits: number;
  weightedLoss: number;
}

/**
 * Cross entropy divided by the generated text's character entropy (bits).
 * Texts whose entropy falls below `tau` are gate-rejected, mirroring the
 * core's upstream quality filter.
 */
export function entropyWeightedLoss(
  labelTokens: number[],
  predictedProbs: number[][],
  generatedText: string,
  tau = 3.5,
): WeightedLossReport {
  if (labelTokens.length !== predictedProbs.length) {
    throw new ShapeError(
      `${labelTokens.length} label tokens vs ${predictedProbs.length} probability rows`,
    );
  }
  const entropyBits = charEntropyBits(generatedText);
  if (entropyBits < tau) {
    throw new GateRejectedError(`entropy ${entropyBits.toFixed(4)} below threshold ${tau}`);
  }
  const crossEntropy = crossEntropySum(labelTokens, predictedProbs);
  return { crossEntropy, entropyBits, weightedLoss: crossEntropy / entropyBits };
}

/**
 * Per-sample gate for training: weight 1/H for passing samples, exclusion
 * for the rest (and for degenerate single-character generations).
 */
export function sampleGate(generatedText: string, tau = 3.5): { included: boolean; weight: number } {
  if (generatedText.length === 0) {
    return { included: false, weight: 0 };
  }
  const h = charEntropyBits(generatedText);
  if (h < tau) {
    return { included: false, weight: 0 };
  }
  return { included: true, weight: 1 / h };
}
