/**
 * Training loop for the generator (entropy-weighted loss) and CoT (plain
 * cross-entropy) roles.
 *
 * Generator role: at the start of each epoch the model samples one
 * continuation per training pair (temperature 1, seeded); each sample's
 * token cross-entropy is weighted by 1 / H(sampled text) and samples whose
 * sampled text falls below the entropy threshold are excluded from the
 * batch loss, mirroring the core's quality gate. CoT role: unweighted CE.
 *
 * Early stopping: training stops after exactly `earlyStopPatience`
 * consecutive epochs without validation improvement.
 */

import * as fs from "fs";
import * as path from "path";

import { DataError, EncodedPair, TrainingPair, Vocab, buildVocab, encodePair, PAD } from "./data";
import { sampleGate } from "./entropy";
import { CharLm, DEFAULT_DIMS, ModelDims, makeRng, saveCheckpoint } from "./model";

export class DivergenceError extends Error {}

export interface TrainerConfig {
  pairsPath: string;
  role: "generator" | "cot";
  outDir: string;
  batchSize: number;
  dropout: number;
  learningRate: number;
  earlyStopPatience: number;
  maxTokens: number;
  tau: number;
  seed: number;
  maxEpochs: number;
  valFraction: number;
  inputBudget: number;
  dims: ModelDims;
}

export function defaultConfig(pairsPath: string, role: "generator" | "cot", outDir: string): TrainerConfig {
  return {
    pairsPath,
    role,
    outDir,
    batchSize: 5,
    dropout: 0.1,
    learningRate: 5e-5,
    earlyStopPatience: 3,
    maxTokens: 512,
    tau: 3.5,
    seed: 42,
    maxEpochs: 20,
    valFraction: 0.2,
    inputBudget: 128,
    dims: DEFAULT_DIMS,
  };
}

interface Adam {
  m: Record<string, Float64Array>;
  v: Record<string, Float64Array>;
  t: number;
}

function makeAdam(model: CharLm): Adam {
  const m: Record<string, Float64Array> = {};
  const v: Record<string, Float64Array> = {};
  for (const [name, arr] of Object.entries(model.paramArrays())) {
    m[name] = new Float64Array(arr.length);
    v[name] = new Float64Array(arr.length);
  }
  return { m, v, t: 0 };
}

function adamStep(model: CharLm, grads: Record<string, Float64Array>, adam: Adam, lr: number): void {
  const beta1 = 0.9;
  const beta2 = 0.999;
  const eps = 1e-8;
  adam.t += 1;
  const correction1 = 1 - Math.pow(beta1, adam.t);
  const correction2 = 1 - Math.pow(beta2, adam.t);
  for (const [name, param] of Object.entries(model.paramArrays())) {
    const g = grads[name];
    const m = adam.m[name];
    const v = adam.v[name];
    for (let i = 0; i < param.length; i++) {
      m[i] = beta1 * m[i] + (1 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
      param[i] -= (lr * (m[i] / correction1)) / (Math.sqrt(v[i] / correction2) + eps);
    }
  }
}

function zeroGrads(model: CharLm): Record<string, Float64Array> {
  const grads: Record<string, Float64Array> = {};
  for (const [name, arr] of Object.entries(model.paramArrays())) {
    grads[name] = new Float64Array(arr.length);
  }
  return grads;
}

/**
 * Accumulate gradients for one encoded sequence with sample weight
 * `weight`; returns the sequence's (unweighted) token cross-entropy sum
 * and token count. When `dropRng` is set, inverted dropout with the
 * configured rate is applied to the hidden layer.
 */
function backwardSequence(
  model: CharLm,
  grads: Record<string, Float64Array>,
  encoded: EncodedPair,
  weight: number,
  gradScale: number,
  dropout: number,
  dropRng?: () => number,
): { ceSum: number; tokens: number } {
  const { context: c, embed: d, hidden: h } = model.dims;
  const v = model.v;
  const context: number[] = new Array(c).fill(PAD);
  const x = new Float64Array(c * d);
  const a = new Float64Array(h);
  const mask = new Float64Array(h);
  const dz2 = new Float64Array(v);
  const dz1 = new Float64Array(h);
  let ceSum = 0;
  let tokens = 0;

  const { tokens: seq, lossStart } = encoded;
  for (let pos = 1; pos < seq.length; pos++) {
    context.shift();
    context.push(seq[pos - 1]);
    if (pos < lossStart) continue;
    const target = seq[pos];

    // forward
    for (let i = 0; i < c; i++) {
      const row = context[i] * d;
      for (let j = 0; j < d; j++) x[i * d + j] = model.embed[row + j];
    }
    for (let k = 0; k < h; k++) {
      let z = model.b1[k];
      for (let i = 0; i < c * d; i++) z += x[i] * model.w1[i * h + k];
      a[k] = Math.tanh(z);
      if (dropRng) {
        mask[k] = dropRng() < dropout ? 0 : 1 / (1 - dropout);
        a[k] *= mask[k];
      } else {
        mask[k] = 1;
      }
    }
    let max = -Infinity;
    const logits = new Float64Array(v);
    for (let o = 0; o < v; o++) {
      let z = model.b2[o];
      for (let k = 0; k < h; k++) z += a[k] * model.w2[k * v + o];
      logits[o] = z;
      if (z > max) max = z;
    }
    let total = 0;
    for (let o = 0; o < v; o++) {
      logits[o] = Math.exp(logits[o] - max);
      total += logits[o];
    }
    const pTarget = logits[target] / total;
    ceSum -= Math.log(Math.max(pTarget, 1e-300));
    tokens += 1;

    // backward (scaled by the per-sample weight and batch normalizer)
    const scale = weight * gradScale;
    if (scale === 0) continue;
    for (let o = 0; o < v; o++) {
      dz2[o] = (logits[o] / total - (o === target ? 1 : 0)) * scale;
    }
    const gB2 = grads.b2;
    const gW2 = grads.w2;
    for (let o = 0; o < v; o++) gB2[o] += dz2[o];
    for (let k = 0; k < h; k++) {
      let da = 0;
      const ak = a[k];
      const base = k * v;
      for (let o = 0; o < v; o++) {
        gW2[base + o] += ak * dz2[o];
        da += model.w2[base + o] * dz2[o];
      }
      // tanh' through the dropout mask; a[k] already includes the mask
      const pre = mask[k] === 0 ? 0 : ak / mask[k];
      dz1[k] = da * mask[k] * (1 - pre * pre);
    }
    const gB1 = grads.b1;
    const gW1 = grads.w1;
    const gE = grads.embed;
    for (let k = 0; k < h; k++) gB1[k] += dz1[k];
    for (let i = 0; i < c * d; i++) {
      const xi = x[i];
      let dx = 0;
      const base = i * h;
      for (let k = 0; k < h; k++) {
        gW1[base + k] += xi * dz1[k];
        dx += model.w1[base + k] * dz1[k];
      }
      const tokenId = context[(i / d) | 0];
      gE[tokenId * d + (i % d)] += dx;
    }
  }
  return { ceSum, tokens };
}

/** Mean per-token cross entropy over a set of encoded sequences (no dropout). */
export function evaluateLoss(model: CharLm, encoded: EncodedPair[]): number {
  const grads = zeroGrads(model); // unused sink; weight 0 skips backward
  let ce = 0;
  let tokens = 0;
  for (const seq of encoded) {
    const r = backwardSequence(model, grads, seq, 0, 0, 0);
    ce += r.ceSum;
    tokens += r.tokens;
  }
  return tokens > 0 ? ce / tokens : NaN;
}

export interface EpochRecord {
  epoch: number;
  trainLoss: number;
  valLoss: number;
  bestValLoss: number;
  includedFraction: number;
}

export interface TrainResult {
  model: CharLm;
  vocab: Vocab;
  history: EpochRecord[];
  epochsTrained: number;
  stoppedEarly: boolean;
  checkpointPath: string;
  curvePath: string;
}

export function train(config: TrainerConfig, pairs: TrainingPair[]): TrainResult {
  if (pairs.length < 2) {
    throw new DataError("need at least two training pairs");
  }
  const vocab = buildVocab(pairs);
  const model = new CharLm(vocab, config.dims, config.seed);
  const adam = makeAdam(model);
  const rng = makeRng(config.seed + 1);

  const encoded = pairs.map((p) => encodePair(vocab, p, config.inputBudget, config.maxTokens));
  const order = encoded.map((_, i) => i);
  const nVal = Math.max(1, Math.floor(encoded.length * config.valFraction));
  shuffle(order, rng);
  const valIdx = order.slice(0, nVal);
  const trainIdx = order.slice(nVal);
  if (trainIdx.length === 0) {
    throw new DataError("validation split consumed every pair");
  }
  const valSet = valIdx.map((i) => encoded[i]);

  const history: EpochRecord[] = [];
  let best = Infinity;
  let stagnant = 0;
  let stoppedEarly = false;

  for (let epoch = 1; epoch <= config.maxEpochs; epoch++) {
    // sampling checkpoint: per-pair gate weights for the generator role
    const weightByPair = new Float64Array(pairs.length).fill(1);
    let included = trainIdx.length;
    if (config.role === "generator") {
      const sampleRng = makeRng(config.seed + 100 + epoch);
      included = 0;
      for (const idx of trainIdx) {
        const generated = model.generate(pairs[idx].input, 160, 1.0, sampleRng);
        const gate = sampleGate(generated, config.tau);
        weightByPair[idx] = gate.included ? gate.weight : 0;
        if (gate.included) included += 1;
      }
    }

    shuffle(trainIdx, rng);
    let epochCe = 0;
    let epochTokens = 0;
    for (let start = 0; start < trainIdx.length; start += config.batchSize) {
      const batch = trainIdx.slice(start, start + config.batchSize);
      const active = batch.filter((idx) => weightByPair[idx] > 0).length;
      if (active === 0) continue;
      const grads = zeroGrads(model);
      const gradScale = 1 / active;
      for (const idx of batch) {
        const r = backwardSequence(
          model,
          grads,
          encoded[idx],
          weightByPair[idx],
          gradScale,
          config.dropout,
          rng,
        );
        epochCe += r.ceSum;
        epochTokens += r.tokens;
      }
      adamStep(model, grads, adam, config.learningRate);
    }

    const trainLoss = epochTokens > 0 ? epochCe / epochTokens : NaN;
    const valLoss = evaluateLoss(model, valSet);
    if (!Number.isFinite(trainLoss) || !Number.isFinite(valLoss)) {
      throw new DivergenceError(`loss diverged at epoch ${epoch} (train=${trainLoss}, val=${valLoss})`);
    }
    if (valLoss < best - 1e-12) {
      best = valLoss;
      stagnant = 0;
    } else {
      stagnant += 1;
    }
    history.push({
      epoch,
      trainLoss,
      valLoss,
      bestValLoss: best,
      includedFraction: trainIdx.length ? included / trainIdx.length : 0,
    });
    if (stagnant >= config.earlyStopPatience) {
      stoppedEarly = true;
      break;
    }
  }

  fs.mkdirSync(config.outDir, { recursive: true });
  const checkpointPath = path.join(config.outDir, "checkpoint.json");
  fs.writeFileSync(checkpointPath, JSON.stringify(saveCheckpoint(model, config.role)));
  const curvePath = path.join(config.outDir, "losses.csv");
  const lines = ["epoch,train_loss,val_loss,best_val_loss,included_fraction"];
  for (const rec of history) {
    lines.push(
      `${rec.epoch},${rec.trainLoss.toFixed(6)},${rec.valLoss.toFixed(6)},` +
        `${rec.bestValLoss.toFixed(6)},${rec.includedFraction.toFixed(4)}`,
    );
  }
  fs.writeFileSync(curvePath, lines.join("\n") + "\n");

  return {
    model,
    vocab,
    history,
    epochsTrained: history.length,
    stoppedEarly,
    checkpointPath,
    curvePath,
  };
}

function shuffle(arr: number[], rng: () => number): void {
  for (let i = arr.length - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [arr[i], arr[j]] = [arr[j], arr[i]];
  }
}
