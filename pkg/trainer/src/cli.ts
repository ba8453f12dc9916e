/**
 * Trainer CLI.
 *
 *   node dist/cli.js train --pairs pairs.jsonl --role generator --out runs/g
 *   node dist/cli.js serve --checkpoint runs/g/checkpoint.json --port 8089
 *   node dist/cli.js golden --cases fixtures/golden_cases.json
 */

import * as fs from "fs";

import { readPairs } from "./data";
import { entropyWeightedLoss } from "./entropy";
import { serve } from "./server";
import { defaultConfig, train } from "./train";

interface Flags {
  [key: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed flag ${key}`);
    }
    flags[key.slice(2)] = argv[i + 1];
  }
  return flags;
}

function cmdTrain(flags: Flags): number {
  const role = (flags.role ?? "generator") as "generator" | "cot";
  if (role !== "generator" && role !== "cot") {
    throw new Error(`unknown role ${flags.role}`);
  }
  if (!flags.pairs) throw new Error("--pairs is required");
  const config = defaultConfig(flags.pairs, role, flags.out ?? `runs/${role}`);
  if (flags["learning-rate"]) config.learningRate = Number(flags["learning-rate"]);
  if (flags["max-epochs"]) config.maxEpochs = Number(flags["max-epochs"]);
  if (flags.seed) config.seed = Number(flags.seed);
  if (flags.tau) config.tau = Number(flags.tau);
  const pairs = readPairs(config.pairsPath, role);
  const result = train(config, pairs);
  const last = result.history[result.history.length - 1];
  console.log(
    `trained ${result.epochsTrained} epochs` +
      (result.stoppedEarly ? " (early stop)" : "") +
      `; best val loss ${last.bestValLoss.toFixed(4)}`,
  );
  console.log(`checkpoint: ${result.checkpointPath}`);
  console.log(`loss curve: ${result.curvePath}`);
  return 0;
}

async function cmdServe(flags: Flags): Promise<number> {
  if (!flags.checkpoint) throw new Error("--checkpoint is required");
  const port = Number(flags.port ?? 8089);
  await serve({ checkpointPath: flags.checkpoint, port });
  console.log(`serving POST /generate on port ${port}`);
  return -1; // keep running
}

interface GoldenCase {
  label_tokens: number[];
  probs: number[][];
  text: string;
  expected: { cross_entropy: number; entropy_bits: number; weighted_loss: number };
}

function cmdGolden(flags: Flags): number {
  const path = flags.cases ?? "fixtures/golden_cases.json";
  const cases = JSON.parse(fs.readFileSync(path, "utf-8")) as GoldenCase[];
  let worst = 0;
  for (const c of cases) {
    const report = entropyWeightedLoss(c.label_tokens, c.probs, c.text);
    worst = Math.max(
      worst,
      Math.abs(report.weightedLoss - c.expected.weighted_loss),
      Math.abs(report.crossEntropy - c.expected.cross_entropy),
      Math.abs(report.entropyBits - c.expected.entropy_bits),
    );
  }
  console.log(`${cases.length} cases, worst disagreement ${worst.toExponential(2)}`);
  if (worst > 1e-6) {
    console.error("FAIL: disagreement exceeds 1e-6");
    return 1;
  }
  console.log("PASS");
  return 0;
}

async function main(): Promise<void> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    const flags = parseFlags(rest);
    let code: number;
    if (command === "train") code = cmdTrain(flags);
    else if (command === "serve") code = await cmdServe(flags);
    else if (command === "golden") code = cmdGolden(flags);
    else {
      console.error("usage: cli.js train|serve|golden [--flags]");
      code = 1;
    }
    if (code >= 0) process.exit(code);
  } catch (err) {
    console.error(String(err));
    process.exit(1);
  }
}

if (require.main === module) {
  void main();
}
