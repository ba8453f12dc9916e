import * as fs from "fs";
import * as path from "path";

import { describe, expect, it } from "vitest";

import { entropyWeightedLoss } from "../src/entropy";

interface GoldenCase {
  label_tokens: number[];
  probs: number[][];
  text: string;
  expected: { cross_entropy: number; entropy_bits: number; weighted_loss: number };
}

const GOLDEN = path.join(__dirname, "..", "fixtures", "golden_cases.json");

describe("golden-file agreement with the core pipeline", () => {
  const cases = JSON.parse(fs.readFileSync(GOLDEN, "utf-8")) as GoldenCase[];

  it("ships one hundred cases", () => {
    expect(cases.length).toBe(100);
  });

  it("matches the core's weighted loss to 1e-6 on every case", () => {
    for (const c of cases) {
      const report = entropyWeightedLoss(c.label_tokens, c.probs, c.text);
      expect(Math.abs(report.crossEntropy - c.expected.cross_entropy)).toBeLessThanOrEqual(1e-6);
      expect(Math.abs(report.entropyBits - c.expected.entropy_bits)).toBeLessThanOrEqual(1e-6);
      expect(Math.abs(report.weightedLoss - c.expected.weighted_loss)).toBeLessThanOrEqual(1e-6);
    }
  });
});
