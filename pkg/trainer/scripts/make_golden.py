"""Regenerate fixtures/golden_cases.json from the core package.

100 seeded (label tokens, probability rows, text) cases with the core's
entropy-weighted loss values frozen in; the trainer must agree to 1e-6.

Usage: python scripts/make_golden.py  (run from trainer/)
"""

import json
import random
import string

from promptmine.quality import entropy_weighted_loss

GLYPHS = string.ascii_letters + string.digits + ".,;:!?()[]"


def main():
    rng = random.Random(90210)
    cases = []
    for _ in range(100):
        j = rng.randint(1, 10)
        labels = []
        probs = []
        for _ in range(j):
            width = rng.randint(2, 8)
            raw = [rng.uniform(0.05, 1.0) for _ in range(width)]
            total = sum(raw)
            probs.append([x / total for x in raw])
            labels.append(rng.randrange(width))
        k = rng.randint(12, 48)
        repeats = rng.randint(1, 3)
        text = "".join(ch * repeats for ch in rng.sample(GLYPHS, k))
        report = entropy_weighted_loss(labels, probs, text)
        cases.append(
            {
                "label_tokens": labels,
                "probs": probs,
                "text": text,
                "expected": {
                    "cross_entropy": report.cross_entropy,
                    "entropy_bits": report.entropy_bits,
                    "weighted_loss": report.weighted_loss,
                },
            }
        )
    with open("fixtures/golden_cases.json", "w", encoding="utf-8") as fh:
        json.dump(cases, fh, indent=1)
        fh.write("\n")
    print(f"wrote {len(cases)} cases")


if __name__ == "__main__":
    main()
