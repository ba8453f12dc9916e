"""Benchmark: compiled Cython kernels vs the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--days 20000] [--k 4]

Times the hot path of the pipeline (per-day interval entropies + DP
segmentation, plus histogram entropy) on synthetic 24-hour series and
reports the speedup. Both backends must return identical plans.
"""

import argparse
import random
import time

from promptmine import _kernels, _kernels_py


def make_days(count, seed=42):
    rng = random.Random(seed)
    return [[rng.randint(0, 9) for _ in range(24)] for _ in range(count)]


def bench(fn, days, k):
    start = time.perf_counter()
    out = [fn(day, k, True) for day in days]
    return time.perf_counter() - start, out


def bench_entropy(module, days):
    counts = [[day.count(v) for v in sorted(set(day))] for day in days]
    start = time.perf_counter()
    for c in counts:
        module.counts_entropy(c)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--days", type=int, default=20000, help="number of 24-hour series")
    parser.add_argument("--k", type=int, default=4, help="segments per day")
    args = parser.parse_args()

    days = make_days(args.days)
    print(f"workload: {args.days} days x 24 hours, K={args.k}\n")

    t_c, plans_c = bench(_kernels.dp_segment, days, args.k)
    t_p, plans_p = bench(_kernels_py.dp_segment, days, args.k)
    assert plans_c == plans_p, "backends disagree"
    print(f"{'kernel':<22}{'compiled':>12}{'pure':>12}{'speedup':>10}")
    print(f"{'dp_segment (s)':<22}{t_c:>12.3f}{t_p:>12.3f}{t_p / t_c:>9.1f}x")

    e_c = bench_entropy(_kernels, days)
    e_p = bench_entropy(_kernels_py, days)
    print(f"{'counts_entropy (s)':<22}{e_c:>12.3f}{e_p:>12.3f}{e_p / e_c:>9.1f}x")

    per_day_c = t_c / args.days * 1e6
    per_day_p = t_p / args.days * 1e6
    print(f"\nper-day segmentation: compiled {per_day_c:.1f} us, pure {per_day_p:.1f} us")


if __name__ == "__main__":
    main()
