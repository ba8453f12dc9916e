"""Exact information-gain segmentation of daily visit series.

A day's 24 hourly counts are split into K contiguous segments by optimizing
L = H(S) - sum(|s_k|/|S| * H(s_k)), where H is the Shannon entropy of the
value histogram of a span. Two modes are supported:

- ``minimize-eq5``: minimize L (the literal loss), i.e. maximize the
  weighted segment entropy sum;
- ``maximize-ig``: maximize L (treat it as information gain), i.e. minimize
  the weighted segment entropy sum.

Both are solved exactly by dynamic programming; ``segment_bruteforce`` is an
independent enumeration oracle with the same tie-break rule.
"""

from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from math import log2

from promptmine.errors import ConfigError
from promptmine.kernels import counts_entropy, dp_segment

MODE_MIN_EQ5 = "minimize-eq5"
MODE_MAX_IG = "maximize-ig"
MODES = (MODE_MIN_EQ5, MODE_MAX_IG)

# Objectives closer than this count as ties; ties resolve to the
# lexicographically smallest cut vector in both the DP and the oracle.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SegmentPlan:
    """K-segmentation of a fixed-length series."""

    series_len: int
    k: int
    cuts: tuple  # K-1 ascending interior cut indices
    objective: float  # H(S) - sum((|s|/|S|) * H(s)) at the chosen cuts
    series_entropy: float
    segment_entropies: tuple
    mode: str

    def bounds(self):
        """Half-open (start, end) index pairs, one per segment."""
        edges = (0,) + tuple(self.cuts) + (self.series_len,)
        return tuple(zip(edges[:-1], edges[1:]))

    def to_json_dict(self):
        return {
            "cuts": list(self.cuts),
            "objective": self.objective,
            "mode": self.mode,
            "k": self.k,
        }


def hist_entropy(values):
    """Shannon entropy in bits of the empirical distribution over distinct values."""
    values = list(values)
    if not values:
        raise ConfigError("hist_entropy requires a non-empty list")
    return counts_entropy(list(Counter(values).values()))


def _validate(series, k, mode):
    if mode not in MODES:
        raise ConfigError(f"unknown segmentation mode {mode!r}")
    if not series:
        raise ConfigError("cannot segment an empty series")
    if not 1 <= k <= len(series):
        raise ConfigError(f"k={k} out of range for series of length {len(series)}")


def _build_plan(series, cuts, weighted_sum, mode, entropy_fn):
    t = len(series)
    series_entropy = entropy_fn(series)
    edges = [0] + list(cuts) + [t]
    entropies = tuple(
        entropy_fn(series[a:b]) for a, b in zip(edges[:-1], edges[1:])
    )
    return SegmentPlan(
        series_len=t,
        k=len(cuts) + 1,
        cuts=tuple(cuts),
        objective=series_entropy - weighted_sum,
        series_entropy=series_entropy,
        segment_entropies=entropies,
        mode=mode,
    )


def segment(series, k, mode=MODE_MIN_EQ5):
    """Exact optimal K-segmentation via dynamic programming."""
    series = [int(v) for v in series]
    _validate(series, k, mode)
    cuts, weighted = dp_segment(series, k, mode == MODE_MIN_EQ5)
    return _build_plan(series, cuts, weighted, mode, hist_entropy)


def _entropy_direct(span):
    n = len(span)
    h = 0.0
    for c in Counter(span).values():
        p = c / n
        h -= p * log2(p)
    return h + 0.0  # fold -0.0 to +0.0


def segment_bruteforce(series, k, mode=MODE_MIN_EQ5):
    """Enumeration oracle: evaluates every C(len-1, k-1) cut vector.

    Independent of the DP path: interval entropies are recomputed per
    segment with the direct -sum(p*log2(p)) formula.
    """
    series = [int(v) for v in series]
    _validate(series, k, mode)
    t = len(series)
    maximize = mode == MODE_MIN_EQ5

    best_cuts = None
    best_w = None
    for cuts in combinations(range(1, t), k - 1):
        edges = (0,) + cuts + (t,)
        w = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            w += ((b - a) / t) * _entropy_direct(series[a:b])
        if best_w is None:
            best_cuts, best_w = cuts, w
        elif maximize:
            if w > best_w + TIE_TOL:
                best_cuts, best_w = cuts, w
        elif w < best_w - TIE_TOL:
            best_cuts, best_w = cuts, w
    return _build_plan(series, best_cuts, best_w, mode, _entropy_direct)


def fixed_plan(series, cuts, mode="fixed-diurnal"):
    """Plan with caller-chosen cuts (no optimization).

    Used by the diurnal override of the V4 builder and anywhere a
    predetermined segmentation must be wrapped in a plan.
    """
    series = [int(v) for v in series]
    if not series:
        raise ConfigError("cannot segment an empty series")
    cuts = tuple(int(c) for c in cuts)
    if list(cuts) != sorted(set(cuts)) or (cuts and not (0 < cuts[0] and cuts[-1] < len(series))):
        raise ConfigError(f"invalid cut vector {cuts!r} for series of length {len(series)}")
    t = len(series)
    edges = (0,) + cuts + (t,)
    w = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        w += ((b - a) / t) * hist_entropy(series[a:b])
    return _build_plan(series, cuts, w, mode, hist_entropy)


def even_cuts(series_len, k):
    """K-1 evenly spaced interior cuts (nearest-index rounding)."""
    if not 1 <= k <= series_len:
        raise ConfigError(f"k={k} out of range for series of length {series_len}")
    cuts = []
    for i in range(1, k):
        c = (2 * i * series_len + k) // (2 * k)  # round(i*series_len/k)
        cuts.append(min(max(c, i), series_len - (k - i)))
    return cuts


def segment_sums(series, plan):
    """Per-segment sums; always conserve the series total."""
    series = list(series)
    if plan.series_len != len(series):
        raise ConfigError("plan does not match series length")
    return [sum(series[a:b]) for a, b in plan.bounds()]
