"""Pure-Python fallback for the compiled segmentation/entropy kernels.

Floating-point operation order is kept identical to the Cython module in
``_kernels.pyx`` so that both backends return bit-identical results; any
change here must be mirrored there.
"""

from math import log2

BACKEND = "python"

# Candidate objectives within this distance are treated as ties and resolved
# toward the lexicographically smallest cut vector.
TIE_TOL = 1e-12


def counts_entropy(counts):
    """Shannon entropy in bits of a histogram given as positive counts.

    Uses H = log2(N) - sum(c*log2(c))/N, which is exact for the degenerate
    single-symbol case.
    """
    total = 0
    acc = 0.0
    for c in counts:
        total += c
        acc += c * log2(c)
    return log2(total) - acc / total


def interval_entropy_table(values):
    """Entropy in bits of every half-open interval of an integer series.

    Returns a nested list ``h`` with ``h[i][j]`` = entropy of values[i:j]
    for j > i (other entries are 0.0). Built by extending each interval one
    element at a time with an O(1) histogram update.
    """
    t = len(values)
    table = [[0.0] * (t + 1) for _ in range(t)]
    for i in range(t):
        counts = {}
        acc = 0.0
        row = table[i]
        for j in range(i + 1, t + 1):
            v = values[j - 1]
            c = counts.get(v, 0)
            if c > 0:
                acc -= c * log2(c)
            c += 1
            counts[v] = c
            acc += c * log2(c)
            n = j - i
            row[j] = log2(n) - acc / n
    return table


def dp_segment(values, k, maximize_weighted):
    """Optimal K-segmentation of an integer series, exactly.

    Optimizes W = sum over segments of (len(segment)/len(series)) * H(segment)
    (maximized when ``maximize_weighted``, minimized otherwise) by dynamic
    programming over suffixes. Among optima, returns the lexicographically
    smallest cut vector; candidates within TIE_TOL of the optimum count as
    ties. Returns ``(cuts, weighted_sum)``.
    """
    t = len(values)
    table = interval_entropy_table(values)
    ft = float(t)

    def cost(i, j):
        return (float(j - i) / ft) * table[i][j]

    # best[r][i]: optimal W for splitting values[i:] into r segments.
    best = [[0.0] * (t + 1) for _ in range(k + 1)]
    for i in range(t):
        best[1][i] = cost(i, t)
    for r in range(2, k + 1):
        for i in range(t - r + 1):
            opt = None
            for j in range(i + 1, t - r + 2):
                cand = cost(i, j) + best[r - 1][j]
                if opt is None or (cand > opt if maximize_weighted else cand < opt):
                    opt = cand
            best[r][i] = opt

    cuts = []
    i = 0
    for r in range(k, 1, -1):
        target = best[r][i]
        for j in range(i + 1, t - r + 2):
            if abs(cost(i, j) + best[r - 1][j] - target) <= TIE_TOL:
                cuts.append(j)
                i = j
                break
    return cuts, best[k][0]
