# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled segmentation/entropy kernels.

Must stay semantically and floating-point identical to ``_kernels_py.py``
(same operation order, no FMA contraction - see setup.py compile flags).
"""

from libc.math cimport log2
from libc.stdlib cimport free, malloc

BACKEND = "compiled"

cdef double TIE_TOL = 1e-12


def counts_entropy(counts):
    """Shannon entropy in bits of a histogram given as positive counts."""
    cdef long long total = 0
    cdef double acc = 0.0
    cdef long long c
    for c in counts:
        total += c
        acc += c * log2(<double>c)
    return log2(<double>total) - acc / <double>total


cdef long long* _dense_ids(values, Py_ssize_t t, Py_ssize_t* m_out) except NULL:
    """Map arbitrary int values to dense ids 0..m-1 (first-occurrence order)."""
    cdef long long* ids = <long long*>malloc(t * sizeof(long long))
    if ids == NULL:
        raise MemoryError()
    mapping = {}
    cdef Py_ssize_t i
    for i in range(t):
        v = values[i]
        ids[i] = mapping.setdefault(v, len(mapping))
    m_out[0] = len(mapping)
    return ids


def interval_entropy_table(values):
    """Entropy in bits of every half-open interval; nested-list layout
    matching the pure-Python backend."""
    cdef Py_ssize_t t = len(values)
    cdef Py_ssize_t m = 0
    cdef long long* ids = _dense_ids(values, t, &m)
    cdef long long* cnt = <long long*>malloc(m * sizeof(long long))
    if cnt == NULL:
        free(ids)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef long long v, c, n
    cdef double acc
    table = []
    try:
        for i in range(t):
            for j in range(m):
                cnt[j] = 0
            acc = 0.0
            row = [0.0] * (t + 1)
            for j in range(i + 1, t + 1):
                v = ids[j - 1]
                c = cnt[v]
                if c > 0:
                    acc -= c * log2(<double>c)
                c += 1
                cnt[v] = c
                acc += c * log2(<double>c)
                n = j - i
                row[j] = log2(<double>n) - acc / <double>n
            table.append(row)
    finally:
        free(cnt)
        free(ids)
    return table


def dp_segment(values, int k, bint maximize_weighted):
    """Optimal K-segmentation; see the pure backend for the contract."""
    cdef Py_ssize_t t = len(values)
    cdef Py_ssize_t m = 0
    cdef long long* ids = _dense_ids(values, t, &m)
    cdef long long* cnt = <long long*>malloc(m * sizeof(long long))
    cdef double* h = <double*>malloc(t * (t + 1) * sizeof(double))
    cdef double* best = <double*>malloc((k + 1) * (t + 1) * sizeof(double))
    if cnt == NULL or h == NULL or best == NULL:
        free(ids); free(cnt); free(h); free(best)
        raise MemoryError()

    cdef Py_ssize_t i, j
    cdef int r
    cdef long long v, c, n
    cdef double acc, cand, opt, target, ft
    cdef bint have
    cuts = []
    try:
        for i in range(t):
            for j in range(m):
                cnt[j] = 0
            acc = 0.0
            for j in range(t + 1):
                h[i * (t + 1) + j] = 0.0
            for j in range(i + 1, t + 1):
                v = ids[j - 1]
                c = cnt[v]
                if c > 0:
                    acc -= c * log2(<double>c)
                c += 1
                cnt[v] = c
                acc += c * log2(<double>c)
                n = j - i
                h[i * (t + 1) + j] = log2(<double>n) - acc / <double>n

        ft = <double>t
        for i in range(t):
            best[1 * (t + 1) + i] = (<double>(t - i) / ft) * h[i * (t + 1) + t]
        for r in range(2, k + 1):
            for i in range(t - r + 1):
                have = False
                opt = 0.0
                for j in range(i + 1, t - r + 2):
                    cand = (<double>(j - i) / ft) * h[i * (t + 1) + j] + best[(r - 1) * (t + 1) + j]
                    if not have or (cand > opt if maximize_weighted else cand < opt):
                        opt = cand
                        have = True
                best[r * (t + 1) + i] = opt

        i = 0
        for r in range(k, 1, -1):
            target = best[r * (t + 1) + i]
            for j in range(i + 1, t - r + 2):
                cand = (<double>(j - i) / ft) * h[i * (t + 1) + j] + best[(r - 1) * (t + 1) + j]
                if cand - target <= TIE_TOL and target - cand <= TIE_TOL:
                    cuts.append(j)
                    i = j
                    break
        result = best[k * (t + 1) + 0]
    finally:
        free(ids); free(cnt); free(h); free(best)
    return cuts, result
