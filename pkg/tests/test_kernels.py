"""Compiled-vs-pure kernel equivalence.

The Cython extension and the pure-Python fallback must agree bit-for-bit;
the package works the same whichever one import selects.
"""

import random

from promptmine import _kernels_py
from promptmine.kernels import BACKEND

try:
    from promptmine import _kernels
except ImportError:
    _kernels = None


def test_backend_selected():
    assert BACKEND in ("compiled", "python")


def test_compiled_extension_present():
    assert _kernels is not None, "compiled kernels failed to build"
    assert _kernels.BACKEND == "compiled"
    assert _kernels_py.BACKEND == "python"


def test_counts_entropy_identical():
    rng = random.Random(3)
    for _ in range(300):
        counts = [rng.randint(1, 40) for _ in range(rng.randint(1, 30))]
        assert _kernels.counts_entropy(counts) == _kernels_py.counts_entropy(counts)


def test_interval_tables_identical():
    rng = random.Random(4)
    for _ in range(100):
        values = [rng.randint(0, 9) for _ in range(rng.randint(1, 24))]
        assert _kernels.interval_entropy_table(values) == _kernels_py.interval_entropy_table(values)


def test_dp_identical_plans():
    rng = random.Random(5)
    for _ in range(300):
        t = rng.randint(1, 24)
        values = [rng.randint(0, 9) for _ in range(t)]
        k = rng.randint(1, min(6, t))
        for maximize in (True, False):
            cuts_c, w_c = _kernels.dp_segment(values, k, maximize)
            cuts_p, w_p = _kernels_py.dp_segment(values, k, maximize)
            assert cuts_c == cuts_p
            assert w_c == w_p
