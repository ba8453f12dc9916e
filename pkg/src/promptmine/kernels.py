"""Kernel backend selection.

The compiled Cython extension is preferred; the pure-Python module is a
drop-in fallback with identical semantics. Set PROMPTMINE_PURE=1 to force
the fallback (used by tests and the benchmark).
"""

import os

if os.environ.get("PROMPTMINE_PURE"):
    from promptmine._kernels_py import (  # noqa: F401
        BACKEND,
        counts_entropy,
        dp_segment,
        interval_entropy_table,
    )
else:
    try:
        from promptmine._kernels import (  # noqa: F401
            BACKEND,
            counts_entropy,
            dp_segment,
            interval_entropy_table,
        )
    except ImportError:
        from promptmine._kernels_py import (  # noqa: F401
            BACKEND,
            counts_entropy,
            dp_segment,
            interval_entropy_table,
        )


def backend_name():
    """Name of the active kernel backend: "compiled" or "python"."""
    return BACKEND
