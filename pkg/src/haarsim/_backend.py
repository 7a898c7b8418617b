"""Kernel backend selection.

The compiled extension is preferred; the pure-NumPy module is the fallback.
Set ``HAARSIM_DISABLE_EXT=1`` to force the fallback (used by the benchmark
and the backend-agreement tests).
"""

from __future__ import annotations

import os

if os.environ.get("HAARSIM_DISABLE_EXT", "") not in ("", "0"):
    from haarsim import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from haarsim import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built on this install
        from haarsim import _kernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
