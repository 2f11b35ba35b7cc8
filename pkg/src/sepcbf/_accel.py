"""Optional numba acceleration.

The hot kernels in :mod:`sepcbf.kernels` exist twice: a loop version compiled
with ``numba.njit`` and a vectorized numpy version. The loop version is used
when numba imports cleanly, unless ``SEPCBF_DISABLE_NUMBA`` is set to a truthy
value in the environment.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_FLAG = os.environ.get("SEPCBF_DISABLE_NUMBA", "").strip().lower()
NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` in nopython mode, or return it unchanged without numba."""
    if numba is None:
        return func
    return numba.njit(cache=True, fastmath=False)(func)
