"""Backend selection for the numeric kernels.

Set ``MECHLAB_DISABLE_NUMBA=1`` (or ``MECHLAB_BACKEND=numpy``) to force the
pure-numpy kernels. Without numba installed the numpy path is used silently.
"""
import os

try:
    from numba import njit as _numba_njit
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on environment
    _numba_njit = None
    NUMBA_AVAILABLE = False

_flag = os.environ.get("MECHLAB_DISABLE_NUMBA", "").strip().lower()
_backend = os.environ.get("MECHLAB_BACKEND", "").strip().lower()

USE_NUMBA = (NUMBA_AVAILABLE and _flag not in ("1", "true", "yes")
             and _backend != "numpy")
BACKEND = "numba" if USE_NUMBA else "numpy"


def jit(fn):
    """Compile ``fn`` in nopython mode when numba is importable."""
    if _numba_njit is None:
        return fn
    return _numba_njit(cache=True, nogil=True)(fn)
