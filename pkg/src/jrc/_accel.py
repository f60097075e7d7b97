"""Optional numba acceleration.

Set ``JRC_DISABLE_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT``) to run the
pure numpy/Python fallback kernels instead of the compiled ones.
"""
import os

_FALSY = ("", "0", "false", "no", "off")

DISABLED = (
    os.environ.get("JRC_DISABLE_NUMBA", "").strip().lower() not in _FALSY
    or os.environ.get("NUMBA_DISABLE_JIT", "").strip().lower() not in _FALSY
)

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is importable.

    The returned object always exposes the original function as ``py_func``,
    mirroring numba's dispatcher, so callers can reach either path.
    """
    if not HAVE_NUMBA:
        fn.py_func = fn
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
