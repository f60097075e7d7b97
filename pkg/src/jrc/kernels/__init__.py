"""Hot loops, compiled with numba unless ``JRC_DISABLE_NUMBA`` is set.

Both implementations are importable directly (``jit_kernels``,
``fallback_kernels``); the module-level names point at the active one.

Decoding kernels report ``OK``, ``EMPTY`` (no consistent candidate),
``AMBIGUOUS`` (several candidates where one was required), ``BUDGET`` (node
cap reached) or ``EXHAUSTED`` (nothing left to expand).
"""
from .._accel import USE_NUMBA
from . import _fallback as fallback_kernels
from . import _jit as jit_kernels

OK = 0
EMPTY = 1
AMBIGUOUS = 2
BUDGET = 3
EXHAUSTED = 4

active = jit_kernels if USE_NUMBA else fallback_kernels
BACKEND = "numba" if USE_NUMBA else "numpy"

encode_states = active.encode_states
straightforward = active.straightforward
list_decode = active.list_decode
traceback = active.traceback
seq_decode = active.seq_decode

__all__ = [
    "BACKEND", "OK", "EMPTY", "AMBIGUOUS", "BUDGET", "EXHAUSTED",
    "encode_states", "straightforward", "list_decode", "traceback", "seq_decode",
    "jit_kernels", "fallback_kernels",
]
