"""Inline splitmix64 stream for JIT-compiled sampling loops.

State lives in a caller-owned length-1 uint64 array, so every chain is fully
determined by its seed regardless of numpy's global RNG or numba versions.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_M2 = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_DOUBLE_UNIT = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True)
def rng_double(state):
    """splitmix64 step -> float64 in [0, 1)."""
    state[0] += _SM64_GAMMA
    z = state[0]
    z = (z ^ (z >> _U30)) * _SM64_M1
    z = (z ^ (z >> _U27)) * _SM64_M2
    z = z ^ (z >> _U31)
    return float(z >> _U11) * _DOUBLE_UNIT
