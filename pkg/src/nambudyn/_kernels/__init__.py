"""Kernel backend selection.

The compiled extension is used when it imports and the matrices are small;
`NAMBUDYN_PURE=1` forces the numpy fallback. Both backends enumerate
permutations in the same lexicographic order, so each is deterministic run
to run (they differ from each other only by floating-point rounding).
"""

from __future__ import annotations

import os
from functools import lru_cache
from itertools import permutations

import numpy as np

from . import pure as _pure

if os.environ.get("NAMBUDYN_PURE"):
    _native = None
else:
    try:
        from . import _native
    except ImportError:
        _native = None

BACKEND = "cython" if _native is not None else "numpy"

# Above this dimension BLAS matmuls win over the compiled triple loop
# (measured crossover near d=12; see benchmarks/bench_kernels.py).
NATIVE_DIM_LIMIT = 12


def _parity(row: tuple) -> int:
    sign = 1
    seen = [False] * len(row)
    for start in range(len(row)):
        if seen[start]:
            continue
        length = 0
        pos = start
        while not seen[pos]:
            seen[pos] = True
            pos = row[pos]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def perm_table(k: int):
    """Lexicographic permutations of range(k) with signatures, as arrays."""
    rows = list(permutations(range(k)))
    perms = np.array(rows, dtype=np.int64)
    signs = np.array([_parity(row) for row in rows], dtype=np.int8)
    perms.setflags(write=False)
    signs.setflags(write=False)
    return perms, signs


def _stack(mats) -> np.ndarray:
    arr = np.ascontiguousarray(mats, dtype=np.complex128)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError(f"expected stacked square matrices, got shape {arr.shape}")
    return arr


def antisym_chain_sum(mats) -> np.ndarray:
    """Totally antisymmetrized product: sum over all orderings with parity signs."""
    arr = _stack(mats)
    perms, signs = perm_table(arr.shape[0])
    if _native is not None and arr.shape[1] <= NATIVE_DIM_LIMIT:
        return _native.antisym_chain_sum(arr, perms, signs)
    return _pure.antisym_chain_sum(arr, perms, signs)


def signed_trace_sum(mats) -> complex:
    """Signed sum of traces of products over all orderings."""
    arr = _stack(mats)
    perms, signs = perm_table(arr.shape[0])
    if _native is not None and arr.shape[1] <= NATIVE_DIM_LIMIT:
        return _native.signed_trace_sum(arr, perms, signs)
    return complex(_pure.signed_trace_sum(arr, perms, signs))
