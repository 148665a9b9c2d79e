"""numpy implementations of the permutation-sum kernels."""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def antisym_chain_sum(mats, perms, signs):
    """Sum of sign * mats[p[0]] @ ... @ mats[p[k-1]] over permutation rows.

    Summation order follows the rows of `perms` so results are reproducible
    bit for bit.
    """
    d = mats.shape[1]
    out = np.zeros((d, d), dtype=np.complex128)
    for row, sign in zip(perms, signs):
        prod = mats[row[0]]
        for idx in row[1:]:
            prod = prod @ mats[idx]
        out += sign * prod
    return out


def signed_trace_sum(mats, perms, signs):
    """Sum of sign * Tr(mats[p[0]] @ ... @ mats[p[k-1]]) over permutation rows."""
    total = 0.0 + 0.0j
    for row, sign in zip(perms, signs):
        prod = mats[row[0]]
        for idx in row[1:]:
            prod = prod @ mats[idx]
        total += sign * np.trace(prod)
    return total
