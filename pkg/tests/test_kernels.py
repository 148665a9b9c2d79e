"""Backend kernels: permutation tables and antisymmetrized products."""

from functools import reduce
from itertools import permutations

import numpy as np
import pytest

from nambudyn._kernels import (
    BACKEND,
    NATIVE_DIM_LIMIT,
    antisym_chain_sum,
    perm_table,
    signed_trace_sum,
    _pure,
)

try:
    from nambudyn._kernels import _native
except ImportError:
    _native = None


def brute_parity(row):
    sign = 1
    row = list(row)
    for i in range(len(row)):
        for j in range(i + 1, len(row)):
            if row[i] > row[j]:
                sign = -sign
    return sign


def rand_stack(seed, k, d):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(k, d, d)) + 1j * rng.normal(size=(k, d, d))


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_perm_table_matches_bruteforce(k):
    perms, signs = perm_table(k)
    expected = list(permutations(range(k)))
    assert perms.shape == (len(expected), k)
    for row, sign, exp in zip(perms, signs, expected):
        assert tuple(row) == exp
        assert sign == brute_parity(exp)


def test_perm_table_known_signs():
    perms, signs = perm_table(3)
    table = {tuple(p): s for p, s in zip(perms, signs)}
    assert table[(0, 1, 2)] == 1
    assert table[(1, 0, 2)] == -1
    assert table[(1, 2, 0)] == 1


@pytest.mark.parametrize("k,d", [(2, 2), (2, 5), (3, 3), (3, 6), (4, 4)])
def test_antisym_chain_matches_bruteforce(k, d):
    mats = rand_stack(k * 10 + d, k, d)
    expected = np.zeros((d, d), dtype=complex)
    for perm in permutations(range(k)):
        prod = reduce(np.matmul, [mats[p] for p in perm])
        expected += brute_parity(perm) * prod
    got = antisym_chain_sum(mats)
    assert np.max(np.abs(got - expected)) < 1e-12 * max(1.0, np.max(np.abs(expected)))


@pytest.mark.parametrize("k,d", [(2, 3), (3, 4), (4, 3), (5, 2)])
def test_signed_trace_matches_bruteforce(k, d):
    mats = rand_stack(k * 7 + d, k, d)
    expected = 0.0 + 0.0j
    for perm in permutations(range(k)):
        prod = reduce(np.matmul, [mats[p] for p in perm])
        expected += brute_parity(perm) * np.trace(prod)
    got = signed_trace_sum(mats)
    assert abs(got - expected) < 1e-12 * max(1.0, abs(expected))


def test_repeated_matrix_annihilates():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4))
    mats = np.stack([a, b, a])
    assert np.max(np.abs(antisym_chain_sum(mats))) < 1e-12
    assert abs(signed_trace_sum(mats)) < 1e-12


def test_stack_validation():
    with pytest.raises(ValueError):
        antisym_chain_sum(np.zeros((3, 4, 5)))


@pytest.mark.skipif(_native is None, reason="compiled kernel not built")
@pytest.mark.parametrize("k,d", [(2, 4), (3, 5), (4, 4), (5, 3)])
def test_backend_parity(k, d):
    mats = np.ascontiguousarray(rand_stack(k + d, k, d))
    perms, signs = perm_table(k)
    a = np.asarray(_native.antisym_chain_sum(mats, perms, signs))
    b = _pure.antisym_chain_sum(mats, perms, signs)
    scale = max(1.0, float(np.max(np.abs(b))))
    assert np.max(np.abs(a - b)) / scale < 1e-12
    ta = _native.signed_trace_sum(mats, perms, signs)
    tb = _pure.signed_trace_sum(mats, perms, signs)
    assert abs(ta - tb) / max(1.0, abs(tb)) < 1e-12


def test_backend_reported():
    assert BACKEND in ("cython", "numpy")
    assert NATIVE_DIM_LIMIT >= 8
