"""Trace-tensor identity harness."""

from functools import reduce

import numpy as np
import pytest

from nambudyn.identities import (
    IDENTITY_NAMES,
    TensorIdentityCase,
    antisymmetrize,
    swap_slot,
    trace_tensor,
    verify_tensor_identity,
)


def test_trace_tensor_contracts_to_trace_of_product():
    rng = np.random.default_rng(0)
    d = 3
    for n in (2, 3, 4):
        mats = [
            rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            for _ in range(n)
        ]
        tensor = trace_tensor(d, n)
        flat = [m.reshape(-1) for m in mats]
        letters = "abcdefgh"[:n]
        value = np.einsum(",".join(letters) + "," + letters, *flat, tensor)
        expected = np.trace(reduce(np.matmul, mats))
        assert abs(value - expected) < 1e-12 * max(1.0, abs(expected))


def test_trace_tensor_is_cyclic():
    t = trace_tensor(3, 3)
    assert np.array_equal(t, np.transpose(t, (2, 0, 1)))


def test_swap_slot_is_transpose_in_that_slot():
    rng = np.random.default_rng(1)
    d = 2
    a = rng.normal(size=(d, d))
    b = rng.normal(size=(d, d))
    t2 = trace_tensor(d, 2)
    swapped = swap_slot(t2, 1, d)
    # contracting the swapped slot with M equals contracting with M^T
    v1 = np.einsum("ab,a,b", swapped, a.reshape(-1), b.reshape(-1))
    v2 = np.einsum("ab,a,b", t2, a.reshape(-1), b.T.reshape(-1))
    assert abs(v1 - v2) < 1e-13


def test_antisymmetrize_kills_symmetric_part():
    rng = np.random.default_rng(2)
    t = rng.normal(size=(4, 4, 4))
    anti = antisymmetrize(t)
    assert np.max(np.abs(anti + np.swapaxes(anti, 0, 1))) < 1e-13


@pytest.mark.parametrize("identity", IDENTITY_NAMES)
@pytest.mark.parametrize("dim", [2, 3, 4, 5])
def test_identity_classes_hold(identity, dim):
    defect = verify_tensor_identity(
        TensorIdentityCase(identity=identity, dim=dim, seed=3)
    )
    assert defect <= 1e-10


def test_case_validation():
    with pytest.raises(ValueError):
        TensorIdentityCase(identity="NotAThing", dim=3)
    with pytest.raises(ValueError):
        TensorIdentityCase(identity="Cyclicity", dim=1)
    with pytest.raises(ValueError):
        verify_tensor_identity(TensorIdentityCase(identity="Cyclicity", dim=9))


def test_seed_variation_stays_small():
    for seed in range(10):
        defect = verify_tensor_identity(
            TensorIdentityCase(identity="L1_pullout", dim=4, seed=seed)
        )
        assert defect <= 1e-10
