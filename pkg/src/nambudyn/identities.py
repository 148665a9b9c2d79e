"""Numerical harness for the trace-tensor identities.

The n-slot trace tensor T is the orthonormal-basis kernel with
T[a_1..a_n] = prod_i delta(col_i, row_{i+1}) (cyclic), flattened over
composite indices a = row*d + col, so that contracting every slot with
matrix entries gives Tr(M_1 M_2 .. M_n). Raising or lowering a slot is
the (row, col) swap of that composite index.

Each identity is checked two ways: entrywise on explicitly built tensors
(memoized per dimension) and by contracting both sides against seeded
random complex matrices. The reported defect is the max of the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from ._kernels import antisym_chain_sum, perm_table, signed_trace_sum

IDENTITY_NAMES = (
    "Cyclicity",
    "CutAndGlue",
    "Annihilation",
    "DragAndDrop",
    "L1_even_vanish",
    "L1_pullout",
    "L1_omega_kill",
)

_LETTERS = "abcdefghijklmnop"


@dataclass(frozen=True)
class TensorIdentityCase:
    identity: str
    dim: int
    seed: int = 0

    def __post_init__(self):
        if self.identity not in IDENTITY_NAMES:
            raise ValueError(f"unknown identity {self.identity!r}")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")


@lru_cache(maxsize=None)
def trace_tensor(d: int, n: int) -> np.ndarray:
    """The n-slot trace tensor, shape (d*d,) * n."""
    subs_in = []
    for i in range(n):
        col_i = _LETTERS[2 * i + 1]
        row_next = _LETTERS[2 * ((i + 1) % n)]
        subs_in.append(col_i + row_next)
    out = _LETTERS[: 2 * n]
    eyes = [np.eye(d)] * n
    tensor = np.einsum(",".join(subs_in) + "->" + out, *eyes)
    tensor = np.ascontiguousarray(tensor.reshape((d * d,) * n))
    tensor.setflags(write=False)
    return tensor


def swap_slot(tensor: np.ndarray, axis: int, d: int) -> np.ndarray:
    """Raise/lower one composite slot: swap its (row, col) pair."""
    shape = tensor.shape[:axis] + (d, d) + tensor.shape[axis + 1 :]
    expanded = tensor.reshape(shape)
    expanded = np.swapaxes(expanded, axis, axis + 1)
    return np.ascontiguousarray(expanded).reshape(tensor.shape)


def antisymmetrize(tensor: np.ndarray, slots=None) -> np.ndarray:
    """Average of signed slot permutations over the given slots (default all)."""
    n = tensor.ndim
    slots = list(range(n)) if slots is None else list(slots)
    perms, signs = perm_table(len(slots))
    out = np.zeros_like(tensor)
    for row, sign in zip(perms, signs):
        axes = list(range(n))
        for i, slot in enumerate(slots):
            axes[slot] = slots[row[i]]
        out += sign * np.transpose(tensor, axes)
    return out / len(perms)


def _contract(tensor: np.ndarray, mats) -> complex:
    """Full contraction of every slot with flattened matrix entries."""
    vecs = [np.asarray(m, dtype=np.complex128).reshape(-1) for m in mats]
    n = tensor.ndim
    subs = ",".join(_LETTERS[i] for i in range(n))
    return complex(np.einsum(_LETTERS[:n] + "," + subs + "->", tensor, *vecs))


def _random_mats(rng, d: int, count: int) -> list:
    return [
        rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        for _ in range(count)
    ]


def _tr(mats) -> complex:
    return complex(np.trace(reduce(np.matmul, mats)))


@lru_cache(maxsize=None)
def _tensor_defect(identity: str, d: int) -> float:
    """Entrywise tensor-level defect of the identity; seed-independent."""
    if identity == "Cyclicity":
        t3 = trace_tensor(d, 3)
        rolled = np.transpose(t3, (2, 0, 1))
        return float(np.max(np.abs(t3 - rolled)))
    if identity == "CutAndGlue":
        t3 = trace_tensor(d, 3)
        lowered = swap_slot(t3, 0, d)
        lhs = np.einsum("abx,xcd->abcd", t3, lowered)
        return float(np.max(np.abs(lhs - trace_tensor(d, 4))))
    if identity == "Annihilation":
        t3 = trace_tensor(d, 3)
        omega = np.eye(d).reshape(-1)
        lhs = np.einsum("axc,x->ac", t3, omega)
        return float(np.max(np.abs(lhs - trace_tensor(d, 2))))
    if identity == "DragAndDrop":
        host = trace_tensor(d, 3)
        block = swap_slot(trace_tensor(d, 2), 1, d)
        lhs = np.einsum("axc,bx->abc", host, block)
        return float(np.max(np.abs(lhs - trace_tensor(d, 3))))
    if identity == "L1_even_vanish":
        return float(np.max(np.abs(antisymmetrize(trace_tensor(d, 4)))))
    if identity == "L1_pullout":
        t3 = trace_tensor(d, 3)
        full = antisymmetrize(t3)
        partial = antisymmetrize(t3, slots=[1, 2])
        return float(np.max(np.abs(full - partial)))
    if identity == "L1_omega_kill":
        omega_big = 2.0 * antisymmetrize(trace_tensor(d, 3))
        omega = np.eye(d).reshape(-1)
        worst = 0.0
        for slot in range(3):
            subs = "abc"
            killed = np.einsum(
                f"abc,{subs[slot]}->" + subs.replace(subs[slot], ""),
                omega_big,
                omega,
            )
            worst = max(worst, float(np.max(np.abs(killed))))
        return worst
    raise ValueError(f"unknown identity {identity!r}")


def _seeded_defect(identity: str, d: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    if identity == "Cyclicity":
        a, b, c = _random_mats(rng, d, 3)
        return max(
            abs(_tr([a, b, c]) - _tr([c, a, b])),
            abs(_tr([a, b, c]) - _tr([b, c, a])),
        )
    if identity == "CutAndGlue":
        a, b, c, e = _random_mats(rng, d, 4)
        lhs = _contract(
            np.einsum(
                "abx,xcd->abcd",
                trace_tensor(d, 3),
                swap_slot(trace_tensor(d, 3), 0, d),
            ),
            [a, b, c, e],
        )
        return abs(lhs - _tr([a, b, c, e]))
    if identity == "Annihilation":
        a, b = _random_mats(rng, d, 2)
        lhs = _tr([a, np.eye(d), b])
        return abs(lhs - _tr([a, b]))
    if identity == "DragAndDrop":
        a, b, c = _random_mats(rng, d, 3)
        host = trace_tensor(d, 3)
        block = swap_slot(trace_tensor(d, 2), 1, d)
        lhs = _contract(np.einsum("axc,bx->abc", host, block), [a, b, c])
        return abs(lhs - _tr([a, b, c]))
    if identity == "L1_even_vanish":
        mats = np.array(_random_mats(rng, d, 4))
        return abs(signed_trace_sum(mats))
    if identity == "L1_pullout":
        mats = np.array(_random_mats(rng, d, 3))
        full = signed_trace_sum(mats) / 6.0
        reduced = np.trace(mats[0] @ antisym_chain_sum(mats[1:])) / 2.0
        return abs(full - reduced)
    if identity == "L1_omega_kill":
        a, b = _random_mats(rng, d, 2)
        worst = 0.0
        for slot in range(3):
            mats = [a, b]
            mats.insert(slot, np.eye(d))
            worst = max(worst, abs(signed_trace_sum(np.array(mats))))
        return worst
    raise ValueError(f"unknown identity {identity!r}")


def verify_tensor_identity(case: TensorIdentityCase) -> float:
    """Max absolute defect of the identity, tensor-level and seeded."""
    if case.dim > 8:
        raise ValueError("dim must be <= 8 (cost control)")
    return max(
        _tensor_defect(case.identity, case.dim),
        _seeded_defect(case.identity, case.dim, case.seed),
    )
