"""Multi-bracket engine.

Scalar (2m+1)-brackets over generator gradients, equation-of-motion
right-hand sides as antisymmetrized gradient products, the Jacobi defect
of the reduced 2-bracket, the duality rotation, and convenience builders
for the multi-Hamiltonian bracket families.

Normalization: with gradients G_i = gradient(gens[i], rho),

    bracket(gens; rho) = (1/n) * sum over all n! orderings of
                         sgn * Tr(G .. G)
                       = sum over (n-1)! orderings fixing G_1 first,

and the flow reads  d(rho)/dt = z * sum_{orderings} sgn * G_.. G_..
over the n-1 generator gradients. The multiplier z is -1j when
n = 4m+3 and 1.0 when n = 4m+1, which makes the arity-3 flow with
S = C_2/2 exactly -i[H, rho].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Generator, Operator, as_array, gradient
from .errors import DimensionMismatch, OddCount
from .identities import TensorIdentityCase, verify_tensor_identity

__all__ = [
    "BracketSpec",
    "TensorIdentityCase",
    "antisym_product",
    "default_multiplier",
    "duality_rotate",
    "eom_rhs",
    "jacobi_defect",
    "linear_multi_hamiltonian_spec",
    "quantized_nambu_spec",
    "scalar_bracket",
    "theorem1_check",
    "verify_tensor_identity",
]

#: Largest supported bracket arity (permutation sums are enumerated).
MAX_ARITY = 9


def default_multiplier(arity: int) -> complex:
    """-1j for arity 4m+3, 1.0 for arity 4m+1 (keeps the flow Hermitian)."""
    if arity % 4 == 3:
        return -1j
    return 1.0 + 0.0j


@dataclass(frozen=True)
class BracketSpec:
    """Arity, ordered generators (the rho slot is implicit first), multiplier.

    generators must hold arity-1 entries; z defaults per arity and must be
    purely imaginary for arity 4m+3, purely real for arity 4m+1.
    """

    arity: int
    generators: tuple
    z: complex = None

    def __post_init__(self):
        n = self.arity
        if n % 2 == 0:
            raise OddCount(f"bracket arity must be odd, got {n}")
        if not 3 <= n <= MAX_ARITY:
            raise ValueError(f"arity must be in 3..{MAX_ARITY}, got {n}")
        gens = tuple(self.generators)
        if len(gens) != n - 1:
            raise DimensionMismatch(
                f"arity {n} needs {n - 1} generators, got {len(gens)}"
            )
        z = self.z
        if z is None:
            z = default_multiplier(n)
        z = complex(z)
        tol = 1e-12 * max(abs(z), 1.0)
        if n % 4 == 3 and abs(z.real) > tol:
            raise ValueError(f"arity {n} needs purely imaginary z, got {z}")
        if n % 4 == 1 and abs(z.imag) > tol:
            raise ValueError(f"arity {n} needs purely real z, got {z}")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "z", z)


def quantized_nambu_spec(hamiltonians, entropies, z=None) -> BracketSpec:
    """(2n+1)-bracket flow driven by n linear Hamiltonians and n entropies.

    Nonlinear for n > 1; its right-hand side vanishes on pure states.
    """
    hams = [Generator.linear(h) if not isinstance(h, Generator) else h
            for h in hamiltonians]
    ents = list(entropies)
    if len(hams) != len(ents):
        raise DimensionMismatch(
            f"{len(hams)} Hamiltonians vs {len(ents)} entropies"
        )
    return BracketSpec(arity=2 * len(hams) + 1, generators=tuple(hams + ents), z=z)


def linear_multi_hamiltonian_spec(hamiltonians, z=None) -> BracketSpec:
    """(n+2)-bracket flow: n linear Hamiltonians plus the C_2/2 slot.

    Linear in rho, trace-preserving, but does not in general conserve
    Tr(rho^m) for m > 1.
    """
    hams = [Generator.linear(h) if not isinstance(h, Generator) else h
            for h in hamiltonians]
    gens = tuple(hams) + (Generator.casimir(2, 0.5),)
    return BracketSpec(arity=len(hams) + 2, generators=gens, z=z)


def _stacked_entries(ops) -> np.ndarray:
    arrs = [as_array(op) for op in ops]
    d = arrs[0].shape[0]
    for a in arrs:
        if a.shape != (d, d):
            raise DimensionMismatch(
                f"mixed operator dimensions: {a.shape} vs ({d}, {d})"
            )
    return np.array(arrs, dtype=np.complex128)


def antisym_product(ops) -> Operator:
    """Totally antisymmetrized product of an even number of operators."""
    ops = list(ops)
    if len(ops) % 2 != 0:
        raise OddCount(f"antisymmetrized product needs an even count, got {len(ops)}")
    if not ops:
        raise OddCount("antisymmetrized product needs at least 2 operators")
    if len(ops) > MAX_ARITY - 1:
        raise ValueError(f"at most {MAX_ARITY - 1} factors supported")
    return Operator(_kernels.antisym_chain_sum(_stacked_entries(ops)))


def _scalar_bracket_entries(grads: np.ndarray, cross_check: bool) -> complex:
    reduced = complex(
        np.trace(grads[0] @ _kernels.antisym_chain_sum(grads[1:]))
    )
    if cross_check:
        n = grads.shape[0]
        full = _kernels.signed_trace_sum(grads) / n
        scale = max(abs(reduced), abs(full), 1.0)
        if abs(full - reduced) > 1e-12 * scale:
            raise ArithmeticError(
                f"bracket formulas disagree: reduced {reduced} vs full {full}"
            )
    return reduced


def scalar_bracket(gens, rho, cross_check: bool = False) -> complex:
    """Bracket value for n generators at rho.

    Evaluated by the reduced sum (first gradient fixed, (n-1)! orderings of
    the rest); cross_check also runs the full n!-term signed trace sum and
    errors on disagreement beyond 1e-12 relative.
    """
    gens = list(gens)
    n = len(gens)
    if n % 2 == 0:
        raise OddCount(f"bracket needs an odd number of generators, got {n}")
    if not 3 <= n <= MAX_ARITY:
        raise ValueError(f"bracket arity must be in 3..{MAX_ARITY}, got {n}")
    rho_arr = as_array(rho)
    grads = np.array(
        [g.gradient_array(rho_arr) for g in gens], dtype=np.complex128
    )
    return _scalar_bracket_entries(grads, cross_check)


def eom_rhs(spec: BracketSpec, rho) -> Operator:
    """Right-hand side z * antisym_product(gradients) of the bracket flow."""
    rho_arr = as_array(rho)
    grads = np.array(
        [g.gradient_array(rho_arr) for g in spec.generators],
        dtype=np.complex128,
    )
    return Operator(spec.z * _kernels.antisym_chain_sum(grads))


def eom_rhs_array(spec: BracketSpec, rho_arr: np.ndarray) -> np.ndarray:
    """Array-in, array-out variant used by the integrator hot loop."""
    grads = np.array(
        [g.gradient_array(rho_arr) for g in spec.generators],
        dtype=np.complex128,
    )
    return spec.z * _kernels.antisym_chain_sum(grads)


def hermitian_basis(d: int) -> list:
    """Trace-orthonormal Hermitian basis: Tr(B_a B_b) = delta_ab."""
    basis = []
    for i in range(d):
        b = np.zeros((d, d), dtype=np.complex128)
        b[i, i] = 1.0
        basis.append(b)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            b = np.zeros((d, d), dtype=np.complex128)
            b[i, j] = inv_sqrt2
            b[j, i] = inv_sqrt2
            basis.append(b)
            b = np.zeros((d, d), dtype=np.complex128)
            b[i, j] = 1j * inv_sqrt2
            b[j, i] = -1j * inv_sqrt2
            basis.append(b)
    return basis


def _fd_gradient(func, rho_arr: np.ndarray, step: float) -> np.ndarray:
    """Gradient operator of a scalar functional via central differences.

    Directions run over the trace-orthonormal Hermitian basis; for the
    polynomial functionals used here the reconstruction
    sum_k c_k B_k is exact up to the O(step^2) difference error.
    """
    grad = np.zeros_like(rho_arr)
    for b in hermitian_basis(rho_arr.shape[0]):
        c = (func(rho_arr + step * b) - func(rho_arr - step * b)) / (2.0 * step)
        grad = grad + c * b
    return grad


def jacobi_defect(X: Generator, A: Generator, B: Generator, C: Generator,
                  rho, step: float = 1e-5) -> float:
    """Cyclic Jacobi sum of the reduced 2-bracket {f, g}_X := {f, g, X}.

    Outer brackets differentiate the inner bracket value numerically, so
    the second-derivative terms of the defect are picked up without
    symbolic functional calculus. Vanishes (up to difference error) when
    X = C_2/2 or X is linear; generically nonzero for higher Casimirs.
    """
    rho_arr = as_array(rho)
    g_x = X.gradient_array(rho_arr)

    def term(p, q, r):
        def inner(m):
            grads = np.array(
                [p.gradient_array(m), q.gradient_array(m), X.gradient_array(m)],
                dtype=np.complex128,
            )
            return _scalar_bracket_entries(grads, cross_check=False)

        g_f = _fd_gradient(inner, rho_arr, step)
        g_r = r.gradient_array(rho_arr)
        return complex(np.trace(g_f @ (g_r @ g_x - g_x @ g_r)))

    return float(abs(term(A, B, C) + term(C, A, B) + term(B, C, A)))


def duality_rotate(H: Generator, S: Generator, alpha: float):
    """(H, S) -> (H cos a - S sin a, H sin a + S cos a).

    The 3-bracket {A, H, S} is invariant under this rotation for any
    probe A.
    """
    c = float(np.cos(alpha))
    s = float(np.sin(alpha))
    # exact multiples of pi/2 should map generators onto each other exactly
    if abs(c) < 1e-15:
        c = 0.0
    if abs(s) < 1e-15:
        s = 0.0

    def combine(x, cx, y, cy):
        if cy == 0.0:
            return x.scaled(cx)
        if cx == 0.0:
            return y.scaled(cy)
        return x.scaled(cx).plus(y.scaled(cy))

    return combine(H, c, S, -s), combine(S, c, H, s)


def theorem1_check(n: int, casimir_orders, rho, fillers) -> float:
    """|bracket| with (n+1)/2 Casimir slots; zero by the conservation theorem."""
    orders = list(casimir_orders)
    fillers = list(fillers)
    if len(orders) != (n + 1) // 2:
        raise DimensionMismatch(
            f"arity {n} needs {(n + 1) // 2} Casimir orders, got {len(orders)}"
        )
    if len(orders) + len(fillers) != n:
        raise DimensionMismatch(
            f"{len(orders)} Casimirs + {len(fillers)} fillers != arity {n}"
        )
    gens = [Generator.casimir(k) for k in orders] + fillers
    return abs(scalar_bracket(gens, rho))
