"""Dense complex-matrix foundation.

Hermitian states, observables, generator functionals with evaluable
gradients, tensor products, partial traces, spectra and the trace-power
invariants C_k = Tr(rho^k).

Conventions (fixed, see README): hbar = 1; Kronecker products put
subsystem 1 on the slow (most significant) index; subsystems are numbered
from 1 in that order; spectra are returned sorted descending after
symmetrizing the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput

#: Default absolute tolerance on max |M - M^dagger| entries.
HERM_TOL = 1e-10


def as_array(m) -> np.ndarray:
    """Complex ndarray view of a DensityMatrix, Operator or array-like."""
    if isinstance(m, (DensityMatrix, Operator)):
        return m.entries
    return np.asarray(m, dtype=np.complex128)


def hermiticity_defect(m) -> float:
    a = as_array(m)
    return float(np.max(np.abs(a - a.conj().T)))


def hermitize(m) -> np.ndarray:
    a = as_array(m)
    return (a + a.conj().T) / 2.0


def _square_complex(entries) -> np.ndarray:
    arr = np.array(entries, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    return arr


class DensityMatrix:
    """Hermitian d x d state matrix.

    Hermiticity and a real trace are enforced at construction; positivity
    is deliberately not an invariant (the dynamics evolves general
    self-adjoint Hilbert-Schmidt operators) and is reported by
    :meth:`min_eigenvalue` instead.
    """

    def __init__(self, entries, label=None, herm_tol=HERM_TOL):
        arr = _square_complex(entries)
        defect = float(np.max(np.abs(arr - arr.conj().T)))
        if defect > herm_tol:
            raise NonHermitianInput(
                f"hermiticity defect {defect:.3e} exceeds tolerance {herm_tol:.3e}"
            )
        if abs(arr.trace().imag) > max(herm_tol, herm_tol * abs(arr.trace().real)):
            raise NonHermitianInput("trace has a non-negligible imaginary part")
        arr.setflags(write=False)
        self.entries = arr
        self.label = label

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(self.entries.trace().real)

    def min_eigenvalue(self) -> float:
        """Positivity monitor; negative values are reported, never clipped."""
        return float(np.linalg.eigvalsh(hermitize(self.entries))[0])

    def __repr__(self):
        name = self.label or "rho"
        return f"DensityMatrix({name}, dim={self.dim})"


class Operator:
    """Complex d x d operator kernel; Hermiticity checked on demand."""

    def __init__(self, entries, label=None):
        arr = _square_complex(entries)
        arr.setflags(write=False)
        self.entries = arr
        self.label = label

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_hermitian(self, tol=HERM_TOL) -> bool:
        return hermiticity_defect(self.entries) <= tol

    def dagger(self) -> "Operator":
        return Operator(self.entries.conj().T)

    def __repr__(self):
        name = self.label or "op"
        return f"Operator({name}, dim={self.dim})"


@dataclass(frozen=True)
class SpectrumRecord:
    """Eigenvalues sorted descending, tagged with the trajectory time."""

    eigenvalues: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        eig = np.asarray(self.eigenvalues, dtype=np.float64)
        eig.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eig)


def _normalize_poly(coeffs) -> dict:
    """Canonical multi-index form: {(m_1,..,m_K): real coeff}, trimmed.

    Accepts either integer keys k (meaning coeff * C_k) or tuples of powers
    (m_1,..,m_K) meaning coeff * C_1^{m_1} * ... * C_K^{m_K}.
    """
    out = {}
    for key, coeff in coeffs.items():
        coeff = float(coeff)
        if isinstance(key, (int, np.integer)):
            if key < 1:
                raise ValueError(f"Casimir order must be >= 1, got {key}")
            powers = (0,) * (key - 1) + (1,)
        else:
            powers = tuple(int(p) for p in key)
            if any(p < 0 for p in powers):
                raise ValueError(f"negative power in multi-index {key}")
        while powers and powers[-1] == 0:
            powers = powers[:-1]
        if coeff != 0.0:
            out[powers] = out.get(powers, 0.0) + coeff
    return {k: v for k, v in sorted(out.items()) if v != 0.0}


class Generator:
    """A scalar functional of rho with an evaluable gradient operator.

    Covers the three basic kinds (linear observable Tr(L rho), single
    Casimir s*C_k, polynomial in the C_k) and the formal linear
    combinations the duality rotation produces.
    """

    def __init__(self, linear=None, poly=None, label=None):
        self._linear = None if linear is None else _square_complex(as_array(linear))
        if self._linear is not None:
            self._linear.setflags(write=False)
        self._poly = _normalize_poly(poly or {})
        self.label = label

    # -- constructors -------------------------------------------------

    @classmethod
    def linear(cls, op, label=None) -> "Generator":
        return cls(linear=op, label=label)

    @classmethod
    def casimir(cls, k: int, scale: float = 1.0, label=None) -> "Generator":
        """The functional scale * C_k; gradient scale * k * rho^(k-1)."""
        return cls(poly={int(k): scale}, label=label)

    @classmethod
    def casimir_poly(cls, coeffs, label=None) -> "Generator":
        return cls(poly=coeffs, label=label)

    # -- introspection ------------------------------------------------

    @property
    def kind(self) -> str:
        if self._linear is not None and self._poly:
            return "combined"
        if self._linear is not None:
            return "linear"
        if len(self._poly) == 1:
            (powers,) = self._poly
            if sum(powers) == 1:
                return "casimir"
        return "casimir_polynomial"

    @property
    def linear_part(self):
        return self._linear

    @property
    def poly_coeffs(self) -> dict:
        return dict(self._poly)

    @property
    def max_order(self) -> int:
        """Highest Casimir order appearing in the polynomial part."""
        return max((len(p) for p in self._poly), default=0)

    def __repr__(self):
        return f"Generator({self.label or self.kind})"

    def __eq__(self, other):
        if not isinstance(other, Generator):
            return NotImplemented
        lin_eq = (
            (self._linear is None and other._linear is None)
            or (
                self._linear is not None
                and other._linear is not None
                and np.array_equal(self._linear, other._linear)
            )
        )
        return lin_eq and self._poly == other._poly

    # -- algebra (used by the duality rotation) -----------------------

    def scaled(self, c: float) -> "Generator":
        lin = None if self._linear is None else c * self._linear
        poly = {k: c * v for k, v in self._poly.items()}
        return Generator(linear=lin, poly=poly)

    def plus(self, other: "Generator") -> "Generator":
        from .errors import UnsupportedCombination

        if self._linear is not None and other._linear is not None:
            if self._linear.shape != other._linear.shape:
                raise UnsupportedCombination(
                    "linear parts live on different dimensions"
                )
            lin = self._linear + other._linear
        else:
            lin = self._linear if self._linear is not None else other._linear
        poly = dict(self._poly)
        for k, v in other._poly.items():
            poly[k] = poly.get(k, 0.0) + v
        return Generator(linear=lin, poly=poly)

    # -- evaluation ----------------------------------------------------

    def value(self, rho) -> float:
        """Evaluate the functional at rho (real part; inputs are Hermitian)."""
        arr = as_array(rho)
        total = 0.0 + 0.0j
        if self._linear is not None:
            total += np.trace(self._linear @ arr)
        if self._poly:
            cas = _casimir_values(arr, self.max_order)
            for powers, coeff in self._poly.items():
                term = complex(coeff)
                for k, p in enumerate(powers, start=1):
                    if p:
                        term *= cas[k] ** p
                total += term
        return float(total.real)

    def gradient_array(self, rho_arr: np.ndarray) -> np.ndarray:
        """Gradient operator entries at a raw matrix argument."""
        d = rho_arr.shape[0]
        grad = np.zeros((d, d), dtype=np.complex128)
        if self._linear is not None:
            if self._linear.shape[0] != d:
                raise DimensionMismatch(
                    f"generator dim {self._linear.shape[0]} vs state dim {d}"
                )
            grad += self._linear
        if self._poly:
            kmax = self.max_order
            powers_of_rho = _power_list(rho_arr, max(kmax - 1, 0))
            cas = [0.0] + [complex(np.trace(p)) for p in powers_of_rho[1:]]
            if kmax >= 1 and len(cas) <= kmax:
                # C_kmax needs rho^kmax for the value but not the gradient
                cas = cas + [complex(np.trace(powers_of_rho[-1] @ rho_arr))]
            for k in range(1, kmax + 1):
                dS_dCk = 0.0
                for pw, coeff in self._poly.items():
                    if len(pw) < k or pw[k - 1] == 0:
                        continue
                    term = coeff * pw[k - 1]
                    for j, pj in enumerate(pw, start=1):
                        if j == k:
                            term *= cas[j] ** (pj - 1)
                        elif pj:
                            term *= cas[j] ** pj
                    dS_dCk += term
                if dS_dCk != 0.0:
                    grad += (dS_dCk * k) * powers_of_rho[k - 1]
        return grad


def _power_list(arr: np.ndarray, kmax: int) -> list:
    """[I, arr, arr^2, .., arr^kmax]."""
    d = arr.shape[0]
    powers = [np.eye(d, dtype=np.complex128)]
    for _ in range(kmax):
        powers.append(powers[-1] @ arr)
    return powers


def _casimir_values(arr: np.ndarray, kmax: int) -> list:
    """[None, C_1, .., C_kmax] as complex traces of matrix powers."""
    vals = [None]
    p = np.eye(arr.shape[0], dtype=np.complex128)
    for _ in range(kmax):
        p = p @ arr
        vals.append(complex(np.trace(p)))
    return vals


def gradient(gen: Generator, rho) -> Operator:
    """Gradient operator of a generator functional at rho.

    Linear(L) -> L; Casimir(k, s) -> s*k*rho^(k-1); polynomials combine
    through the chain rule with state-dependent coefficients dS/dC_k.
    """
    return Operator(gen.gradient_array(as_array(rho)))


def casimir(rho, k: int, herm_tol=HERM_TOL) -> float:
    """C_k = Tr(rho^k) as a real number."""
    if k < 1:
        raise ValueError(f"Casimir order must be >= 1, got {k}")
    arr = as_array(rho)
    p = arr
    for _ in range(k - 1):
        p = p @ arr
    tr = complex(np.trace(p))
    if abs(tr.imag) > max(herm_tol, herm_tol * abs(tr.real)):
        raise NonHermitianInput(
            f"Tr(rho^{k}) has imaginary part {tr.imag:.3e}"
        )
    return tr.real


def casimir_list(rho, kmax: int) -> list:
    """[C_1, .., C_kmax] computed from one pass of matrix powers."""
    arr = as_array(rho)
    vals = []
    p = np.eye(arr.shape[0], dtype=np.complex128)
    for _ in range(kmax):
        p = p @ arr
        vals.append(float(np.trace(p).real))
    return vals


def tensor_product(a, b):
    """Kronecker product; subsystem 1 is the slow (most significant) index."""
    arr = np.kron(as_array(a), as_array(b))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(arr)
    if isinstance(a, Operator) or isinstance(b, Operator):
        return Operator(arr)
    return arr


def partial_trace(rhoN, dims, keep: int):
    """Reduced matrix of subsystem `keep` (numbered from 1).

    dims lists the subsystem dimensions in slow-to-fast Kronecker order;
    the total trace is preserved.
    """
    arr = as_array(rhoN)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if arr.shape[0] != total:
        raise DimensionMismatch(
            f"state dim {arr.shape[0]} != product of subsystem dims {total}"
        )
    n = len(dims)
    if not 1 <= keep <= n:
        raise DimensionMismatch(f"keep={keep} outside 1..{n}")
    tensor = arr.reshape(dims + dims)
    letters = "abcdefghijkl"
    rows = list(letters[:n])
    cols = list(letters[:n])
    rows[keep - 1] = "y"
    cols[keep - 1] = "z"
    sub = "".join(rows) + "".join(cols) + "->yz"
    reduced = np.einsum(sub, tensor)
    if isinstance(rhoN, DensityMatrix):
        return DensityMatrix(reduced)
    return reduced


def spectrum(rho, t: float = 0.0, herm_tol=HERM_TOL) -> SpectrumRecord:
    """Real eigenvalues sorted descending; input symmetrized before solving."""
    arr = as_array(rho)
    defect = float(np.max(np.abs(arr - arr.conj().T)))
    if defect > herm_tol:
        raise NonHermitianInput(
            f"hermiticity defect {defect:.3e} exceeds tolerance {herm_tol:.3e}"
        )
    eig = np.linalg.eigvalsh(hermitize(arr))
    return SpectrumRecord(eigenvalues=eig[::-1].copy(), t=t)
