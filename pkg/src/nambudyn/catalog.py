"""Grid-discretized nonlinear Hamiltonian builders.

Conventions: a grid state is the dimensionless matrix rho with
Tr rho = 1; the position-kernel value is rho(x_i, x_j) = rho_ij/spacing,
so the density p_i = rho_ii/spacing satisfies spacing * sum(p) = C1.
Derivatives use the central 2nd-order stencil, Laplacians the 3-point
stencil, both periodic; the same stencils evaluate the wavefunction
forms, which makes pure-state consistency exact instead of O(h^2).
The logarithmic form divides by the uniform reference density
1/(n*spacing) before taking the log.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .core import DensityMatrix, Operator, as_array, partial_trace
from .errors import (
    ConfigError,
    DimensionMismatch,
    NonPositiveDensity,
    UnsupportedCombination,
)
from .multiparticle import HamiltonianMap

KIND_NAMES = (
    "abs2",
    "log",
    "haag_bannier",
    "dg_r1",
    "dg_r2",
    "dg_r3",
    "dg_r4",
    "dg_r5",
    "twarock",
    "homog_0",
    "homog_1",
)
_NEEDS_DENSITY_FLOOR = frozenset(
    ["log", "haag_bannier", "dg_r1", "dg_r2", "dg_r3", "dg_r4", "dg_r5",
     "twarock", "homog_1"]
)


@dataclass(frozen=True)
class Grid1D:
    n_points: int
    spacing: float
    boundary: str = "periodic"

    def __post_init__(self):
        if not (isinstance(self.n_points, int) and self.n_points >= 8):
            raise ConfigError("n_points must be an integer >= 8")
        if not (self.spacing > 0):
            raise ConfigError("spacing must be positive")
        if self.boundary != "periodic":
            raise UnsupportedCombination("only periodic boundaries are supported")

    def derivative_matrix(self) -> np.ndarray:
        return _derivative(self.n_points, self.spacing)

    def laplacian_matrix(self) -> np.ndarray:
        return _laplacian(self.n_points, self.spacing)


@lru_cache(maxsize=None)
def _derivative(n: int, spacing: float) -> np.ndarray:
    d = np.zeros((n, n))
    for i in range(n):
        d[i, (i + 1) % n] = 1.0
        d[i, (i - 1) % n] = -1.0
    d /= 2.0 * spacing
    d.setflags(write=False)
    return d


@lru_cache(maxsize=None)
def _laplacian(n: int, spacing: float) -> np.ndarray:
    lap = -2.0 * np.eye(n)
    for i in range(n):
        lap[i, (i + 1) % n] = 1.0
        lap[i, (i - 1) % n] = 1.0
    lap /= spacing**2
    lap.setflags(write=False)
    return lap


@dataclass(frozen=True)
class CatalogTerm:
    """One named nonlinearity; `kind` uses the CLI keyword strings."""

    kind: str
    coefficient: float = 1.0
    vector_potential: Optional[np.ndarray] = None
    regularization_floor: float = 1e-12

    def __post_init__(self):
        if self.kind not in KIND_NAMES:
            raise ConfigError(
                f"unknown catalog kind {self.kind!r}; expected one of {KIND_NAMES}"
            )
        if not (
            isinstance(self.coefficient, (int, float))
            and np.isfinite(self.coefficient)
        ):
            raise ConfigError("coefficient must be a finite real number")
        if not (self.regularization_floor > 0):
            raise ConfigError("regularization_floor must be positive")
        if self.vector_potential is not None:
            pot = np.asarray(self.vector_potential, dtype=float)
            if pot.ndim != 1:
                raise ConfigError("vector_potential must be a 1-d real array")
            object.__setattr__(self, "vector_potential", pot)
        if self.kind == "haag_bannier" and self.vector_potential is None:
            raise ConfigError("haag_bannier needs a vector_potential")


def _diagonal_kernels(arr: np.ndarray, grid: Grid1D):
    """First/second argument derivatives read on the diagonal, plus density."""
    d = grid.derivative_matrix()
    lap = grid.laplacian_matrix()
    u1 = np.einsum("ik,ki->i", d, arr)       # d/dx rho(x, z) at z = x
    u2 = np.einsum("ik,ik->i", d, arr)       # d/dx rho(z, x) at z = x
    l1 = np.einsum("ik,ki->i", lap, arr)
    l2 = np.einsum("ik,ik->i", lap, arr)
    diag = arr.diagonal().real
    return u1, u2, l1, l2, diag


def nonlinear_values(term: CatalogTerm, grid: Grid1D, rho) -> np.ndarray:
    """The diagonal of the nonlinear term, in kernel units, scaled."""
    arr = as_array(rho)
    n = grid.n_points
    if arr.shape[0] != n:
        raise DimensionMismatch(f"state dim {arr.shape[0]} != grid size {n}")
    dx = grid.spacing
    eps = term.regularization_floor
    u1, u2, l1, l2, diag = _diagonal_kernels(arr, grid)
    p = diag / dx

    if term.kind in _NEEDS_DENSITY_FLOOR and float(np.min(p)) < eps:
        raise NonPositiveDensity(
            f"density minimum {float(np.min(p)):.3e} below floor {eps:.3e}"
        )

    if term.kind == "abs2":
        values = diag / dx
    elif term.kind == "log":
        values = np.log(diag * n)
    elif term.kind == "haag_bannier":
        pot = term.vector_potential
        if pot.shape[0] != n:
            raise DimensionMismatch("vector_potential length != grid size")
        values = pot * (u1 - u2) / (2j * diag)
    elif term.kind == "dg_r1":
        values = (l1 - l2) / (2j * diag)
    elif term.kind == "dg_r2":
        values = (grid.laplacian_matrix() @ diag) / diag
    elif term.kind == "dg_r3":
        values = ((u1 - u2) / (2j * diag)) ** 2
    elif term.kind == "dg_r4":
        values = (u1 - u2) / (2j) * (grid.derivative_matrix() @ diag) / diag**2
    elif term.kind == "dg_r5":
        values = ((grid.derivative_matrix() @ diag) / diag) ** 2
    elif term.kind == "twarock":
        num = l1 * u2 - l2 * u1
        den = diag * (u2 - u1)
        if float(np.min(np.abs(den))) < eps:
            raise NonPositiveDensity(
                f"derivative denominator below floor {eps:.3e}"
            )
        values = num / den
    elif term.kind == "homog_1":
        values = np.abs(u1) ** 2 / (diag * dx)
    elif term.kind == "homog_0":
        mod = np.abs(u1) ** 2
        if float(np.min(mod)) < eps:
            raise NonPositiveDensity(
                f"derivative denominator below floor {eps:.3e}"
            )
        values = u1.real**2 / mod
    else:  # pragma: no cover - closed set enforced in __post_init__
        raise ConfigError(f"unknown catalog kind {term.kind!r}")

    return term.coefficient * np.asarray(values, dtype=np.complex128)


def build_hamiltonian(
    term: CatalogTerm, grid: Grid1D, rho, linear_part: Optional[Operator] = None
) -> Operator:
    """linear_part plus the diagonal nonlinearity evaluated on rho."""
    values = nonlinear_values(term, grid, rho)
    h = np.diag(values)
    if linear_part is not None:
        lin = linear_part.entries if isinstance(linear_part, Operator) else as_array(
            linear_part
        )
        if lin.shape[0] != grid.n_points:
            raise DimensionMismatch("linear part does not match the grid")
        h = h + lin
    return Operator(h, label=term.kind)


def as_map(
    term: CatalogTerm,
    grid: Grid1D,
    linear_part: Optional[Operator] = None,
    label: Optional[str] = None,
) -> HamiltonianMap:
    """Wrap a catalog term as a state-dependent Hamiltonian map."""
    return HamiltonianMap(
        evaluator=lambda rho: build_hamiltonian(term, grid, rho, linear_part),
        label=label or term.kind,
        linearity=False,
    )


def linear_grid_hamiltonian(
    grid: Grid1D, potential=None, mass: float = 1.0
) -> Operator:
    """Kinetic term -Laplacian/(2 mass) plus an optional diagonal potential."""
    h = -grid.laplacian_matrix() / (2.0 * mass)
    if potential is not None:
        pot = np.asarray(potential, dtype=float)
        if pot.shape != (grid.n_points,):
            raise DimensionMismatch("potential length != grid size")
        h = h + np.diag(pot)
    return Operator(h.astype(np.complex128), label="grid_linear")


def two_particle_nl_potential(
    terms: Sequence[CatalogTerm], grid: Grid1D, rho2: DensityMatrix
) -> Operator:
    """H1(reduced diag of subsystem 1) x I + I x H2(subsystem 2)."""
    terms = tuple(terms)
    if len(terms) != 2:
        raise DimensionMismatch("exactly two catalog terms expected")
    n = grid.n_points
    if rho2.dim != n * n:
        raise DimensionMismatch(f"state dim {rho2.dim} != grid size squared {n * n}")
    eye = np.eye(n)
    pieces = []
    for k, term in enumerate(terms, start=1):
        reduced = partial_trace(rho2.entries, (n, n), k)
        h_k = np.diag(nonlinear_values(term, grid, reduced))
        pieces.append(np.kron(h_k, eye) if k == 1 else np.kron(eye, h_k))
    return Operator(pieces[0] + pieces[1], label="two_particle_nl")


# -- wavefunction-form evaluators (used by consistency checks) -----------------

def psi_form_values(term: CatalogTerm, grid: Grid1D, psi) -> np.ndarray:
    """The same nonlinearity evaluated directly on a wavefunction.

    psi is the dimensionless grid vector with sum |psi_i|^2 = 1; kernel
    samples are psi_i/sqrt(spacing). Stencils are identical to the
    density-matrix path.
    """
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    n = grid.n_points
    if psi.shape[0] != n:
        raise DimensionMismatch(f"psi length {psi.shape[0]} != grid size {n}")
    dx = grid.spacing
    d = grid.derivative_matrix()
    lap = grid.laplacian_matrix()
    dpsi = d @ psi
    lpsi = lap @ psi
    dens = np.abs(psi) ** 2

    if term.kind == "abs2":
        values = dens / dx
    elif term.kind == "log":
        values = np.log(dens * n)
    elif term.kind == "haag_bannier":
        values = (
            term.vector_potential
            * (psi.conj() * dpsi - psi * dpsi.conj())
            / (2j * dens)
        )
    elif term.kind == "dg_r1":
        values = (psi.conj() * lpsi - psi * lpsi.conj()) / (2j * dens)
    elif term.kind == "dg_r2":
        values = (lap @ dens) / dens
    elif term.kind == "dg_r3":
        values = ((psi.conj() * dpsi - psi * dpsi.conj()) / (2j * dens)) ** 2
    elif term.kind == "dg_r4":
        values = (
            (psi.conj() * dpsi - psi * dpsi.conj())
            / (2j)
            * (d @ dens)
            / dens**2
        )
    elif term.kind == "dg_r5":
        values = ((d @ dens) / dens) ** 2
    elif term.kind == "twarock":
        num = lpsi * dpsi.conj() - lpsi.conj() * dpsi
        den = psi * dpsi.conj() - psi.conj() * dpsi
        values = num / den
    elif term.kind == "homog_1":
        values = np.abs(dpsi) ** 2 / dx
    elif term.kind == "homog_0":
        w = psi.conj() * dpsi
        values = w.real**2 / np.abs(w) ** 2
    else:  # pragma: no cover
        raise ConfigError(f"unknown catalog kind {term.kind!r}")
    return term.coefficient * np.asarray(values, dtype=np.complex128)


def bbm_additivity_check(psi, phi, grid: Grid1D, floor: float = 1e-12):
    """Additivity defects of (log, square) over a product state.

    Densities below the floor are clamped here (the catalog term itself
    raises instead). Returns the max-over-grid defect for F=ln, which is
    additive over products, and for F=square, which is not.
    """
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    phi = np.asarray(phi, dtype=np.complex128).reshape(-1)
    dx = grid.spacing
    p1 = np.maximum(np.abs(psi) ** 2 / dx, floor)
    p2 = np.maximum(np.abs(phi) ** 2 / dx, floor)
    joint = np.maximum(np.outer(p1, p2), floor)
    log_defect = float(
        np.max(np.abs(np.log(joint) - np.add.outer(np.log(p1), np.log(p2))))
    )
    square_defect = float(
        np.max(np.abs(joint**2 - np.add.outer(p1**2, p2**2)))
    )
    return log_defect, square_defect
