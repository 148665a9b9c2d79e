"""Noninteracting N-particle extensions of state-dependent Hamiltonian flows.

The composite equation of motion is rhoN' = -i sum_k [lift_k(H_k(rho_(k))), rhoN]
where rho_(k) is the k-th reduced state and lift_k embeds the subsystem
operator with identities elsewhere. Also hosts the reduced-C2 rate
formula, the subsystem-energy conservation probe, and the basis-dependent
block extension of one-particle maps together with its basis-independent
counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .brackets import BracketSpec
from .core import (
    DensityMatrix,
    Generator,
    Operator,
    as_array,
    hermitize,
    partial_trace,
)
from .dynamics import IntegratorConfig, integrate, taylor_oracle
from .errors import (
    DimensionMismatch,
    NonHermitianInput,
    UnsupportedCombination,
)

MAP_HERM_TOL = 1e-10


@dataclass(frozen=True)
class HamiltonianMap:
    """State-dependent subsystem Hamiltonian: reduced state -> operator."""

    evaluator: Callable[[DensityMatrix], Operator]
    label: str = ""
    linearity: bool = False

    @classmethod
    def linear(cls, op, label: Optional[str] = None) -> "HamiltonianMap":
        operator = op if isinstance(op, Operator) else Operator(as_array(op))
        return cls(
            evaluator=lambda rho: operator,
            label=label or (operator.label or "linear"),
            linearity=True,
        )

    def evaluate(self, rho: DensityMatrix) -> Operator:
        out = self.evaluator(rho)
        arr = out.entries if isinstance(out, Operator) else as_array(out)
        defect = float(np.max(np.abs(arr - arr.conj().T)))
        if defect > MAP_HERM_TOL:
            raise NonHermitianInput(
                f"map {self.label!r} returned a non-Hermitian operator "
                f"(defect {defect:.3e})"
            )
        if arr.shape[0] != rho.dim:
            raise DimensionMismatch(
                f"map {self.label!r} returned dim {arr.shape[0]} for a "
                f"dim-{rho.dim} state"
            )
        return out if isinstance(out, Operator) else Operator(arr)


def _coerce_map(obj) -> HamiltonianMap:
    if isinstance(obj, HamiltonianMap):
        return obj
    if isinstance(obj, Operator) or isinstance(obj, np.ndarray):
        return HamiltonianMap.linear(obj)
    raise UnsupportedCombination(
        "hamiltonians must be HamiltonianMap instances or linear operators"
    )


@dataclass(frozen=True)
class CompositeSystem:
    """Noninteracting subsystems; coupling is rejected by construction."""

    dims: tuple
    hamiltonians: tuple
    coupling: tuple = ()

    def __init__(self, dims, hamiltonians, coupling=()):
        dims = tuple(int(d) for d in dims)
        if len(dims) < 2 or any(d < 2 for d in dims):
            raise DimensionMismatch("need at least two subsystems of dim >= 2")
        maps = tuple(_coerce_map(h) for h in hamiltonians)
        if len(maps) != len(dims):
            raise DimensionMismatch(
                f"{len(dims)} subsystem dims but {len(maps)} Hamiltonian maps"
            )
        if tuple(coupling):
            raise UnsupportedCombination(
                "coupling terms are not representable; subsystems stay noninteracting"
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "hamiltonians", maps)
        object.__setattr__(self, "coupling", ())

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))


def _lift_commutator(h: np.ndarray, arr: np.ndarray, k: int, dims) -> np.ndarray:
    """[h acting on slot k (0-based), arr] without building the Kronecker lift."""
    n = len(dims)
    shape = tuple(dims) + tuple(dims)
    rt = arr.reshape(shape)
    left = np.moveaxis(np.tensordot(h, rt, axes=([1], [k])), 0, k)
    right = np.moveaxis(np.tensordot(rt, h, axes=([n + k], [0])), -1, n + k)
    return (left - right).reshape(arr.shape)


def extend_rhs_array(sys: CompositeSystem, arr: np.ndarray) -> np.ndarray:
    dims = sys.dims
    acc = np.zeros_like(arr)
    for k, hmap in enumerate(sys.hamiltonians):
        reduced = partial_trace(arr, dims, k + 1)
        h_k = hmap.evaluate(DensityMatrix(hermitize(reduced))).entries
        acc += _lift_commutator(h_k, arr, k, dims)
    return -1j * acc


def extend_rhs(sys: CompositeSystem, rhoN: DensityMatrix) -> Operator:
    """-i sum_k [lift_k(H_k(rho_(k))), rhoN]."""
    if rhoN.dim != sys.total_dim:
        raise DimensionMismatch(
            f"state dim {rhoN.dim} != product of subsystem dims {sys.total_dim}"
        )
    return Operator(extend_rhs_array(sys, np.asarray(rhoN.entries)))


def separability_defect(
    sys: CompositeSystem, rhoN0: DensityMatrix, k: int, cfg: IntegratorConfig
) -> float:
    """Max gap between the reduced composite flow and the standalone flow.

    Both runs use fixed-step RK4 so the recorded time grids coincide
    exactly; the adaptive method would desynchronize them.
    """
    if rhoN0.dim != sys.total_dim:
        raise DimensionMismatch(
            f"state dim {rhoN0.dim} != product of subsystem dims {sys.total_dim}"
        )
    if not 1 <= k <= len(sys.dims):
        raise DimensionMismatch(f"subsystem {k} outside 1..{len(sys.dims)}")
    cfg_fixed = replace(cfg, method="RK4") if cfg.method != "RK4" else cfg

    traj_full = integrate(lambda a: extend_rhs_array(sys, a), rhoN0, cfg_fixed)

    hmap = sys.hamiltonians[k - 1]

    def sub_rhs(a):
        h = hmap.evaluate(DensityMatrix(hermitize(a))).entries
        return -1j * (h @ a - a @ h)

    rho_k0 = partial_trace(rhoN0, sys.dims, k)
    traj_sub = integrate(sub_rhs, rho_k0, cfg_fixed)

    worst = 0.0
    for full, sub in zip(traj_full.states, traj_sub.states):
        reduced = partial_trace(full.entries, sys.dims, k)
        worst = max(worst, float(np.max(np.abs(reduced - sub.entries))))
    return worst


def big_brother_rate(rho2: DensityMatrix, dims, H1) -> float:
    """Instantaneous d/dt of C2 of subsystem 1 under the dual-scheme flow.

    Closed form: -2i * Tr([Tr_2(rho^2), Tr_2(rho)] H1); real up to roundoff.
    """
    d1, d2 = (int(d) for d in dims)
    arr = np.asarray(rho2.entries)
    if arr.shape[0] != d1 * d2:
        raise DimensionMismatch(f"state dim {arr.shape[0]} != {d1}*{d2}")
    h1 = H1.entries if isinstance(H1, Operator) else as_array(H1)
    if float(np.max(np.abs(h1 - h1.conj().T))) > MAP_HERM_TOL:
        raise NonHermitianInput("H1 must be Hermitian")
    if h1.shape[0] != d1:
        raise DimensionMismatch(f"H1 dim {h1.shape[0]} != subsystem dim {d1}")
    p = partial_trace(arr @ arr, (d1, d2), 1)
    q = partial_trace(arr, (d1, d2), 1)
    value = -2j * np.trace((p @ q - q @ p) @ h1)
    return float(value.real)


def big_brother_rate_fd(
    rho2: DensityMatrix, dims, H1, H2=None, h: float = 1e-5, order: int = 8
) -> float:
    """Central-difference oracle for the reduced-C2 rate.

    Evolves rho' = -i[H1 x I + I x H2, rho^2] to +-h with the series
    propagator and differences C2 of the reduced state. The analytic rate
    is independent of H2; passing one makes the check stronger.
    """
    d1, d2 = (int(d) for d in dims)
    h1 = H1.entries if isinstance(H1, Operator) else as_array(H1)
    h2 = (
        np.zeros((d2, d2), dtype=np.complex128)
        if H2 is None
        else (H2.entries if isinstance(H2, Operator) else as_array(H2))
    )
    h_full = np.kron(h1, np.eye(d2)) + np.kron(np.eye(d1), h2)
    spec = BracketSpec(
        3, (Generator.linear(Operator(h_full)), Generator.casimir(3, 1.0 / 3.0))
    )

    def reduced_c2(state: DensityMatrix) -> float:
        red = partial_trace(state.entries, (d1, d2), 1)
        return float(np.trace(red @ red).real)

    plus = taylor_oracle(spec, rho2, h, order)
    minus = taylor_oracle(spec, rho2, -h, order)
    return (reduced_c2(plus) - reduced_c2(minus)) / (2.0 * h)


def subsystem_energy_drift(
    h1,
    h2,
    entropy: Generator,
    rho2_0: DensityMatrix,
    dims,
    cfg: IntegratorConfig,
    subsystem: int = 1,
) -> float:
    """Max drift of Tr(H_k rho_(k)(t)) under the dual-scheme flow.

    The flow is the 3-bracket with the lifted linear Hamiltonian
    H1 x I + I x H2 and the given trace-polynomial generator.
    """
    d1, d2 = (int(d) for d in dims)
    h1a = h1.entries if isinstance(h1, Operator) else as_array(h1)
    h2a = h2.entries if isinstance(h2, Operator) else as_array(h2)
    h_full = np.kron(h1a, np.eye(d2)) + np.kron(np.eye(d1), h2a)
    spec = BracketSpec(3, (Generator.linear(Operator(h_full)), entropy))
    locals_ = {1: h1a, 2: h2a}
    if subsystem not in locals_:
        raise DimensionMismatch("subsystem must be 1 or 2")
    h_probe = locals_[subsystem]

    def energy(arr):
        red = partial_trace(arr, (d1, d2), subsystem)
        return float(np.trace(red @ h_probe).real)

    traj = integrate(spec, rho2_0, cfg, observables={"energy_probe": energy})
    vals = traj.observables["energy_probe"]
    return float(np.max(np.abs(vals - vals[0])))


def _rk4_plain(f, y, h):
    k1 = f(y)
    k2 = f(y + (0.5 * h) * k1)
    k3 = f(y + (0.5 * h) * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _run_plain(f, y, t: float, dt: float):
    n_full = int(math.floor(t / dt + 1e-12))
    remainder = t - n_full * dt
    if remainder < 1e-9 * dt:
        remainder = 0.0
    for _ in range(n_full):
        y = _rk4_plain(f, y, dt)
    if remainder > 0:
        y = _rk4_plain(f, y, remainder)
    return y


def gisin_extension(
    phi_rhs: Callable[[np.ndarray], np.ndarray],
    rho2: DensityMatrix,
    dims,
    ancilla_basis,
    t: float,
    dt: float = 1e-3,
) -> DensityMatrix:
    """Block-wise lift of a one-particle map, in a chosen ancilla basis.

    The state is rotated by I x U^dagger, split into d1 x d1 operator
    blocks over the ancilla indices, each block is evolved by plain RK4
    on phi_rhs extended verbatim to non-Hermitian operators (no
    symmetrization), then everything is reassembled and rotated back.
    The result depends on U whenever phi_rhs is nonlinear.
    """
    d1, d2 = (int(d) for d in dims)
    arr = np.asarray(rho2.entries)
    if arr.shape[0] != d1 * d2:
        raise DimensionMismatch(f"state dim {arr.shape[0]} != {d1}*{d2}")
    u = ancilla_basis.entries if isinstance(ancilla_basis, Operator) else as_array(
        ancilla_basis
    )
    if u.shape != (d2, d2):
        raise DimensionMismatch(f"ancilla basis must be {d2}x{d2}")
    if float(np.max(np.abs(u @ u.conj().T - np.eye(d2)))) > 1e-10:
        raise UnsupportedCombination("ancilla basis must be unitary")

    big_u = np.kron(np.eye(d1), u)
    rotated = big_u.conj().T @ arr @ big_u
    blocks = rotated.reshape(d1, d2, d1, d2)

    out = np.zeros_like(blocks)
    for s in range(d2):
        for sp in range(d2):
            block = np.ascontiguousarray(blocks[:, s, :, sp])
            out[:, s, :, sp] = _run_plain(phi_rhs, block, t, dt)
    result = big_u @ out.reshape(d1 * d2, d1 * d2) @ big_u.conj().T
    return DensityMatrix(result, herm_tol=1e-8)


def lie_poisson_extension(
    hmap: HamiltonianMap,
    rho2: DensityMatrix,
    dims,
    ancilla_basis,
    t: float,
    dt: float = 1e-3,
) -> DensityMatrix:
    """Same interface as gisin_extension, but extended through the
    reduced-state flow: rotate, integrate extend_rhs with a trivial
    second subsystem, rotate back. Basis-independent by construction."""
    d1, d2 = (int(d) for d in dims)
    arr = np.asarray(rho2.entries)
    if arr.shape[0] != d1 * d2:
        raise DimensionMismatch(f"state dim {arr.shape[0]} != {d1}*{d2}")
    u = ancilla_basis.entries if isinstance(ancilla_basis, Operator) else as_array(
        ancilla_basis
    )
    if float(np.max(np.abs(u @ u.conj().T - np.eye(d2)))) > 1e-10:
        raise UnsupportedCombination("ancilla basis must be unitary")
    sys = CompositeSystem(
        (d1, d2),
        (hmap, HamiltonianMap.linear(np.zeros((d2, d2)), label="idle")),
    )
    big_u = np.kron(np.eye(d1), u)
    rotated = hermitize(big_u.conj().T @ arr @ big_u)
    y = _run_plain(lambda a: extend_rhs_array(sys, a), rotated, t, dt)
    result = big_u @ y @ big_u.conj().T
    return DensityMatrix(result, herm_tol=1e-8)


# -- named two-qubit states ----------------------------------------------------

def singlet_state() -> DensityMatrix:
    """Projector onto (|01> - |10>)/sqrt(2)."""
    psi = np.zeros(4, dtype=np.complex128)
    psi[1] = 1.0 / math.sqrt(2.0)
    psi[2] = -1.0 / math.sqrt(2.0)
    return DensityMatrix(np.outer(psi, psi.conj()))


def bb_correlated_state() -> DensityMatrix:
    """Half a Bell projector mixed with a product state; ancilla biased."""
    phi = np.zeros(4, dtype=np.complex128)
    phi[0] = phi[3] = 1.0 / math.sqrt(2.0)
    bell = np.outer(phi, phi.conj())
    product = np.kron(np.eye(2) / 2.0, np.diag([0.7, 0.3])).astype(np.complex128)
    return DensityMatrix(0.5 * bell + 0.5 * product)
