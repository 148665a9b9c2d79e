"""Prepackaged deterministic scenarios.

Every demo draws randomness from numpy's default_rng (PCG64) with the
seed listed in DEMO_SEEDS, so outputs are byte-identical across runs
for a fixed seed and package version. Payloads avoid timestamps and
environment-dependent values for the same reason.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .brackets import (
    BracketSpec,
    duality_rotate,
    eom_rhs_array,
    quantized_nambu_spec,
    scalar_bracket,
)
from .catalog import CatalogTerm, Grid1D, as_map, bbm_additivity_check, linear_grid_hamiltonian
from .core import DensityMatrix, Generator, Operator, hermitize, partial_trace
from .dynamics import IntegratorConfig, _atomic_write, integrate, trajectory_to_csv
from .errors import UnknownDemo
from .identities import IDENTITY_NAMES, TensorIdentityCase, verify_tensor_identity
from .multiparticle import (
    CompositeSystem,
    HamiltonianMap,
    bb_correlated_state,
    big_brother_rate,
    big_brother_rate_fd,
    gisin_extension,
    lie_poisson_extension,
    separability_defect,
    singlet_state,
)

DEMO_SEEDS = {
    "linear_check": 2026,
    "rho_squared_flow": 11,
    "five_bracket": 3,
    "separability": 4,
    "big_brother": 5,
    "gisin_basis": 6,
    "duality": 7,
    "tensor_identities": 8,
    "bbm_additivity": 9,
}
DEMO_NAMES = tuple(DEMO_SEEDS)


def random_hermitian(rng, d: int) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return hermitize(a)


def random_pure(rng, d: int) -> DensityMatrix:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def random_mixed(rng, d: int) -> DensityMatrix:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return DensityMatrix(m / np.trace(m).real)


def smooth_wave(rng, grid: Grid1D, offset: float = 2.0) -> np.ndarray:
    """Strictly positive-density wavefunction with a seeded smooth profile."""
    x = np.arange(grid.n_points) * grid.spacing
    ph = rng.uniform(0.0, 2.0 * np.pi, size=3)
    amp = offset + 0.5 * np.cos(x + ph[0]) + 0.3 * np.sin(2.0 * x + ph[1])
    psi = amp * np.exp(0.4j * np.sin(x + ph[2]))
    return psi / np.linalg.norm(psi)


def _drift_summary(traj) -> dict:
    d = traj.diagnostics
    return {
        "casimir_drift": d["casimir_drift"],
        "spectrum_drift": d["spectrum_drift"],
        "trace_drift": d["trace_drift"],
        "herm_defect": d["max_presym_defect"],
        "flags": list(d["flags"]),
    }


def linear_check(seed=None, dt=None, t_end=None):
    seed = DEMO_SEEDS["linear_check"] if seed is None else seed
    dt = 1e-3 if dt is None else dt
    t_end = 1.0 if t_end is None else t_end
    rng = np.random.default_rng(seed)
    d = 4
    h = random_hermitian(rng, d)
    rho0 = random_pure(rng, d)
    spec = quantized_nambu_spec([Operator(h)], [Generator.casimir(2, 0.5)])
    cfg = IntegratorConfig(method="RK4", dt=dt, t_end=t_end)
    traj = integrate(spec, rho0, cfg)
    w, u = np.linalg.eigh(h)
    prop = u @ np.diag(np.exp(-1j * w * t_end)) @ u.conj().T
    closed = prop @ rho0.entries @ prop.conj().T
    defect = float(np.max(np.abs(traj.final_state().entries - closed)))
    payload = {
        "demo": "linear_check",
        "seed": seed,
        "parameters": {"dim": d, "dt": dt, "t_end": t_end},
        "closed_form_defect": defect,
        "drifts": _drift_summary(traj),
    }
    return payload, traj


def rho_squared_flow(seed=None, dt=None, t_end=None):
    seed = DEMO_SEEDS["rho_squared_flow"] if seed is None else seed
    dt = 1e-3 if dt is None else dt
    t_end = 2.0 if t_end is None else t_end
    rng = np.random.default_rng(seed)
    d = 4
    h = random_hermitian(rng, d)
    rho0 = random_mixed(rng, d)
    spec = quantized_nambu_spec(
        [Operator(h)], [Generator.casimir(3, 1.0 / 3.0)]
    )
    cfg = IntegratorConfig(method="RK4", dt=dt, t_end=t_end, record_every=10)
    traj = integrate(spec, rho0, cfg)
    payload = {
        "demo": "rho_squared_flow",
        "seed": seed,
        "parameters": {"dim": d, "dt": dt, "t_end": t_end},
        "drifts": _drift_summary(traj),
    }
    return payload, traj


def five_bracket(seed=None, dt=None, t_end=None):
    seed = DEMO_SEEDS["five_bracket"] if seed is None else seed
    dt = 1e-3 if dt is None else dt
    t_end = 2.0 if t_end is None else t_end
    rng = np.random.default_rng(seed)
    d = 4
    h1, h2 = random_hermitian(rng, d), random_hermitian(rng, d)
    rho0 = random_mixed(rng, d)
    spec = quantized_nambu_spec(
        [Operator(h1), Operator(h2)],
        [Generator.casimir(2, 0.5), Generator.casimir(3, 1.0 / 3.0)],
    )
    cfg = IntegratorConfig(method="RK4", dt=dt, t_end=t_end, record_every=10)
    traj = integrate(spec, rho0, cfg)
    pure = random_pure(rng, d)
    pure_rhs_norm = float(np.max(np.abs(eom_rhs_array(spec, pure.entries))))
    payload = {
        "demo": "five_bracket",
        "seed": seed,
        "parameters": {"dim": d, "dt": dt, "t_end": t_end, "arity": 5},
        "pure_state_rhs_norm": pure_rhs_norm,
        "drifts": _drift_summary(traj),
    }
    return payload, traj


def separability(seed=None, dt=None, t_end=None):
    seed = DEMO_SEEDS["separability"] if seed is None else seed
    dt = 1e-2 if dt is None else dt
    t_end = 0.5 if t_end is None else t_end
    rng = np.random.default_rng(seed)
    n = 16
    grid = Grid1D(n_points=n, spacing=2.0 * np.pi / n)
    kinetic = linear_grid_hamiltonian(grid)
    maps = (
        as_map(CatalogTerm("abs2"), grid, linear_part=kinetic),
        as_map(CatalogTerm("log"), grid, linear_part=kinetic),
    )
    system = CompositeSystem(dims=(n, n), hamiltonians=maps)
    cfg = IntegratorConfig(method="RK4", dt=dt, t_end=t_end, record_every=10)

    psi_a, psi_b = smooth_wave(rng, grid), smooth_wave(rng, grid)
    product = DensityMatrix(
        np.kron(np.outer(psi_a, psi_a.conj()), np.outer(psi_b, psi_b.conj()))
    )
    braided = np.kron(psi_a, psi_b) + np.kron(psi_b, psi_a)
    braided = braided / np.linalg.norm(braided)
    entangled = DensityMatrix(np.outer(braided, braided.conj()))

    defects = {
        "product_sub1": separability_defect(system, product, 1, cfg),
        "product_sub2": separability_defect(system, product, 2, cfg),
        "entangled_sub1": separability_defect(system, entangled, 1, cfg),
    }
    payload = {
        "demo": "separability",
        "seed": seed,
        "parameters": {
            "grid_points": n,
            "spacing": grid.spacing,
            "dt": dt,
            "t_end": t_end,
            "terms": ["abs2", "log"],
        },
        "defects": defects,
    }
    return payload, None


def big_brother(seed=None, dt=None, t_end=None):
    seed = DEMO_SEEDS["big_brother"] if seed is None else seed
    rng = np.random.default_rng(seed)
    dims = (2, 2)
    rho = random_mixed(rng, 4)
    h1 = random_hermitian(rng, 2)
    h2 = random_hermitian(rng, 2)
    rate = big_brother_rate(rho, dims, h1)
    fd = big_brother_rate_fd(rho, dims, h1, h2)
    rel = abs(rate - fd) / max(abs(fd), 1e-300)

    prod = DensityMatrix(
        np.kron(random_mixed(rng, 2).entries, random_mixed(rng, 2).entries)
    )
    zero_rates = {
        "product": big_brother_rate(prod, dims, h1),
        "singlet": big_brother_rate(singlet_state(), dims, h1),
        "correlated_pinned": big_brother_rate(bb_correlated_state(), dims, h1),
    }
    payload = {
        "demo": "big_brother",
        "seed": seed,
        "parameters": {"dims": [2, 2]},
        "rate": rate,
        "finite_difference_rate": fd,
        "relative_error": rel,
        "zero_rates": zero_rates,
    }
    return payload, None


def gisin_basis(seed=None, dt=None, t_end=None):
    seed = DEMO_SEEDS["gisin_basis"] if seed is None else seed
    dt = 1e-3 if dt is None else dt
    t_end = 0.1 if t_end is None else t_end
    rng = np.random.default_rng(seed)
    dims = (2, 2)
    rho2 = random_mixed(rng, 4)
    h = random_hermitian(rng, 2)

    raw = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(raw)
    u = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    eye = np.eye(2, dtype=complex)

    nl_spec = quantized_nambu_spec(
        [Operator(h)], [Generator.casimir(3, 1.0 / 3.0)]
    )
    lin_spec = quantized_nambu_spec([Operator(h)], [Generator.casimir(2, 0.5)])

    def frob(a, b):
        return float(np.linalg.norm(a.entries - b.entries))

    results = {}
    for label, spec in (("nonlinear", nl_spec), ("linear", lin_spec)):
        rhs = lambda arr, s=spec: eom_rhs_array(s, arr)
        in_u = gisin_extension(rhs, rho2, dims, u, t_end, dt)
        in_eye = gisin_extension(rhs, rho2, dims, eye, t_end, dt)
        results[f"gisin_gap_{label}"] = frob(in_u, in_eye)

    feedback = HamiltonianMap(
        evaluator=lambda r: Operator(h + 0.8 * hermitize(r.entries @ r.entries)),
        label="density_feedback",
    )
    lp_u = lie_poisson_extension(feedback, rho2, dims, u, t_end, dt)
    lp_eye = lie_poisson_extension(feedback, rho2, dims, eye, t_end, dt)
    results["lie_poisson_gap"] = frob(lp_u, lp_eye)

    payload = {
        "demo": "gisin_basis",
        "seed": seed,
        "parameters": {"dims": [2, 2], "dt": dt, "t_end": t_end},
        "results": results,
    }
    return payload, None


def duality(seed=None, dt=None, t_end=None):
    seed = DEMO_SEEDS["duality"] if seed is None else seed
    rng = np.random.default_rng(seed)
    d = 4
    gen_h = Generator.linear(Operator(random_hermitian(rng, d)))
    gen_s = Generator.casimir_poly({2: 0.5, 3: 0.2})
    probe = Generator.linear(Operator(random_hermitian(rng, d)))
    rho = random_mixed(rng, d)
    base = scalar_bracket((probe, gen_h, gen_s), rho)
    angles = [k * np.pi / 8.0 for k in range(16)]
    defects = []
    for alpha in angles:
        h_a, s_a = duality_rotate(gen_h, gen_s, alpha)
        rotated = scalar_bracket((probe, h_a, s_a), rho)
        defects.append(abs(rotated - base))
    payload = {
        "demo": "duality",
        "seed": seed,
        "parameters": {"dim": d, "n_angles": len(angles)},
        "angles": angles,
        "defects": defects,
        "max_defect": max(defects),
    }
    return payload, None


def tensor_identities(seed=None, dt=None, t_end=None):
    seed = DEMO_SEEDS["tensor_identities"] if seed is None else seed
    table = {}
    worst = 0.0
    for name in IDENTITY_NAMES:
        row = {}
        for dim in range(2, 6):
            defect = verify_tensor_identity(
                TensorIdentityCase(identity=name, dim=dim, seed=seed)
            )
            row[str(dim)] = defect
            worst = max(worst, defect)
        table[name] = row
    payload = {
        "demo": "tensor_identities",
        "seed": seed,
        "parameters": {"dims": [2, 3, 4, 5]},
        "defects": table,
        "max_defect": worst,
    }
    return payload, None


def bbm_additivity(seed=None, dt=None, t_end=None):
    seed = DEMO_SEEDS["bbm_additivity"] if seed is None else seed
    rng = np.random.default_rng(seed)
    grid = Grid1D(n_points=16, spacing=2.0 * np.pi / 16)
    psi, phi = smooth_wave(rng, grid), smooth_wave(rng, grid)
    log_defect, square_defect = bbm_additivity_check(psi, phi, grid)
    pinched = psi.copy()
    pinched[5] = 0.0
    pinched = pinched / np.linalg.norm(pinched)
    log_floored, _ = bbm_additivity_check(pinched, phi, grid)
    payload = {
        "demo": "bbm_additivity",
        "seed": seed,
        "parameters": {"grid_points": 16, "floor": 1e-12},
        "log_defect": log_defect,
        "square_defect": square_defect,
        "log_defect_with_floor_engaged": log_floored,
    }
    return payload, None


DEMOS = {
    "linear_check": linear_check,
    "rho_squared_flow": rho_squared_flow,
    "five_bracket": five_bracket,
    "separability": separability,
    "big_brother": big_brother,
    "gisin_basis": gisin_basis,
    "duality": duality,
    "tensor_identities": tensor_identities,
    "bbm_additivity": bbm_additivity,
}


def run_demo(name: str, out_dir: str, seed=None, dt=None, t_end=None):
    """Execute one demo; write demo_<name>.json (and .csv when it integrates)."""
    if name not in DEMOS:
        raise UnknownDemo(
            f"unknown demo {name!r}; expected one of {sorted(DEMOS)}"
        )
    payload, traj = DEMOS[name](seed=seed, dt=dt, t_end=t_end)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    json_path = os.path.join(out_dir, f"demo_{name}.json")
    _atomic_write(json_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(json_path)
    if traj is not None:
        csv_path = os.path.join(out_dir, f"demo_{name}.csv")
        trajectory_to_csv(traj, csv_path)
        written.append(csv_path)
    return payload, written
