"""Scenario runner.

Configs are JSON documents validated against SCENARIO_SCHEMA before any
numeric work; unknown keys are rejected and every validation failure
exits with code 2 and a path-qualified message. Numeric failures during
integration exit with code 3. Complex scalars are written as [re, im]
pairs, matrices as nested arrays of them.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import jsonschema
import numpy as np

from . import __version__
from .brackets import quantized_nambu_spec
from .catalog import (
    KIND_NAMES,
    CatalogTerm,
    Grid1D,
    as_map,
    build_hamiltonian,
    linear_grid_hamiltonian,
)
from .core import DensityMatrix, Generator, Operator, partial_trace
from .demos import DEMO_NAMES, random_mixed, random_pure, run_demo
from .dynamics import IntegratorConfig, integrate, trajectory_to_csv, trajectory_to_json
from .errors import ConfigError, NambuError, UnknownDemo
from .identities import IDENTITY_NAMES, TensorIdentityCase, verify_tensor_identity
from .matio import matrix_from_json
from .multiparticle import (
    CompositeSystem,
    bb_correlated_state,
    extend_rhs_array,
    singlet_state,
)

NAMED_STATES = ("pure_random", "mixed_random", "singlet", "bb_correlated")
NAMED_HAMILTONIANS = (
    "sigma_x",
    "sigma_y",
    "sigma_z",
    "harmonic_ladder",
    "grid_kinetic_potential",
)

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
    ]
}
_MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": _COMPLEX},
}
_VECTOR = {"type": "array", "minItems": 1, "items": {"type": "number"}}
_GRID = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_points": {"type": "integer", "minimum": 8},
        "length": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["n_points", "length"],
}
_CATALOG = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(KIND_NAMES)},
        "coefficient": {"type": "number"},
        "vector_potential": _VECTOR,
        "regularization_floor": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["kind"],
}
_HSPEC = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "matrix": _MATRIX,
        "named": {"enum": list(NAMED_HAMILTONIANS)},
        "potential": _VECTOR,
        "mass": {"type": "number", "exclusiveMinimum": 0},
        "catalog": _CATALOG,
        "linear": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "matrix": _MATRIX,
                "named": {"enum": list(NAMED_HAMILTONIANS)},
                "potential": _VECTOR,
                "mass": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}
_ENTROPY = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "terms": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "orders": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "integer", "minimum": 1},
                    },
                    "coefficient": {"type": "number"},
                },
                "required": ["orders", "coefficient"],
            },
        }
    },
    "required": ["terms"],
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "system": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "single": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "dim": {"type": "integer", "minimum": 2},
                        "grid": _GRID,
                    },
                },
                "composite": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "dims": {
                            "type": "array",
                            "minItems": 2,
                            "maxItems": 4,
                            "items": {"type": "integer", "minimum": 2},
                        },
                        "grid": _GRID,
                    },
                    "required": ["dims"],
                },
            },
        },
        "hamiltonian": {"oneOf": [_HSPEC, {"type": "array", "minItems": 1, "items": _HSPEC}]},
        "entropy": {
            "oneOf": [_ENTROPY, {"type": "array", "minItems": 1, "items": _ENTROPY}]
        },
        "bracket": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "arity": {"type": "integer", "minimum": 3, "maximum": 9},
                "z": _COMPLEX,
            },
            "required": ["arity"],
        },
        "initial_state": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "matrix": _MATRIX,
                "named": {"enum": list(NAMED_STATES)},
            },
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["RK4", "RK4_adaptive"]},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "record_every": {"type": "integer", "minimum": 1},
                "tolerances": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "herm_tol": {"type": "number", "exclusiveMinimum": 0},
                        "casimir_tol": {"type": "number", "exclusiveMinimum": 0},
                        "spectrum_tol": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "csv": {"type": "string", "minLength": 1},
                "json": {"type": "string", "minLength": 1},
                "observables": {
                    "type": "array",
                    "items": {"enum": ["energy"]},
                },
            },
        },
    },
    "required": ["system", "hamiltonian", "initial_state"],
}


def _schema_check(config) -> None:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        path = ".".join(str(p) for p in best.absolute_path)
        raise ConfigError(f"{path or '<root>'}: {best.message}")


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


# -- builders -------------------------------------------------------------

_PAULI = {
    "sigma_x": np.array([[0, 1], [1, 0]], dtype=complex),
    "sigma_y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "sigma_z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _build_linear(hspec, dim, grid, path) -> Operator:
    keys = [k for k in ("matrix", "named", "catalog") if k in hspec]
    if keys != ["matrix"] and keys != ["named"]:
        _fail(path, "expected exactly one of 'matrix' or 'named'")
    if "matrix" in hspec:
        mat = matrix_from_json(hspec["matrix"], where=f"{path}.matrix")
        if mat.shape[0] != dim:
            _fail(f"{path}.matrix", f"size {mat.shape[0]} != system dim {dim}")
        return Operator(mat)
    name = hspec["named"]
    if name in _PAULI:
        if dim != 2:
            _fail(f"{path}.named", f"{name} needs dim 2, system dim is {dim}")
        for extra in ("potential", "mass"):
            if extra in hspec:
                _fail(f"{path}.{extra}", f"not valid with named={name}")
        return Operator(_PAULI[name], label=name)
    if name == "harmonic_ladder":
        for extra in ("potential", "mass"):
            if extra in hspec:
                _fail(f"{path}.{extra}", f"not valid with named={name}")
        return Operator(
            np.diag(np.arange(dim) + 0.5).astype(complex), label=name
        )
    if name == "grid_kinetic_potential":
        if grid is None:
            _fail(f"{path}.named", "grid_kinetic_potential needs a grid system")
        potential = hspec.get("potential")
        if potential is not None and len(potential) != grid.n_points:
            _fail(f"{path}.potential", "length != grid n_points")
        return linear_grid_hamiltonian(
            grid, potential=potential, mass=hspec.get("mass", 1.0)
        )
    _fail(f"{path}.named", f"unknown name {name!r}")  # pragma: no cover


def _build_catalog_term(cat, grid, path) -> CatalogTerm:
    if grid is None:
        _fail(path, "catalog terms need a grid system")
    kwargs = {"kind": cat["kind"]}
    if "coefficient" in cat:
        kwargs["coefficient"] = cat["coefficient"]
    if "vector_potential" in cat:
        pot = np.asarray(cat["vector_potential"], dtype=float)
        if pot.shape[0] != grid.n_points:
            _fail(f"{path}.vector_potential", "length != grid n_points")
        kwargs["vector_potential"] = pot
    if "regularization_floor" in cat:
        kwargs["regularization_floor"] = cat["regularization_floor"]
    try:
        return CatalogTerm(**kwargs)
    except NambuError as exc:
        _fail(path, str(exc))


def _build_state(sspec, dim, seed, path) -> DensityMatrix:
    keys = [k for k in ("matrix", "named") if k in sspec]
    if len(keys) != 1:
        _fail(path, "expected exactly one of 'matrix' or 'named'")
    if "matrix" in sspec:
        mat = matrix_from_json(sspec["matrix"], where=f"{path}.matrix")
        if mat.shape[0] != dim:
            _fail(f"{path}.matrix", f"size {mat.shape[0]} != system dim {dim}")
        try:
            return DensityMatrix(mat)
        except NambuError as exc:
            _fail(f"{path}.matrix", str(exc))
    name = sspec["named"]
    if name == "pure_random":
        return random_pure(np.random.default_rng(seed), dim)
    if name == "mixed_random":
        return random_mixed(np.random.default_rng(seed), dim)
    if dim != 4:
        _fail(f"{path}.named", f"{name} is a two-qubit state; system dim must be 4")
    return singlet_state() if name == "singlet" else bb_correlated_state()


def _entropy_generators(entspec, path):
    if entspec is None:
        return None
    items = entspec if isinstance(entspec, list) else [entspec]
    gens = []
    for i, ent in enumerate(items):
        coeffs = {}
        for term in ent["terms"]:
            # "orders" lists the Casimir factors of the term ([2, 2] means
            # C2^2); Generator wants the power-vector form (m1, m2, ...)
            orders = [int(o) for o in term["orders"]]
            if not orders or any(o < 1 for o in orders):
                _fail(f"{path}[{i}].terms", "orders must be a nonempty list of integers >= 1")
            powers = tuple(orders.count(k) for k in range(1, max(orders) + 1))
            coeffs[powers] = coeffs.get(powers, 0.0) + float(term["coefficient"])
        try:
            gens.append(Generator.casimir_poly(coeffs))
        except (NambuError, ValueError) as exc:
            _fail(f"{path}[{i}]", str(exc))
    return gens


def _default_entropies(count):
    return [
        Generator.casimir(k + 1, 1.0 / (k + 1)) for k in range(1, count + 1)
    ]


def _grid_from_spec(gspec) -> Grid1D:
    n = gspec["n_points"]
    return Grid1D(n_points=n, spacing=gspec["length"] / n)


def _scalar_from(value):
    if isinstance(value, (int, float)):
        return complex(value)
    return complex(value[0], value[1])


# -- scenario execution ---------------------------------------------------

def _resolve_out(path, out_dir):
    if os.path.isabs(path):
        return path
    return os.path.join(out_dir, path)


def _run_single(config, out_dir, overrides):
    sing = config["system"]["single"]
    if ("dim" in sing) == ("grid" in sing):
        _fail("system.single", "expected exactly one of 'dim' or 'grid'")
    grid = _grid_from_spec(sing["grid"]) if "grid" in sing else None
    dim = grid.n_points if grid is not None else sing["dim"]
    seed = overrides.get("seed", config.get("seed", 0))

    hspecs = config["hamiltonian"]
    if not isinstance(hspecs, list):
        hspecs = [hspecs]
    bracket = config.get("bracket", {"arity": 3})
    arity = bracket["arity"]
    if arity % 2 == 0:
        _fail("bracket.arity", f"even arity {arity} rejected; brackets take an odd argument count")
    z = _scalar_from(bracket["z"]) if "z" in bracket else None

    rho0 = _build_state(config["initial_state"], dim, seed, "initial_state")
    catalogs = [h for h in hspecs if "catalog" in h]
    if catalogs:
        if len(hspecs) != 1:
            _fail("hamiltonian", "a catalog Hamiltonian must be the only one")
        if arity != 3:
            _fail("bracket.arity", "catalog Hamiltonians run the arity-3 flow only")
        if config.get("entropy") is not None:
            _fail("entropy", "not supported together with a catalog Hamiltonian")
        hspec = hspecs[0]
        term = _build_catalog_term(hspec["catalog"], grid, "hamiltonian.catalog")
        linear = None
        if "linear" in hspec:
            linear = _build_linear(hspec["linear"], dim, grid, "hamiltonian.linear")
        extra = set(hspec) - {"catalog", "linear"}
        if extra:
            _fail("hamiltonian", f"unexpected keys with catalog: {sorted(extra)}")

        def rhs(arr):
            h = build_hamiltonian(term, grid, arr, linear).entries
            return -1j * (h @ arr - arr @ h)

        def energy(arr):
            h = build_hamiltonian(term, grid, arr, linear).entries
            return float(np.trace(arr @ h).real)

        target, energy_fn = rhs, energy
    else:
        for i, h in enumerate(hspecs):
            if "linear" in h:
                _fail(f"hamiltonian[{i}].linear", "only valid together with a catalog term")
        hams = [
            _build_linear(h, dim, grid, f"hamiltonian[{i}]")
            for i, h in enumerate(hspecs)
        ]
        count = (arity - 1) // 2
        if len(hams) != count:
            _fail(
                "hamiltonian",
                f"arity {arity} needs {count} Hamiltonians, got {len(hams)}",
            )
        ents = _entropy_generators(config.get("entropy"), "entropy")
        if ents is None:
            ents = _default_entropies(count)
        if len(ents) != count:
            _fail("entropy", f"arity {arity} needs {count} entropies, got {len(ents)}")
        try:
            spec = quantized_nambu_spec(hams, ents, z=z)
        except (NambuError, ValueError) as exc:
            _fail("bracket", str(exc))
        h0 = hams[0].entries

        def energy(arr, h=h0):
            return float(np.trace(arr @ h).real)

        target, energy_fn = spec, energy

    observables = None
    if "energy" in config.get("outputs", {}).get("observables", []):
        observables = {"energy_sub1": energy_fn}
    return target, rho0, observables


def _run_composite(config, out_dir, overrides):
    comp = config["system"]["composite"]
    dims = tuple(int(d) for d in comp["dims"])
    grid = _grid_from_spec(comp["grid"]) if "grid" in comp else None
    seed = overrides.get("seed", config.get("seed", 0))

    if config.get("bracket", {"arity": 3})["arity"] != 3:
        _fail("bracket.arity", "composite systems run the arity-3 extension")
    if config.get("entropy") is not None:
        _fail("entropy", "not supported for composite systems")
    hspecs = config["hamiltonian"]
    if not isinstance(hspecs, list) or len(hspecs) != len(dims):
        _fail("hamiltonian", f"composite needs a list of {len(dims)} Hamiltonians")

    maps = []
    for k, hspec in enumerate(hspecs):
        path = f"hamiltonian[{k}]"
        if "catalog" in hspec:
            if grid is None:
                _fail(f"{path}.catalog", "composite catalog terms need system.composite.grid")
            if dims[k] != grid.n_points:
                _fail(f"{path}.catalog", f"dims[{k}]={dims[k]} != grid n_points {grid.n_points}")
            term = _build_catalog_term(hspec["catalog"], grid, f"{path}.catalog")
            linear = None
            if "linear" in hspec:
                linear = _build_linear(hspec["linear"], dims[k], grid, f"{path}.linear")
            extra = set(hspec) - {"catalog", "linear"}
            if extra:
                _fail(path, f"unexpected keys with catalog: {sorted(extra)}")
            maps.append(as_map(term, grid, linear_part=linear))
        else:
            if "linear" in hspec:
                _fail(f"{path}.linear", "only valid together with a catalog term")
            sub_grid = grid if grid is not None and dims[k] == grid.n_points else None
            maps.append(_build_linear(hspec, dims[k], sub_grid, path))

    try:
        system = CompositeSystem(dims=dims, hamiltonians=tuple(maps))
    except NambuError as exc:
        _fail("system.composite", str(exc))
    total = system.total_dim
    rho0 = _build_state(config["initial_state"], total, seed, "initial_state")

    def rhs(arr):
        return extend_rhs_array(system, arr)

    observables = None
    if "energy" in config.get("outputs", {}).get("observables", []):
        observables = {}
        for k in range(len(dims)):
            def energy(arr, k=k):
                reduced = partial_trace(arr, dims, k + 1)
                h = system.hamiltonians[k].evaluate(
                    DensityMatrix(0.5 * (reduced + reduced.conj().T))
                ).entries
                return float(np.trace(reduced @ h).real)

            observables[f"energy_sub{k + 1}"] = energy
    return rhs, rho0, observables


def _integrator_config(config, overrides) -> IntegratorConfig:
    integ = dict(config.get("integrator", {}))
    if "dt" in overrides:
        integ["dt"] = overrides["dt"]
    if "t_end" in overrides:
        integ["t_end"] = overrides["t_end"]
    integ.setdefault("method", "RK4")
    integ.setdefault("dt", 1e-3)
    integ.setdefault("t_end", 1.0)
    try:
        return IntegratorConfig(**integ)
    except NambuError as exc:
        raise ConfigError(f"integrator: {exc}")


def run_scenario(config_path, out_dir, overrides, validate_only=False):
    """Load, validate, build, integrate, write artifacts. Returns exit code."""
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2

    try:
        _schema_check(config)
        system = config["system"]
        if ("single" in system) == ("composite" in system):
            _fail("system", "expected exactly one of 'single' or 'composite'")
        cfg = _integrator_config(config, overrides)
        if "single" in system:
            target, rho0, observables = _run_single(config, out_dir, overrides)
        else:
            target, rho0, observables = _run_composite(config, out_dir, overrides)
    except ConfigError as exc:
        print(f"error: config.{exc}", file=sys.stderr)
        return 2
    except NambuError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2

    if validate_only:
        print(f"config valid: {config_path}")
        return 0

    try:
        traj = integrate(target, rho0, cfg, observables=observables)
        outputs = config.get("outputs", {})
        csv_path = _resolve_out(outputs.get("csv", "scenario.csv"), out_dir)
        json_path = _resolve_out(outputs.get("json", "scenario.json"), out_dir)
        os.makedirs(os.path.dirname(csv_path) or ".", exist_ok=True)
        os.makedirs(os.path.dirname(json_path) or ".", exist_ok=True)
        trajectory_to_csv(traj, csv_path)
        trajectory_to_json(traj, json_path)
    except NambuError as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 3

    d = traj.diagnostics
    flags = ",".join(d["flags"]) or "none"
    print(
        f"ok: casimir drift {d['casimir_drift']:.3e}, "
        f"spectrum drift {d['spectrum_drift']:.3e}, "
        f"trace drift {d['trace_drift']:.3e}, flags {flags}; "
        f"wrote {csv_path} {json_path}"
    )
    return 0


def _cmd_demo(args, out_dir) -> int:
    try:
        payload, files = run_demo(
            args.name,
            out_dir,
            seed=args.seed,
            dt=args.dt,
            t_end=args.t_end,
        )
    except UnknownDemo as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NambuError as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return 3
    headline = {
        k: v
        for k, v in payload.items()
        if isinstance(v, (int, float)) and k not in ("seed",)
    }
    summary = ", ".join(f"{k} {v:.3e}" for k, v in sorted(headline.items()))
    print(f"demo {args.name}: {summary or 'done'}; wrote {' '.join(files)}")
    return 0


def _cmd_identities(args) -> int:
    dims = [args.dim] if args.dim is not None else [2, 3, 4, 5]
    seed = args.seed if args.seed is not None else 0
    worst = 0.0
    for name in IDENTITY_NAMES:
        for dim in dims:
            try:
                defect = verify_tensor_identity(
                    TensorIdentityCase(identity=name, dim=dim, seed=seed)
                )
            except (NambuError, ValueError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
            worst = max(worst, defect)
            print(f"{name:16s} dim {dim}  defect {defect:.3e}")
    print(f"max defect {worst:.3e}")
    if worst > 1e-10:
        print("error: identity defect above 1e-10", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nambudyn",
        description="Simulate multi-Hamiltonian density-matrix flows.",
    )
    parser.add_argument(
        "--version", action="version", version=f"nambudyn {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a JSON scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--validate-only", action="store_true")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--dt", type=float)
    p_run.add_argument("--t-end", dest="t_end", type=float)

    p_demo = sub.add_parser("demo", help="run a named demo scenario")
    p_demo.add_argument("name", metavar=f"name ({', '.join(DEMO_NAMES)})")
    p_demo.add_argument("--seed", type=int)
    p_demo.add_argument("--out", help="output directory")
    p_demo.add_argument("--dt", type=float)
    p_demo.add_argument("--t-end", dest="t_end", type=float)

    p_id = sub.add_parser("identities", help="verify trace-tensor identities")
    p_id.add_argument("--dim", type=int)
    p_id.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = getattr(args, "out", None) or os.environ.get("NAMBU_DYN_OUT") or "."
    if args.command == "run":
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.dt is not None:
            overrides["dt"] = args.dt
        if args.t_end is not None:
            overrides["t_end"] = args.t_end
        return run_scenario(
            args.config, out_dir, overrides, validate_only=args.validate_only
        )
    if args.command == "demo":
        return _cmd_demo(args, out_dir)
    return _cmd_identities(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
