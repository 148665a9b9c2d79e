"""Time integration of bracket flows with conservation monitoring.

Also provides the truncated power-series propagator used as an
independent oracle, a pure-state Schroedinger integrator for
cross-checks, and CSV/JSON trajectory serialization.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import matio
from .brackets import BracketSpec, eom_rhs_array
from .core import DensityMatrix, Generator, Operator, hermitize
from .errors import ConfigError, NonFiniteState, NonHermitianInput, StepRejected

DEFAULT_TOLERANCES = {
    "herm_tol": 1e-10,
    "casimir_tol": 1e-8,
    "spectrum_tol": 1e-7,
}
ADAPTIVE_ERROR_TARGET = 1e-9
_MIN_STEP = 1e-12
_MAX_REJECTS = 60
CASIMIR_RECORD_MAX = 5


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "RK4"
    dt: float = 1e-3
    t_end: float = 1.0
    record_every: int = 1
    tolerances: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("RK4", "RK4_adaptive"):
            raise ConfigError(f"unknown method {self.method!r}")
        if not (self.dt > 0):
            raise ConfigError("dt must be positive")
        if not (self.t_end > 0):
            raise ConfigError("t_end must be positive")
        if not (self.dt < self.t_end):
            raise ConfigError("dt must be smaller than t_end")
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            raise ConfigError("record_every must be a positive integer")
        tol = dict(DEFAULT_TOLERANCES)
        for key, value in dict(self.tolerances).items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {key!r}")
            if not (isinstance(value, (int, float)) and value > 0):
                raise ConfigError(f"tolerance {key!r} must be positive")
            tol[key] = float(value)
        object.__setattr__(self, "tolerances", tol)


@dataclass(frozen=True)
class Trajectory:
    """Recorded states and per-time observables of one integration run."""

    times: np.ndarray
    states: tuple
    observables: Mapping[str, np.ndarray]
    diagnostics: Mapping[str, object]

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def final_state(self) -> DensityMatrix:
        return self.states[-1]


def _as_array_rhs(rhs) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(rhs, BracketSpec):
        return lambda arr: eom_rhs_array(rhs, arr)
    if callable(rhs):

        def wrapped(arr):
            out = rhs(arr)
            if isinstance(out, Operator):
                return out.entries
            return np.asarray(out, dtype=np.complex128)

        return wrapped
    raise TypeError("rhs must be a BracketSpec or a callable on arrays")


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + (0.5 * h) * k1)
    k3 = f(y + (0.5 * h) * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _require_finite(arr, t):
    if not np.isfinite(arr).all():
        raise NonFiniteState(f"state became non-finite near t={t:.6g}")


class _Recorder:
    """Accumulates times, states and per-time observables."""

    def __init__(self, dim, observables):
        self.times = []
        self.states = []
        self.user = {name: [] for name in (observables or {})}
        self.user_fns = dict(observables or {})
        self.casimirs = [[] for _ in range(CASIMIR_RECORD_MAX)]
        self.spectra = []
        self.dim = dim

    def record(self, t, arr):
        self.times.append(t)
        state = DensityMatrix(arr)
        self.states.append(state)
        power = arr
        for k in range(CASIMIR_RECORD_MAX):
            self.casimirs[k].append(float(np.trace(power).real))
            if k + 1 < CASIMIR_RECORD_MAX:
                power = power @ arr
        eig = np.linalg.eigvalsh(arr)[::-1]
        self.spectra.append(eig)
        for name, fn in self.user_fns.items():
            self.user[name].append(float(fn(arr)))

    def build(self, extra_diag, tolerances):
        observables = {
            f"C{k + 1}": np.array(vals) for k, vals in enumerate(self.casimirs)
        }
        observables["spectrum"] = np.array(self.spectra)
        for name, vals in self.user.items():
            observables[name] = np.array(vals)

        casimir_drift = max(
            float(np.max(np.abs(observables[f"C{k + 1}"] - observables[f"C{k + 1}"][0])))
            for k in range(CASIMIR_RECORD_MAX)
        )
        trace_drift = float(
            np.max(np.abs(observables["C1"] - observables["C1"][0]))
        )
        spec = observables["spectrum"]
        spectrum_drift_val = float(np.max(np.abs(spec - spec[0])))

        flags = []
        if extra_diag["max_presym_defect"] > tolerances["herm_tol"]:
            flags.append("herm_defect_exceeded")
        if casimir_drift > tolerances["casimir_tol"]:
            flags.append("casimir_drift_exceeded")
        if spectrum_drift_val > tolerances["spectrum_tol"]:
            flags.append("spectrum_drift_exceeded")

        diagnostics = {
            "trace_drift": trace_drift,
            "casimir_drift": casimir_drift,
            "spectrum_drift": spectrum_drift_val,
            "tolerances": dict(tolerances),
            "flags": tuple(flags),
        }
        diagnostics.update(extra_diag)
        return Trajectory(
            times=np.array(self.times),
            states=tuple(self.states),
            observables=observables,
            diagnostics=diagnostics,
        )


def integrate(
    rhs,
    rho0: DensityMatrix,
    cfg: IntegratorConfig,
    observables: Optional[Mapping[str, Callable[[np.ndarray], float]]] = None,
) -> Trajectory:
    """Integrate a Hermitian flow, recording conservation diagnostics.

    ``rhs`` is a BracketSpec or a callable mapping a (d, d) array to the
    time derivative. The state is symmetrized each step; the worst
    pre-symmetrization defect is reported, never hidden.
    """
    f = _as_array_rhs(rhs)
    y = np.array(rho0.entries, dtype=np.complex128)
    rec = _Recorder(rho0.dim, observables)
    rec.record(0.0, y)

    max_presym = 0.0
    steps = 0
    rejected = 0
    t = 0.0

    def accept(y_new, t_new):
        nonlocal y, t, max_presym, steps
        defect = float(np.max(np.abs(y_new - y_new.conj().T)))
        max_presym = max(max_presym, defect)
        y = hermitize(y_new)
        _require_finite(y, t_new)
        t = t_new
        steps += 1

    if cfg.method == "RK4":
        n_full = int(math.floor(cfg.t_end / cfg.dt + 1e-12))
        remainder = cfg.t_end - n_full * cfg.dt
        if remainder < 1e-9 * cfg.dt:
            remainder = 0.0
        for i in range(n_full):
            accept(_rk4_step(f, y, cfg.dt), (i + 1) * cfg.dt)
            if steps % cfg.record_every == 0 and (remainder > 0 or i + 1 < n_full):
                rec.record(t, y)
        if remainder > 0:
            accept(_rk4_step(f, y, remainder), cfg.t_end)
        rec.record(cfg.t_end, y)
    else:
        h = cfg.dt
        rejects_in_row = 0
        while t < cfg.t_end - 1e-12 * cfg.t_end:
            h = min(h, cfg.t_end - t)
            big = _rk4_step(f, y, h)
            half = _rk4_step(f, _rk4_step(f, y, h / 2.0), h / 2.0)
            err = float(np.max(np.abs(big - half)))
            if err <= ADAPTIVE_ERROR_TARGET or h <= _MIN_STEP:
                accept(half, t + h)
                rejects_in_row = 0
                if err > 0:
                    h *= min(4.0, max(0.5, 0.9 * (ADAPTIVE_ERROR_TARGET / err) ** 0.2))
                else:
                    h *= 4.0
                at_end = t >= cfg.t_end - 1e-12 * cfg.t_end
                if at_end or steps % cfg.record_every == 0:
                    rec.record(t, y)
            else:
                rejected += 1
                rejects_in_row += 1
                h *= max(0.1, 0.9 * (ADAPTIVE_ERROR_TARGET / err) ** 0.2)
                if h < _MIN_STEP or rejects_in_row > _MAX_REJECTS:
                    raise StepRejected(
                        f"step size collapsed to {h:.3e} at t={t:.6g}"
                    )

    extra = {
        "max_presym_defect": max_presym,
        "steps": steps,
        "rejected_steps": rejected,
        "method": cfg.method,
    }
    return rec.build(extra, cfg.tolerances)


# -- truncated power-series oracle -------------------------------------------

def _series_mul(a: Sequence[np.ndarray], b: Sequence[np.ndarray], trunc: int):
    out = []
    for j in range(trunc + 1):
        acc = None
        for i in range(j + 1):
            if i >= len(a) or (j - i) >= len(b):
                continue
            term = a[i] @ b[j - i]
            acc = term if acc is None else acc + term
        out.append(acc if acc is not None else np.zeros_like(a[0]))
    return out


def _series_pow(base, k: int, trunc: int):
    d = base[0].shape[0]
    result = [np.eye(d, dtype=np.complex128)] + [
        np.zeros((d, d), dtype=np.complex128) for _ in range(trunc)
    ]
    for _ in range(k):
        result = _series_mul(result, base, trunc)
    return result


def _scalar_mul(a, b, trunc):
    out = []
    for j in range(trunc + 1):
        out.append(
            sum(a[i] * b[j - i] for i in range(j + 1) if i < len(a) and j - i < len(b))
        )
    return out


def _scalar_pow(a, k, trunc):
    result = [1.0 + 0.0j] + [0.0j] * trunc
    for _ in range(k):
        result = _scalar_mul(result, a, trunc)
    return result


def _gradient_series(gen: Generator, rho_powers, casimir_series, trunc: int):
    """Gradient of a generator along a truncated matrix power series."""
    d = rho_powers[1][0].shape[0]
    grad = [np.zeros((d, d), dtype=np.complex128) for _ in range(trunc + 1)]
    lin = gen.linear_part
    if lin is not None:
        grad[0] = grad[0] + lin
    for alpha, coeff in gen.poly_coeffs.items():
        for k_idx, power in enumerate(alpha):
            if power == 0:
                continue
            k = k_idx + 1
            # d/dC_k of coeff * prod C_j^alpha_j, as a scalar series
            scalar = [complex(coeff * power)] + [0.0j] * trunc
            for j_idx, other in enumerate(alpha):
                j = j_idx + 1
                exponent = other - 1 if j == k else other
                if exponent:
                    scalar = _scalar_mul(
                        scalar, _scalar_pow(casimir_series[j], exponent, trunc), trunc
                    )
            matrix_part = rho_powers[k - 1]
            for j in range(trunc + 1):
                acc = np.zeros((d, d), dtype=np.complex128)
                for i in range(j + 1):
                    if scalar[i] != 0:
                        acc += scalar[i] * matrix_part[j - i]
                grad[j] = grad[j] + k * acc
    return grad


def _rhs_series(spec: BracketSpec, coeffs, trunc: int):
    """Coefficients 0..trunc of eom_rhs applied to the matrix power series."""
    from ._kernels import perm_table

    d = coeffs[0].shape[0]
    rho_series = list(coeffs[: trunc + 1])
    while len(rho_series) < trunc + 1:
        rho_series.append(np.zeros((d, d), dtype=np.complex128))

    max_order = max((g.max_order for g in spec.generators), default=1)
    rho_powers = [None] * (max(max_order, 1) + 1)
    eye_series = [np.eye(d, dtype=np.complex128)] + [
        np.zeros((d, d), dtype=np.complex128) for _ in range(trunc)
    ]
    rho_powers[0] = eye_series
    if max_order >= 1:
        rho_powers[1] = rho_series
    for k in range(2, max_order + 1):
        rho_powers[k] = _series_mul(rho_powers[k - 1], rho_series, trunc)

    casimir_series = {}
    for k in range(1, max_order + 1):
        casimir_series[k] = [np.trace(m) for m in rho_powers[k]]

    grads = [
        _gradient_series(g, rho_powers, casimir_series, trunc)
        for g in spec.generators
    ]
    perms, signs = perm_table(len(grads))
    total = [np.zeros((d, d), dtype=np.complex128) for _ in range(trunc + 1)]
    for row, sign in zip(perms, signs):
        chain = grads[row[0]]
        for idx in row[1:]:
            chain = _series_mul(chain, grads[idx], trunc)
        for j in range(trunc + 1):
            total[j] = total[j] + sign * chain[j]
    return [spec.z * m for m in total]


def taylor_oracle(
    spec: BracketSpec, rho0: DensityMatrix, t: float, order: int
) -> DensityMatrix:
    """Partial sum of the power-series solution around t=0.

    Coefficients are propagated with truncated series arithmetic, so each
    one is the true Taylor coefficient of the nonlinear flow. A simple
    heuristic guards against using the series outside its radius: the
    last three term norms must be non-increasing.
    """
    from .errors import SeriesDiverging

    if not (isinstance(order, int) and 0 <= order <= 20):
        raise ValueError("order must be an integer in [0, 20]")
    coeffs = [np.array(rho0.entries, dtype=np.complex128)]
    for j in range(order):
        rhs_j = _rhs_series(spec, coeffs, trunc=j)[j]
        nxt = rhs_j / (j + 1)
        coeffs.append(hermitize(nxt))
    if t == 0.0:
        return DensityMatrix(coeffs[0])
    norms = [float(np.max(np.abs(c))) * abs(t) ** j for j, c in enumerate(coeffs)]
    if order >= 3 and not (norms[-3] >= norms[-2] >= norms[-1]):
        raise SeriesDiverging(
            f"last term norms {norms[-3]:.3e}, {norms[-2]:.3e}, {norms[-1]:.3e} "
            "are not non-increasing; reduce |t| or the order"
        )
    total = np.zeros_like(coeffs[0])
    for j in range(order, -1, -1):
        total = total * t + coeffs[j]
    return DensityMatrix(hermitize(total))


# -- pure-state cross-check ---------------------------------------------------

@dataclass(frozen=True)
class PureTrajectory:
    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray

    def final_state(self) -> np.ndarray:
        return self.states[-1]


def evolve_pure(H, psi0, cfg: IntegratorConfig) -> PureTrajectory:
    """Integrate i d(psi)/dt = H psi with the same stepping as integrate."""
    h_arr = H.entries if isinstance(H, Operator) else np.asarray(H, np.complex128)
    if float(np.max(np.abs(h_arr - h_arr.conj().T))) > 1e-10:
        raise NonHermitianInput("pure-state evolution needs a Hermitian generator")
    psi = np.asarray(psi0, dtype=np.complex128).reshape(-1)
    if psi.shape[0] != h_arr.shape[0]:
        from .errors import DimensionMismatch

        raise DimensionMismatch("state vector does not match the generator")

    def f(v):
        return -1j * (h_arr @ v)

    times = [0.0]
    states = [psi.copy()]
    t = 0.0
    steps = 0
    n_full = int(math.floor(cfg.t_end / cfg.dt + 1e-12))
    remainder = cfg.t_end - n_full * cfg.dt
    if remainder < 1e-9 * cfg.dt:
        remainder = 0.0
    for i in range(n_full):
        psi = _rk4_step(f, psi, cfg.dt)
        t = (i + 1) * cfg.dt
        steps += 1
        _require_finite(psi, t)
        if steps % cfg.record_every == 0 and (remainder > 0 or i + 1 < n_full):
            times.append(t)
            states.append(psi.copy())
    if remainder > 0:
        psi = _rk4_step(f, psi, remainder)
        _require_finite(psi, cfg.t_end)
    times.append(cfg.t_end)
    states.append(psi.copy())
    states = np.array(states)
    norms = np.linalg.norm(states, axis=1)
    return PureTrajectory(times=np.array(times), states=states, norms=norms)


def spectrum_drift(traj: Trajectory) -> float:
    """Max over time of the max eigenvalue displacement from t=0."""
    spec = np.asarray(traj.observables["spectrum"])
    return float(np.max(np.abs(spec - spec[0])))


# -- serialization ------------------------------------------------------------

def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _row_flags(traj: Trajectory, row: int) -> str:
    tol = traj.diagnostics["tolerances"]
    flags = []
    drift = max(
        abs(traj.observables[f"C{k + 1}"][row] - traj.observables[f"C{k + 1}"][0])
        for k in range(CASIMIR_RECORD_MAX)
    )
    if drift > tol["casimir_tol"]:
        flags.append("casimir")
    spec = traj.observables["spectrum"]
    if np.max(np.abs(spec[row] - spec[0])) > tol["spectrum_tol"]:
        flags.append("spectrum")
    return ";".join(flags)


def trajectory_to_csv(
    traj: Trajectory, path: Optional[str] = None, include_entries: bool = False
) -> str:
    d = traj.dim
    energy_names = sorted(
        (n for n in traj.observables if n.startswith("energy_sub")),
        key=lambda n: int(n.replace("energy_sub", "") or 0),
    )
    header = (
        ["t"]
        + [f"C{k + 1}" for k in range(CASIMIR_RECORD_MAX)]
        + [f"eig{i + 1}" for i in range(d)]
        + energy_names
    )
    if include_entries:
        header += [f"re_{i}{j}" for i in range(d) for j in range(d)]
        header += [f"im_{i}{j}" for i in range(d) for j in range(d)]
    header.append("flags")
    lines = [",".join(header)]
    for row, t in enumerate(traj.times):
        cells = [_fmt(t)]
        cells += [
            _fmt(traj.observables[f"C{k + 1}"][row]) for k in range(CASIMIR_RECORD_MAX)
        ]
        cells += [_fmt(v) for v in traj.observables["spectrum"][row]]
        cells += [_fmt(traj.observables[name][row]) for name in energy_names]
        if include_entries:
            arr = traj.states[row].entries
            cells += [_fmt(v) for v in arr.real.reshape(-1)]
            cells += [_fmt(v) for v in arr.imag.reshape(-1)]
        cells.append(_row_flags(traj, row))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if path is not None:
        _atomic_write(path, text)
    return text


def trajectory_to_json(
    traj: Trajectory, path: Optional[str] = None, include_states: bool = True
) -> str:
    payload = {
        "times": [float(t) for t in traj.times],
        "observables": {
            name: np.asarray(vals).tolist()
            for name, vals in traj.observables.items()
        },
        "diagnostics": _json_safe(traj.diagnostics),
    }
    if include_states:
        payload["states"] = [matio.matrix_to_json(s.entries) for s in traj.states]
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path is not None:
        _atomic_write(path, text)
    return text


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
