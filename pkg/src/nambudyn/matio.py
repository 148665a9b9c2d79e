"""JSON codecs for complex matrices and vectors.

Wire format: a complex scalar is a [re, im] pair; plain numbers are
accepted on input as purely real. Matrices are nested row-major lists.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def _scalar_from_json(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(p, (int, float)) for p in value)
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"{where}: expected a number or [re, im] pair, got {value!r}")


def matrix_from_json(data, where: str = "matrix") -> np.ndarray:
    if not isinstance(data, (list, tuple)) or not data:
        raise ConfigError(f"{where}: expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(data):
        if not isinstance(row, (list, tuple)) or len(row) != len(data):
            raise ConfigError(f"{where}: row {i} does not make the matrix square")
        rows.append(
            [_scalar_from_json(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)]
        )
    return np.array(rows, dtype=np.complex128)


def vector_from_json(data, where: str = "vector") -> np.ndarray:
    if not isinstance(data, (list, tuple)) or not data:
        raise ConfigError(f"{where}: expected a non-empty list")
    return np.array(
        [_scalar_from_json(v, f"{where}[{j}]") for j, v in enumerate(data)],
        dtype=np.complex128,
    )


def matrix_to_json(arr: np.ndarray) -> list:
    arr = np.asarray(arr, dtype=np.complex128)
    return [[[float(v.real), float(v.imag)] for v in row] for row in arr]


def vector_to_json(vec: np.ndarray) -> list:
    vec = np.asarray(vec, dtype=np.complex128)
    return [[float(v.real), float(v.imag)] for v in vec]
