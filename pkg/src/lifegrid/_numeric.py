"""Numeric backend shared by every module.

Two fields are supported: exact rationals (``fractions.Fraction``, the default
test backend) and IEEE floats with a comparison tolerance.  Arrays of exact
values are numpy object arrays, float arrays are float64; all operations in
the package are written against this common array interface so they stay
generic over the field.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable

import numpy as np

Number = Fraction | float


def to_number(x, exact: bool) -> Number:
    """Coerce a scalar input (int, str "p/q", decimal, Fraction) to the field."""
    if exact:
        if isinstance(x, Fraction):
            return x
        if isinstance(x, (int, np.integer)):
            return Fraction(int(x))
        if isinstance(x, str):
            return Fraction(x)
        if isinstance(x, float):
            # decimal semantics: 0.25 -> 1/4, not the binary expansion artifact
            return Fraction(str(x))
        raise TypeError(f"cannot coerce {type(x).__name__} to Fraction")
    return float(Fraction(x) if isinstance(x, str) else x)


def zero(exact: bool) -> Number:
    return Fraction(0) if exact else 0.0


def one(exact: bool) -> Number:
    return Fraction(1) if exact else 1.0


def as_vector(values: Iterable, exact: bool) -> np.ndarray:
    vec = [to_number(v, exact) for v in values]
    if exact:
        out = np.empty(len(vec), dtype=object)
        out[:] = vec
        return out
    return np.array(vec, dtype=float)


def as_matrix(rows: Iterable[Iterable], exact: bool) -> np.ndarray:
    data = [[to_number(v, exact) for v in row] for row in rows]
    if exact:
        out = np.empty((len(data), len(data[0]) if data else 0), dtype=object)
        for i, row in enumerate(data):
            out[i, :] = row
        return out
    return np.array(data, dtype=float)


def zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape, dtype=float)


def is_exact_array(arr: np.ndarray) -> bool:
    return arr.dtype == object


def div0(num, den):
    """Elementwise num/den with the 0/0 := 0 convention (x/0 for x != 0 raises)."""
    num = np.asarray(num)
    den = np.asarray(den)
    num_b, den_b = np.broadcast_arrays(num, den)
    if num_b.dtype == object or den_b.dtype == object:
        out = np.empty(num_b.shape, dtype=object)
        flat_out, flat_n, flat_d = out.reshape(-1), num_b.reshape(-1), den_b.reshape(-1)
        for i in range(flat_out.size):
            d = flat_d[i]
            flat_out[i] = Fraction(0) if d == 0 else flat_n[i] / d
        return out
    safe = np.where(den_b != 0, den_b, 1.0)
    return np.where(den_b != 0, num_b / safe, 0.0)


def max_abs(arr) -> Number:
    arr = np.asarray(arr)
    if arr.size == 0:
        return Fraction(0) if arr.dtype == object else 0.0
    flat = arr.reshape(-1)
    if arr.dtype == object:
        return max(abs(v) for v in flat)
    return float(np.max(np.abs(flat)))


def number_to_str(x: Number) -> str:
    """Canonical text rendering (used for serialization and determinism)."""
    if isinstance(x, Fraction):
        return str(x)
    return repr(float(x))


def number_to_float(x: Number) -> float:
    return float(x)
