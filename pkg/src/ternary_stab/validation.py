"""Input validation helpers and the shared numeric comparison policy.

Ring elements are plain numpy arrays of complex128. These helpers coerce
and check user input at API boundaries so the numerical kernels can
assume well-formed data, mirroring the validation style of estimator
libraries.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Shape(NamedTuple):
    """Matrix dimensions of a ring; every element in a product shares one."""

    rows: int
    cols: int


#: Relative tolerance applied when comparing a measured quantity against a
#: certified bound (covers float error accumulated over small matrix
#: products).
CERTIFIED_REL_TOL = 1e-9

#: Absolute slack for comparisons whose natural scale is at or near zero.
ZERO_SCALE_ABS_TOL = 1e-12


def check_shape(shape) -> Shape:
    """Coerce ``shape`` to a validated ``Shape``; rows/cols must be >= 1."""
    try:
        rows, cols = shape
    except (TypeError, ValueError):
        raise ValueError(f"shape must be a (rows, cols) pair, got {shape!r}") from None
    rows, cols = int(rows), int(cols)
    if rows < 1 or cols < 1:
        raise ValueError(f"shape must be positive, got {rows}x{cols}")
    return Shape(rows, cols)


def as_element(x, shape=None, *, name: str = "element") -> np.ndarray:
    """Coerce ``x`` to a finite 2-d complex128 array, optionally shape-checked."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d complex matrix, got ndim={arr.ndim}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} has non-finite entries")
    if shape is not None:
        want = check_shape(shape)
        if arr.shape != (want.rows, want.cols):
            raise ValueError(
                f"{name} has shape {arr.shape}, expected {(want.rows, want.cols)}"
            )
    return arr


def require_same_shape(*arrays: np.ndarray, names: str = "arguments") -> Shape:
    """All arrays must share one shape; returns it."""
    first = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != first:
            raise ValueError(
                f"{names} must share one shape, got {first} and {a.shape}"
            )
    return Shape(*first)


def require_square(x: np.ndarray, *, name: str = "element") -> np.ndarray:
    if x.shape[0] != x.shape[1]:
        raise ValueError(f"{name} must be square, got {x.shape}")
    return x


def require_isometry(U, tol: float = 1e-12, *, name: str = "U") -> np.ndarray:
    """Check U*U = I to ``tol`` (spectral norm of the residual)."""
    U = as_element(U, name=name)
    if U.shape[0] < U.shape[1]:
        raise ValueError(
            f"{name} must have at least as many rows as columns to be an isometry"
        )
    gram = U.conj().T @ U
    res = float(np.linalg.norm(gram - np.eye(U.shape[1]), 2))
    if res > tol:
        raise ValueError(f"{name} is not an isometry (residual {res:.3e} > {tol:.1e})")
    return U


def certified_leq(value: float, bound: float, scale: float = 1.0,
                  rel: float = CERTIFIED_REL_TOL,
                  abs_slack: float = ZERO_SCALE_ABS_TOL) -> bool:
    """``value <= bound`` up to the certified-comparison tolerance policy.

    Relative headroom ``rel`` on the bound plus an absolute slack scaled by
    ``max(1, scale)`` so that comparisons against a zero or near-zero bound
    do not fail on floating-point fuzz.
    """
    return value <= bound * (1.0 + rel) + abs_slack * max(1.0, scale)
