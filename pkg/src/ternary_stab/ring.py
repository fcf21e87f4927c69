"""Finite-dimensional C*-ternary rings realized as complex matrix spaces.

A ring of shape (m, n) is the space of all m-by-n complex matrices under
the ternary product ``[xyz] = x y* z`` (``y*`` the conjugate transpose)
and the spectral norm. On matrices the spectral norm is the only choice
compatible with the cube identity ``||[xxx]|| = ||x||**3``, so it is
mandated rather than configurable.

Elements are plain numpy arrays; validation happens at the API boundary
and all operations are pure, so values are safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import (
    Shape,
    as_element,
    check_shape,
    require_same_shape,
    require_square,
)

DEFAULT_AXIOM_TOL = 1e-9


def _spec_norm(arr: np.ndarray) -> float:
    # internal fast path: caller guarantees a validated array
    return float(np.linalg.norm(arr, 2))


def tprod(x, y, z) -> np.ndarray:
    """Ternary product [xyz] = x y* z of three same-shape elements.

    Linear in ``x`` and ``z``, conjugate-linear in ``y``.
    """
    x = as_element(x, name="x")
    y = as_element(y, name="y")
    z = as_element(z, name="z")
    require_same_shape(x, y, z, names="ternary product arguments")
    return x @ y.conj().T @ z


def norm(x) -> float:
    """Spectral norm (largest singular value) of an element."""
    return _spec_norm(as_element(x, name="x"))


def add(x, y) -> np.ndarray:
    """Entrywise sum of two same-shape elements."""
    x = as_element(x, name="x")
    y = as_element(y, name="y")
    require_same_shape(x, y, names="addition arguments")
    return x + y


def scale(alpha: complex, x) -> np.ndarray:
    """Scalar multiple ``alpha * x``."""
    return complex(alpha) * as_element(x, name="x")


def unital_structure(e, *, samples: int = 8, seed: int = 0, tol: float = 1e-10):
    """Binary/unary operations induced by an identity element ``e``.

    Returns ``(odot, star)`` with ``odot(x, y) = [x e y]`` and
    ``star(x) = [e x e]``. ``e`` must be square and act as a two-sided
    identity, which is spot-checked on random samples; for the full matrix
    ring the identity matrix is the canonical choice.
    """
    e = require_square(as_element(e, name="e"), name="e")
    rng = np.random.default_rng(seed)
    for _ in range(max(1, samples)):
        x = random_element(e.shape, radius=1.0, seed=rng)
        left = x @ e.conj().T @ e
        right = e @ e.conj().T @ x
        scale_ref = max(1.0, _spec_norm(x))
        if (_spec_norm(left - x) > tol * scale_ref
                or _spec_norm(right - x) > tol * scale_ref):
            raise ValueError(
                "e fails the identity property [xee] = [eex] = x on samples"
            )

    def odot(x, y):
        return tprod(x, e, y)

    def star(x):
        return tprod(e, x, e)

    return odot, star


def random_element(shape, radius: float = 1.0, seed=0) -> np.ndarray:
    """Deterministic pseudo-random element with spectral norm <= ``radius``.

    Entries are i.i.d. standard complex Gaussians; the matrix is then
    rescaled so its spectral norm equals ``radius`` times a uniform draw
    from [0, 1). ``seed`` may be an integer or a ``numpy.random.Generator``
    (the latter lets callers thread one stream through many draws).
    """
    shape = check_shape(shape)
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    g_norm = _spec_norm(g)
    if g_norm == 0.0:
        g[0, 0] = 1.0
        g_norm = 1.0
    return g * (radius * rng.uniform() / g_norm)


@dataclass(frozen=True)
class RingAxiomReport:
    """Worst-case relative residuals from a randomized axiom sweep."""

    max_assoc_residual: float
    max_norm_ineq_violation: float
    max_cube_identity_residual: float
    samples: int
    seed: int
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.max_assoc_residual,
                   self.max_norm_ineq_violation,
                   self.max_cube_identity_residual) <= self.tol

    def as_dict(self) -> dict:
        return {
            "max_assoc_residual": self.max_assoc_residual,
            "max_norm_ineq_violation": self.max_norm_ineq_violation,
            "max_cube_identity_residual": self.max_cube_identity_residual,
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "passed": self.passed,
        }


def axiom_suite(shape, samples: int = 500, seed: int = 0,
                tol: float = DEFAULT_AXIOM_TOL, radius: float = 2.0) -> RingAxiomReport:
    """Randomized check of the three ternary-ring axiom families.

    For each sampled 5-tuple (x, y, z, t, s) evaluates the associativity
    chain ``[xy[zts]] = [x[tzy]s] = [[xyz]ts]``, the norm inequality
    ``||[xyz]|| <= ||x|| ||y|| ||z||`` and the cube identity
    ``||[xxx]|| = ||x||**3``. Residuals are relative to ``max(1, scale)``
    with the natural product scale. Violations are reported, never raised.
    """
    shape = check_shape(shape)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    max_assoc = 0.0
    max_ineq = 0.0
    max_cube = 0.0
    for _ in range(samples):
        x, y, z, t, s = (random_element(shape, radius, rng) for _ in range(5))
        nx, ny, nz, nt, ns = (_spec_norm(a) for a in (x, y, z, t, s))

        a1 = x @ y.conj().T @ (z @ t.conj().T @ s)
        a2 = x @ (t @ z.conj().T @ y).conj().T @ s
        a3 = (x @ y.conj().T @ z) @ t.conj().T @ s
        ref = max(1.0, nx * ny * nz * nt * ns)
        assoc = max(_spec_norm(a1 - a2), _spec_norm(a1 - a3)) / ref
        max_assoc = max(max_assoc, assoc)

        prod = x @ y.conj().T @ z
        bound = nx * ny * nz
        ineq = max(0.0, (_spec_norm(prod) - bound) / max(1.0, bound))
        max_ineq = max(max_ineq, ineq)

        cube = abs(_spec_norm(x @ x.conj().T @ x) - nx ** 3) / max(1.0, nx ** 3)
        max_cube = max(max_cube, cube)
    return RingAxiomReport(max_assoc, max_ineq, max_cube, samples, seed, tol)


def matrix_units_span(shape) -> list[np.ndarray]:
    """The rows*cols matrix units e_ij, row-major order.

    Each unit is a ternary idempotent ([eee] = e exactly) and together
    they span the full matrix ring.
    """
    shape = check_shape(shape)
    units = []
    for i in range(shape.rows):
        for j in range(shape.cols):
            e = np.zeros((shape.rows, shape.cols), dtype=np.complex128)
            e[i, j] = 1.0
            units.append(e)
    return units


def element_to_json(x) -> list:
    """Row-major nested lists of [re, im] pairs."""
    x = as_element(x, name="x")
    return [[[float(v.real), float(v.imag)] for v in row] for row in x]


def element_from_json(data, shape=None) -> np.ndarray:
    """Inverse of :func:`element_to_json`; validates pair structure."""
    try:
        arr = np.array(
            [[complex(pair[0], pair[1]) for pair in row] for row in data],
            dtype=np.complex128,
        )
    except (TypeError, IndexError, ValueError):
        raise ValueError(
            "matrix literal must be nested lists of [re, im] pairs, row-major"
        ) from None
    if arr.ndim != 2:
        raise ValueError("matrix literal must be two-dimensional")
    return as_element(arr, shape=shape, name="matrix literal")


__all__ = [
    "Shape",
    "RingAxiomReport",
    "tprod",
    "norm",
    "add",
    "scale",
    "unital_structure",
    "random_element",
    "axiom_suite",
    "matrix_units_span",
    "element_to_json",
    "element_from_json",
    "DEFAULT_AXIOM_TOL",
]
