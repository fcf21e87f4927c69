"""Trif functional-equation machinery: parameters, subsets, defect operators.

The d-variable equation with subset means is parameterized by integers
(d, l) with 2 <= l <= d-1. Its scaling constants q = l(d-1)/(d-l) and
r = -l/(d-l) and the four binomial coefficients are kept in exact
rational/integer arithmetic; floats only appear when a defect is
evaluated on concrete matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .validation import as_element, certified_leq, require_same_shape

DEFAULT_MAX_D = 12


@dataclass(frozen=True)
class TrifParams:
    """Exact parameters of one instance of the equation.

    The binomial attributes follow the "choose k from n" convention:
    ``c_dm2_lm2 = C(d-2, l-2)``, ``c_dm2_lm1 = C(d-2, l-1)``,
    ``c_dm1_lm1 = C(d-1, l-1)`` and ``c_d_l = C(d, l)``.
    """

    d: int
    l: int
    q: Fraction
    r: Fraction
    c_dm2_lm2: int
    c_dm2_lm1: int
    c_dm1_lm1: int
    c_d_l: int

    @property
    def q_float(self) -> float:
        return float(self.q)

    @property
    def r_float(self) -> float:
        return float(self.r)

    @property
    def bound_prefactor(self) -> Fraction:
        """The 1 / (l * C(d-1, l-1)) factor in front of the summed control."""
        return Fraction(1, self.l * self.c_dm1_lm1)

    def trif_term_budget(self) -> int:
        """Coefficient sum d*C(d-2,l-2) + d*C(d-2,l-1) + l*C(d,l).

        Multiplying a uniform per-term amplitude by this budget dominates
        the equation part of the defect by the triangle inequality.
        """
        return self.d * self.c_dm2_lm2 + self.d * self.c_dm2_lm1 + self.l * self.c_d_l


def make_params(d: int, l: int, max_d: int = DEFAULT_MAX_D) -> TrifParams:
    """Build and validate parameters for integers 2 <= l <= d-1, d <= max_d."""
    d, l = int(d), int(l)
    if not 2 <= l <= d - 1:
        raise ValueError(f"require 2 <= l <= d-1, got d={d}, l={l}")
    if d > max_d:
        raise ValueError(
            f"d={d} exceeds the subset-enumeration budget max_d={max_d}"
        )
    q = Fraction(l * (d - 1), d - l)
    r = Fraction(-l, d - l)
    p = TrifParams(
        d=d, l=l, q=q, r=r,
        c_dm2_lm2=comb(d - 2, l - 2),
        c_dm2_lm1=comb(d - 2, l - 1),
        c_dm1_lm1=comb(d - 1, l - 1),
        c_d_l=comb(d, l),
    )
    # structural identities, exact in rational arithmetic
    assert p.q > 1 and p.r < 0
    assert p.q + (d - 1) * p.r == 0
    assert p.q + (l - 1) * p.r == l
    assert d * p.c_dm2_lm2 + d * p.c_dm2_lm1 == l * p.c_d_l
    assert (d - 1) * p.c_dm2_lm1 == l * comb(d - 1, l)
    assert p.c_dm2_lm1 * p.q == l * p.c_dm1_lm1
    return p


@lru_cache(maxsize=None)
def l_subsets(d: int, l: int) -> tuple[tuple[int, ...], ...]:
    """All C(d, l) strictly increasing index subsets, lexicographic.

    Indices are 0-based positions into the argument list.
    """
    if not 2 <= l <= d - 1:
        raise ValueError(f"require 2 <= l <= d-1, got d={d}, l={l}")
    return tuple(combinations(range(d), l))


@dataclass(frozen=True)
class ScalarDomain:
    """Scalar set the defect operator is quantified over."""

    variant: str  # "unit_circle" | "one_and_i" | "all_complex"

    _VARIANTS = ("unit_circle", "one_and_i", "all_complex")

    def __post_init__(self):
        if self.variant not in self._VARIANTS:
            raise ValueError(f"unknown scalar domain {self.variant!r}")

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if self.variant == "unit_circle":
            theta = rng.uniform(0.0, 2.0 * np.pi, count)
            return np.exp(1j * theta)
        if self.variant == "one_and_i":
            base = np.array([1.0 + 0.0j, 1.0j])
            return np.tile(base, count // 2 + 1)[:count]
        sigma = 1.0
        return sigma * (rng.standard_normal(count) + 1j * rng.standard_normal(count))

    @staticmethod
    def from_name(name: str) -> "ScalarDomain":
        return ScalarDomain(name)


UNIT_CIRCLE = ScalarDomain("unit_circle")
ONE_AND_I = ScalarDomain("one_and_i")
ALL_COMPLEX = ScalarDomain("all_complex")


def _eval(f, x):
    return f(x)


def _trif_combination(f, params: TrifParams, xs, mu):
    """Matrix value of the equation's left side at (xs, mu), lead term included."""
    d, l = params.d, params.l
    total = xs[0].copy()
    for x in xs[1:]:
        total = total + x
    lead_arg = mu * (total / d)
    acc = (d * params.c_dm2_lm2) * _eval(f, lead_arg)
    s_points = None
    for x in xs:
        val = _eval(f, x)
        s_points = val if s_points is None else s_points + val
    acc = acc + (params.c_dm2_lm1 * mu) * s_points
    s_subsets = s_points * 0.0
    for subset in l_subsets(d, l):
        sub_total = xs[subset[0]].copy()
        for j in subset[1:]:
            sub_total = sub_total + xs[j]
        s_subsets = s_subsets + _eval(f, sub_total / l)
    return acc - (l * mu) * s_subsets


def _check_inputs(f, params: TrifParams, xs):
    xs = [as_element(x, name=f"x{i + 1}") for i, x in enumerate(xs)]
    if len(xs) != params.d:
        raise ValueError(f"expected {params.d} arguments, got {len(xs)}")
    require_same_shape(*xs, names="equation arguments")
    return xs


def trif_defect(f, params: TrifParams, xs, mu: complex = 1.0) -> float:
    """Norm of the pure equation defect (no ternary product term).

    Zero (up to float error) for every map of the form additive + constant
    when ``mu = 1``; the scalar multiplies the argument of the lead term
    and the values of the remaining terms.
    """
    xs = _check_inputs(f, params, xs)
    return float(np.linalg.norm(_trif_combination(f, params, xs, complex(mu)), 2))


def full_defect(f, params: TrifParams, mu: complex, xs, u, v, w) -> float:
    """Norm of the full defect operator, ternary term included.

    The lead argument is ``mu*(x1+...+xd)/d + [uvw]/(d*C(d-2,l-2))`` and
    the ternary value ``[f(u)f(v)f(w)]`` is subtracted in the codomain
    ring. With ``u = v = w = 0`` this agrees bit-for-bit with
    :func:`trif_defect` for maps vanishing at zero.
    """
    xs = _check_inputs(f, params, xs)
    u = as_element(u, name="u")
    v = as_element(v, name="v")
    w = as_element(w, name="w")
    require_same_shape(xs[0], u, v, w, names="equation arguments")
    d, l = params.d, params.l
    mu = complex(mu)

    total = xs[0].copy()
    for x in xs[1:]:
        total = total + x
    lead_arg = mu * (total / d) + (u @ v.conj().T @ w) / (d * params.c_dm2_lm2)
    acc = (d * params.c_dm2_lm2) * _eval(f, lead_arg)
    s_points = None
    for x in xs:
        val = _eval(f, x)
        s_points = val if s_points is None else s_points + val
    acc = acc + (params.c_dm2_lm1 * mu) * s_points
    s_subsets = s_points * 0.0
    for subset in l_subsets(d, l):
        sub_total = xs[subset[0]].copy()
        for j in subset[1:]:
            sub_total = sub_total + xs[j]
        s_subsets = s_subsets + _eval(f, sub_total / l)
    acc = acc - (l * mu) * s_subsets
    fu, fv, fw = _eval(f, u), _eval(f, v), _eval(f, w)
    acc = acc - fu @ fv.conj().T @ fw
    return float(np.linalg.norm(acc, 2))


def collapse_defect(f, params: TrifParams, x, *, zero_tol: float = 1e-9,
                    cross_check: bool = False) -> float:
    """Norm of ``C(d-2,l-1) f(qx) - l C(d-1,l-1) f(x)``.

    Requires ``f(0) = 0`` (within ``zero_tol``); under that hypothesis the
    value equals the pure defect at the substituted tuple
    ``(qx, rx, ..., rx)`` with scalar 1, which ``cross_check=True``
    asserts to 1e-12 relative.
    """
    x = as_element(x, name="x")
    zero = np.zeros_like(x)
    f0 = float(np.linalg.norm(_eval(f, zero), 2))
    if f0 > zero_tol:
        raise ValueError(f"map must vanish at zero (||f(0)|| = {f0:.3e})")
    qf, rf = params.q_float, params.r_float
    val = float(np.linalg.norm(
        params.c_dm2_lm1 * _eval(f, qf * x)
        - (params.l * params.c_dm1_lm1) * _eval(f, x), 2))
    if cross_check:
        tuple_val = trif_defect(
            f, params, [qf * x] + [rf * x] * (params.d - 1), 1.0)
        if abs(val - tuple_val) > 1e-12 * max(1.0, val):
            raise AssertionError(
                f"collapse/substitution cross-check failed: {val!r} vs {tuple_val!r}"
            )
    return val


@dataclass(frozen=True, eq=False)
class DefectSample:
    """One evaluated defect with the control value it must stay under."""

    index: int
    mu: complex
    xs: tuple
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    defect: float
    control_value: float
    scale: float

    @property
    def dominated(self) -> bool:
        return certified_leq(self.defect, self.control_value, scale=self.scale)


__all__ = [
    "TrifParams",
    "make_params",
    "l_subsets",
    "ScalarDomain",
    "UNIT_CIRCLE",
    "ONE_AND_I",
    "ALL_COMPLEX",
    "trif_defect",
    "full_defect",
    "collapse_defect",
    "DefectSample",
    "DEFAULT_MAX_D",
]
