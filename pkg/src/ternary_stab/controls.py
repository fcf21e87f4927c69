"""Control functions and the summed q-scaled series behind the bounds.

A control assigns a nonnegative budget to each defect input tuple
(x1..xd, u, v, w). The summed series

    summed_control(args) = sum_{j>=0} q**(-j) * phi(q**j * args)

must converge for the stability machinery to apply; for the constant and
power-norm kinds the scaled terms are exactly geometric (ratios 1/q and
q**(p-1)), so truncation tails are exact and closed forms exist. Custom
controls are looked up in a registry by name so that every report can be
reproduced from its JSON descriptor alone; their tails are certified from
observed term ratios.

Convention for the power norm at p = 0: ``||a||**0`` is 0 for an exactly
zero argument and 1 otherwise. This keeps phi(0, ..., 0) = 0 consistent
with maps vanishing at zero and is applied uniformly here and in the
closed forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ControlContractError, NonSummableError
from .trif import TrifParams
from .validation import as_element

DEFAULT_MAX_TERMS = 60
RATIO_WINDOW = 8
RATIO_MARGIN = 0.05


def pnorm_term(nrm: float, p: float) -> float:
    """``nrm**p`` under the p = 0 convention (0 at an exact zero)."""
    if nrm == 0.0:
        return 0.0
    return nrm ** p


class ControlFunction:
    """Base class; subclasses are immutable descriptors with an evaluator."""

    kind = "abstract"

    def evaluate(self, xs, u, v, w) -> float:
        raise NotImplementedError

    def evaluate_norms(self, norms) -> float | None:
        """Value from argument norms alone, or None if norm data is not enough.

        ``norms`` lists the d + 3 spectral norms of (x1..xd, u, v, w). Used
        by the series engine to scale terms analytically (||q**j a|| =
        q**j ||a|| exactly).
        """
        return None

    def geometric_ratio(self, params: TrifParams) -> float | None:
        """Exact ratio of consecutive scaled series terms, if constant."""
        return None

    def series_closed_form(self, params: TrifParams, base_value: float) -> float | None:
        """Closed form of the full series given the j = 0 term, if known."""
        return None

    def to_descriptor(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_descriptor(desc: dict) -> "ControlFunction":
        try:
            kind = desc["kind"]
        except (TypeError, KeyError):
            raise ValueError(f"control descriptor needs a 'kind': {desc!r}") from None
        if kind == "constant":
            return ConstantControl(float(desc["delta"]))
        if kind == "pnorm":
            return PNormControl(float(desc["eps"]), float(desc["p"]))
        if kind == "custom":
            return CustomControl(desc["name"], dict(desc.get("params", {})))
        raise ValueError(f"unknown control kind {kind!r}")


@dataclass(frozen=True)
class ConstantControl(ControlFunction):
    """phi = delta regardless of the inputs."""

    delta: float
    kind = "constant"

    def __post_init__(self):
        if not (self.delta >= 0.0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be finite and >= 0, got {self.delta}")

    def evaluate(self, xs, u, v, w) -> float:
        return self.delta

    def evaluate_norms(self, norms) -> float:
        return self.delta

    def geometric_ratio(self, params: TrifParams) -> float:
        return 1.0 / params.q_float

    def series_closed_form(self, params: TrifParams, base_value: float) -> float:
        q = params.q_float
        return base_value * q / (q - 1.0)

    def to_descriptor(self) -> dict:
        return {"kind": "constant", "delta": self.delta}


@dataclass(frozen=True)
class PNormControl(ControlFunction):
    """phi = eps * (sum_j ||x_j||**p + ||u||**p + ||v||**p + ||w||**p)."""

    eps: float
    p: float
    kind = "pnorm"

    def __post_init__(self):
        if not (self.eps >= 0.0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be finite and >= 0, got {self.eps}")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(
                f"p must lie in [0, 1): the scaled series has ratio q**(p-1), "
                f"which diverges for p >= 1 (got p={self.p})"
            )

    def evaluate(self, xs, u, v, w) -> float:
        norms = [float(np.linalg.norm(a, 2)) for a in (*xs, u, v, w)]
        return self.evaluate_norms(norms)

    def evaluate_norms(self, norms) -> float:
        return self.eps * sum(pnorm_term(n, self.p) for n in norms)

    def geometric_ratio(self, params: TrifParams) -> float:
        return params.q_float ** (self.p - 1.0)

    def series_closed_form(self, params: TrifParams, base_value: float) -> float:
        a = params.q_float ** (1.0 - self.p)
        return base_value * a / (a - 1.0)

    def to_descriptor(self) -> dict:
        return {"kind": "pnorm", "eps": self.eps, "p": self.p}


_CONTROL_REGISTRY: dict = {}


def register_control(name: str, factory) -> None:
    """Register an evaluator factory for custom controls.

    ``factory(params_dict)`` must return a callable ``(xs, u, v, w) -> float``.
    Registration keeps report configs free of arbitrary code: a descriptor
    names the evaluator, it never embeds it.
    """
    _CONTROL_REGISTRY[name] = factory


def registered_controls() -> tuple:
    return tuple(sorted(_CONTROL_REGISTRY))


@dataclass(frozen=True)
class CustomControl(ControlFunction):
    """Registry-backed control; must pass tail certification before use in bounds."""

    name: str
    params: dict = field(default_factory=dict)
    kind = "custom"

    def __post_init__(self):
        if self.name not in _CONTROL_REGISTRY:
            raise ValueError(
                f"custom control {self.name!r} is not registered "
                f"(known: {registered_controls()})"
            )

    def evaluate(self, xs, u, v, w) -> float:
        return _CONTROL_REGISTRY[self.name](self.params)(xs, u, v, w)

    def to_descriptor(self) -> dict:
        return {"kind": "custom", "name": self.name, "params": dict(self.params)}


def _norm_power_sum_factory(params: dict):
    coef = float(params.get("coef", 1.0))
    power = float(params.get("power", 1.0))

    def ev(xs, u, v, w):
        total = sum(pnorm_term(float(np.linalg.norm(a, 2)), power)
                    for a in (*xs, u, v, w))
        return coef * total

    return ev


register_control("norm_power_sum", _norm_power_sum_factory)


def eval_control(cf: ControlFunction, xs, u, v, w) -> float:
    """Evaluate a control and enforce its nonnegative/finite contract."""
    raw = cf.evaluate(xs, u, v, w)
    try:
        val = float(raw)
    except (TypeError, ValueError):
        raise ControlContractError(
            f"control {cf.kind!r} returned non-numeric {raw!r}"
        ) from None
    if not (math.isfinite(val) and val >= 0.0):
        raise ControlContractError(
            f"control {cf.kind!r} returned {val!r}; must be finite and >= 0"
        )
    return val


@dataclass(frozen=True)
class BoundCertificate:
    """Truncated series value with a certified tail (and closed form if any)."""

    truncated_value: float
    closed_form_value: float | None
    terms_used: int
    tail_bound: float

    @property
    def value(self) -> float:
        """Certified value: closed form when known, else truncation + tail."""
        if self.closed_form_value is not None:
            return self.closed_form_value
        return self.truncated_value + self.tail_bound


def control_series(cf: ControlFunction, params: TrifParams, xs, u, v, w, *,
                   start: int = 0, stop: int | None = None,
                   max_terms: int = DEFAULT_MAX_TERMS,
                   ratio_window: int = RATIO_WINDOW,
                   ratio_margin: float = RATIO_MARGIN) -> BoundCertificate:
    """Partial sum of ``q**(-j) * phi(q**j * args)`` over j in [start, stop).

    ``stop=None`` means the infinite series: ``max_terms`` terms are summed
    and the remainder is covered by a certified geometric tail. For kinds
    with a known exact ratio the tail is exact; otherwise the last
    ``ratio_window`` term ratios must sit below ``1 - ratio_margin`` or a
    :class:`NonSummableError` is raised.
    """
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    xs = [as_element(x, name=f"x{i + 1}") for i, x in enumerate(xs)]
    u = as_element(u, name="u")
    v = as_element(v, name="v")
    w = as_element(w, name="w")
    q = params.q_float

    base_norms = [float(np.linalg.norm(a, 2)) for a in (*xs, u, v, w)]
    norm_based = cf.evaluate_norms(base_norms) is not None

    def term(j: int) -> float:
        scale = q ** j
        if norm_based:
            phi = cf.evaluate_norms([scale * n for n in base_norms])
        else:
            phi = eval_control(cf, [scale * x for x in xs],
                               scale * u, scale * v, scale * w)
        if not (math.isfinite(phi) and phi >= 0.0):
            raise ControlContractError(
                f"control {cf.kind!r} returned {phi!r} at series index {j}"
            )
        return phi / scale

    if stop is not None:
        if stop < start:
            raise ValueError("stop must be >= start")
        terms = [term(j) for j in range(start, stop)]
        return BoundCertificate(
            truncated_value=float(sum(terms)),
            closed_form_value=None,
            terms_used=len(terms),
            tail_bound=0.0,
        )

    n_terms = max_terms
    terms = [term(start + j) for j in range(n_terms)]
    truncated = float(sum(terms))
    last = terms[-1]

    ratio = cf.geometric_ratio(params)
    if ratio is not None:
        tail = last * ratio / (1.0 - ratio) if last > 0.0 else 0.0
    else:
        window = terms[-min(ratio_window, n_terms):]
        if all(t == 0.0 for t in window):
            tail = 0.0
        else:
            ratios = [b / a for a, b in zip(window, window[1:]) if a > 0.0]
            est = max(ratios) if ratios else 1.0
            if est > 1.0 - ratio_margin:
                raise NonSummableError(est)
            tail = last * est / (1.0 - est)

    closed = None
    if start == 0:
        base = terms[0]
        closed = cf.series_closed_form(params, base)
    return BoundCertificate(
        truncated_value=truncated,
        closed_form_value=closed,
        terms_used=n_terms,
        tail_bound=float(tail),
    )


def summed_control(cf: ControlFunction, params: TrifParams, xs, u, v, w,
              max_terms: int = DEFAULT_MAX_TERMS,
              tail_tol: float | None = None) -> BoundCertificate:
    """Summed scaled series of a control at one input tuple.

    ``tail_tol``, when given, additionally requires the certified tail to
    be at most ``tail_tol * max(1, truncated)``.
    """
    cert = control_series(cf, params, xs, u, v, w, max_terms=max_terms)
    if tail_tol is not None and cert.tail_bound > tail_tol * max(1.0, cert.truncated_value):
        raise NonSummableError(
            cert.tail_bound,
            f"series tail {cert.tail_bound:.3e} exceeds requested tolerance",
        )
    return cert


def bound_tuple(params: TrifParams, x):
    """The substituted tuple (qx, rx, ..., rx, 0, 0, 0) behind the bounds."""
    x = as_element(x, name="x")
    zero = np.zeros_like(x)
    return ([params.q_float * x] + [params.r_float * x] * (params.d - 1),
            zero, zero, zero)


def stability_bound(cf: ControlFunction, params: TrifParams, x,
                    max_terms: int = DEFAULT_MAX_TERMS) -> float:
    """Certified distance bound between a map and its extracted limit.

    Evaluates the summed series at the substituted tuple and scales by
    1 / (l * C(d-1, l-1)). Always goes through the generic series engine;
    the closed-form route lives in :func:`pnorm_bound` so the two stay
    independent cross-checks.
    """
    xs, u, v, w = bound_tuple(params, x)
    cert = control_series(cf, params, xs, u, v, w, max_terms=max_terms)
    return float(params.bound_prefactor) * cert.value


def pnorm_bound(eps: float, p: float, params: TrifParams, x) -> float:
    """Closed-form power-norm bound.

    ``q**(1-p) (q**p + (d-1)|r|**p) eps / (l C(d-1,l-1) (q**(1-p) - 1)) * ||x||**p``.
    The scaling constant r is negative; it enters through ``||r x||**p``,
    so its absolute value is used. ``x`` may be an element or a norm.
    """
    if not (eps >= 0.0 and math.isfinite(eps)):
        raise ValueError(f"eps must be finite and >= 0, got {eps}")
    if not 0.0 <= p < 1.0:
        raise ValueError(
            f"p={p} outside the valid range [0, 1): the series ratio "
            f"q**(p-1) reaches 1 and the bound diverges"
        )
    if isinstance(x, (int, float)):
        nrm = float(x)
        if nrm < 0:
            raise ValueError("norm argument must be >= 0")
    else:
        nrm = float(np.linalg.norm(as_element(x, name="x"), 2))
    q = params.q_float
    r_abs = abs(params.r_float)
    d, l = params.d, params.l
    coef = (q ** (1.0 - p) * (q ** p + (d - 1) * r_abs ** p) * eps
            / (l * params.c_dm1_lm1 * (q ** (1.0 - p) - 1.0)))
    return coef * pnorm_term(nrm, p)


@dataclass(frozen=True)
class ProbeResult:
    passed: bool
    estimated_ratio: float


def summability_probe(cf: ControlFunction, params: TrifParams, sample_points,
                      horizon: int = 16, margin: float = RATIO_MARGIN) -> ProbeResult:
    """Estimate the limsup ratio of scaled series terms over sample points.

    ``sample_points`` is an iterable of (xs, u, v, w) tuples. Passes iff
    the estimated ratio stays at or below ``1 - margin``. A probe result is
    returned, never raised.
    """
    if horizon < 8:
        raise ValueError("horizon must be >= 8")
    q = params.q_float
    worst = 0.0
    for xs, u, v, w in sample_points:
        xs = [as_element(x) for x in xs]
        u, v, w = as_element(u), as_element(v), as_element(w)
        terms = []
        for j in range(horizon):
            s = q ** j
            phi = eval_control(cf, [s * x for x in xs], s * u, s * v, s * w)
            terms.append(phi / s)
        tail = terms[horizon // 2:]
        ratios = [b / a for a, b in zip(tail, tail[1:]) if a > 0.0]
        if ratios:
            worst = max(worst, max(ratios))
    return ProbeResult(passed=worst <= 1.0 - margin, estimated_ratio=worst)


__all__ = [
    "ControlFunction",
    "ConstantControl",
    "PNormControl",
    "CustomControl",
    "register_control",
    "registered_controls",
    "eval_control",
    "BoundCertificate",
    "control_series",
    "summed_control",
    "bound_tuple",
    "stability_bound",
    "pnorm_bound",
    "ProbeResult",
    "summability_probe",
    "pnorm_term",
    "DEFAULT_MAX_TERMS",
]
