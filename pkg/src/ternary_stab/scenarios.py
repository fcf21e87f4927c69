"""Factories for approximate homomorphisms with known ground truth.

Noise model
-----------
Perturbations are deterministic pseudo-random fields: the direction is
drawn from a generator seeded by a blake2b hash of the input's entries
quantized to a 2**-20 grid, normalized to spectral norm one, then scaled
by an amplitude envelope. The same input always produces the same value,
which the scaled iteration requires, and the field vanishes at the zero
matrix (maps under test must vanish at zero) and outside a bounded
support:

* ``constant_ball`` - amplitude delta on 0 < ||x|| < support_radius;
* ``pnorm`` - amplitude eps * ||x||**p on ||x|| < support_radius;
* ``trif_noise`` - amplitude on a norm annulus chosen to avoid the
  q-orbits of a spanning set and of its ternary products, so the
  factorization identity holds exactly on those orbits while the
  equation defect is genuinely nonzero elsewhere.

Support boundedness is what makes an advertised control possible at all:
the ternary part of the defect of S + eta grows like ||u|| ||v|| bilinearly,
so a perturbation live at all scales admits no summable control. Attached
controls are certified on a documented sampling region (norms up to
``region_radius``); the bound-defining series only ever evaluates the
control at tuples with zero ternary slots, where the domination is global.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .controls import ConstantControl, ControlFunction, PNormControl, eval_control
from .ring import element_from_json, element_to_json, matrix_units_span, random_element
from .trif import (
    ALL_COMPLEX,
    ONE_AND_I,
    UNIT_CIRCLE,
    DefectSample,
    ScalarDomain,
    TrifParams,
    full_defect,
    make_params,
    trif_defect,
)
from .validation import as_element, check_shape, require_isometry

QUANT_GRID = 2.0 ** 20
DEFAULT_SUPPORT_RADIUS = 5.0
DEFAULT_REGION_RADIUS = 2.0
SCENARIO_KINDS = ("exact", "truncated", "constant_noise", "pnorm_noise",
                  "trif_noise", "one_and_i")


def _norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2))


@dataclass(eq=False)
class ExactHom:
    """Isometry-pair homomorphism S(x) = U x V*.

    U*U = I and V*V = I make S multiplicative and norm preserving, so its
    sup norm over the unit ball is exactly one.
    """

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.U = require_isometry(self.U, name="U")
        self.V = require_isometry(self.V, name="V")

    @property
    def domain_shape(self):
        return (self.U.shape[1], self.V.shape[1])

    @property
    def codomain_shape(self):
        return (self.U.shape[0], self.V.shape[0])

    def __call__(self, x) -> np.ndarray:
        return self.U @ x @ self.V.conj().T


def random_isometry(rows: int, cols: int, seed=0) -> np.ndarray:
    """QR-derived isometry with rows >= cols, deterministic in the seed."""
    if rows < cols:
        raise ValueError("an isometry needs rows >= cols")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(a)
    # fix column phases so the result is stable under scaling of a
    phases = np.diag(r).copy()
    phases[phases == 0] = 1.0
    return q * (phases / np.abs(phases)).conj()


@dataclass(eq=False)
class MapUnderTest:
    """An evaluable map between two matrix rings plus scenario metadata."""

    domain_shape: tuple
    codomain_shape: tuple
    evaluator: object
    kind: str
    control: ControlFunction | None
    ground_truth: ExactHom | None = None
    scalar_domain: ScalarDomain = UNIT_CIRCLE
    defect_kind: str = "full"  # "full" evaluates the ternary term, "trif_only" skips it
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(x)

    def to_descriptor(self) -> dict:
        desc = {
            "kind": self.kind,
            "domain_shape": list(self.domain_shape),
            "codomain_shape": list(self.codomain_shape),
            "seed": int(self.seed),
            "scalar_domain": self.scalar_domain.variant,
            "defect_kind": self.defect_kind,
            "control": self.control.to_descriptor() if self.control else None,
            "d": self.meta.get("d"),
            "l": self.meta.get("l"),
        }
        if self.ground_truth is not None:
            desc["hom"] = {
                "U": element_to_json(self.ground_truth.U),
                "V": element_to_json(self.ground_truth.V),
            }
        for key in ("noise", "annulus", "z_samples", "n_list",
                    "support_radius", "region_radius"):
            if key in self.meta:
                desc[key] = self.meta[key]
        return desc


def _noise_unit(x: np.ndarray, out_shape, seed: int) -> np.ndarray:
    """Spectral-norm-one matrix determined by the quantized input and seed."""
    arr = np.ascontiguousarray(x)
    h = hashlib.blake2b(digest_size=16)
    h.update((int(seed) & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"))
    h.update(np.array(arr.shape, dtype=np.int64).tobytes())
    h.update(np.round(arr.real * QUANT_GRID).astype(np.int64).tobytes())
    h.update(np.round(arr.imag * QUANT_GRID).astype(np.int64).tobytes())
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(h.digest(), "little")))
    g = rng.standard_normal(out_shape) + 1j * rng.standard_normal(out_shape)
    g_norm = _norm(g)
    if g_norm == 0.0:
        g[0, 0] = 1.0
        g_norm = 1.0
    return g / g_norm


def _noise_field(out_shape, seed: int, amplitude_of_norm):
    """eta(x) = amplitude(||x||) * unit(x); zero amplitude short-circuits."""
    out_shape = tuple(out_shape)

    def eta(x):
        amp = amplitude_of_norm(_norm(x))
        if amp == 0.0:
            return np.zeros(out_shape, dtype=np.complex128)
        return amp * _noise_unit(x, out_shape, seed)

    return eta


def _spot_check_domination(m: MapUnderTest, params: TrifParams,
                           samples: int = 50, seed: int = 987) -> None:
    for s in sweep_defects(m, params, samples=samples, seed=seed,
                           radius=m.meta.get("region_radius", DEFAULT_REGION_RADIUS)):
        if not s.dominated:
            raise RuntimeError(
                f"scenario {m.kind!r} violates its advertised control at "
                f"construction: defect {s.defect:.6g} > control {s.control_value:.6g}"
            )


def make_isometry_hom(U, V, *, scalar_domain: ScalarDomain = ALL_COMPLEX,
                      params: TrifParams | None = None, seed: int = 0,
                      check: bool = True) -> MapUnderTest:
    """Exact homomorphism scenario; its true control is identically zero."""
    hom = ExactHom(as_element(U, name="U"), as_element(V, name="V"))
    m = MapUnderTest(
        domain_shape=hom.domain_shape,
        codomain_shape=hom.codomain_shape,
        evaluator=hom,
        kind="exact",
        control=ConstantControl(0.0),
        ground_truth=hom,
        scalar_domain=scalar_domain,
        seed=seed,
        meta={"region_radius": DEFAULT_REGION_RADIUS},
    )
    if params is not None:
        m.meta.update({"d": params.d, "l": params.l})
        if check:
            _spot_check_domination(m, params)
    return m


def make_truncated_hom(S: ExactHom, params: TrifParams, *,
                       scalar_domain: ScalarDomain = UNIT_CIRCLE,
                       seed: int = 0, check: bool = True) -> MapUnderTest:
    """Map equal to S inside the open unit ball and zero outside.

    The norm-one boundary belongs to the zero branch. Since ||S|| <= 1 on
    the support, every defect term is bounded by its coefficient and the
    constant control d*C(d-2,l-2) + d*C(d-2,l-1) + l*C(d,l) + 1 dominates
    globally. The scaled iteration collapses to the zero map.
    """
    delta = float(params.trif_term_budget() + 1)

    def ev(x):
        if _norm(x) >= 1.0:
            return np.zeros(S.codomain_shape, dtype=np.complex128)
        return S(x)

    m = MapUnderTest(
        domain_shape=S.domain_shape,
        codomain_shape=S.codomain_shape,
        evaluator=ev,
        kind="truncated",
        control=ConstantControl(delta),
        ground_truth=S,
        scalar_domain=scalar_domain,
        seed=seed,
        meta={"d": params.d, "l": params.l, "delta": delta,
              "region_radius": DEFAULT_REGION_RADIUS,
              "expected_extraction": "zero_map"},
    )
    if check:
        _spot_check_domination(m, params)
    return m


def make_perturbed_hom(S: ExactHom, params: TrifParams,
                       noise_kind: str = "constant_ball", *,
                       delta: float = 0.25, eps: float = 0.1, p: float = 0.5,
                       seed: int = 0,
                       support_radius: float = DEFAULT_SUPPORT_RADIUS,
                       region_radius: float = DEFAULT_REGION_RADIUS,
                       scalar_domain: ScalarDomain = UNIT_CIRCLE,
                       check: bool = True) -> MapUnderTest:
    """S plus a support-bounded deterministic noise field.

    ``constant_ball`` keeps ||eta|| <= delta, ``pnorm`` keeps
    ||eta(x)|| <= eps * ||x||**p; both vanish at zero and outside
    ``support_radius``. The attached control is the triangle-inequality
    budget of the full defect, valid for inputs with norms up to
    ``region_radius`` (the ternary cross terms scale with the region, see
    the module docstring); the budget of the zero-ternary-slot tuples that
    define the bounds is global.
    """
    if support_radius <= 0 or region_radius <= 0:
        raise ValueError("support_radius and region_radius must be positive")
    r = float(region_radius)
    budget = params.trif_term_budget()
    d, l = params.d, params.l
    if noise_kind == "constant_ball":
        if delta < 0:
            raise ValueError("delta must be >= 0")
        b = r + delta
        cross = b * b + r * b + r * r
        control: ControlFunction = ConstantControl(delta * (budget + cross))

        def amp(nrm: float) -> float:
            return delta if 0.0 < nrm < support_radius else 0.0

        noise_meta = {"kind": "constant_ball", "delta": delta}
    elif noise_kind == "pnorm":
        if eps < 0:
            raise ValueError("eps must be >= 0")
        if not 0.0 <= p < 1.0:
            raise ValueError("p must lie in [0, 1)")
        b = r + eps * max(1.0, r)
        k_x = (d * params.c_dm2_lm2 * d ** (-p) + params.c_dm2_lm1
               + l ** (1.0 - p) * params.c_dm1_lm1)
        k_uvw = (d * params.c_dm2_lm2 * r ** (2.0 * p)
                 + max(b * b, r * b, r * r))
        control = PNormControl(eps * (k_x + k_uvw), p)

        def amp(nrm: float) -> float:
            if nrm <= 0.0 or nrm >= support_radius:
                return 0.0
            return eps * nrm ** p

        noise_meta = {"kind": "pnorm", "eps": eps, "p": p}
    else:
        raise ValueError(f"unknown noise kind {noise_kind!r}")

    eta = _noise_field(S.codomain_shape, seed, amp)

    def ev(x):
        return S(x) + eta(x)

    m = MapUnderTest(
        domain_shape=S.domain_shape,
        codomain_shape=S.codomain_shape,
        evaluator=ev,
        kind="one_and_i" if scalar_domain.variant == "one_and_i" else f"{noise_kind.split('_')[0]}_noise",
        control=control,
        ground_truth=S,
        scalar_domain=scalar_domain,
        seed=seed,
        meta={"d": d, "l": l, "noise": noise_meta,
              "support_radius": support_radius, "region_radius": r,
              "expected_extraction": "ground_truth"},
    )
    if check:
        _spot_check_domination(m, params)
    return m


def random_element_with_norm(shape, nrm: float, seed=0) -> np.ndarray:
    """Gaussian-direction element rescaled to an exact spectral norm."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    shape = check_shape(shape)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    g_norm = _norm(g)
    if g_norm == 0.0:
        g[0, 0] = 1.0
        g_norm = 1.0
    return g * (nrm / g_norm)


def _protected_orbit_norms(span, z_samples, params: TrifParams, n_list) -> list:
    """Norms the noise annulus must avoid: q-orbit points of the identity."""
    q = params.q_float
    pts = [float(_norm(z)) for z in z_samples]
    for n in n_list:
        for s in span:
            pts.append((q ** n) * _norm(s))
        for s1 in span:
            for s2 in span:
                for z in z_samples:
                    nv = _norm(s1 @ s2.conj().T @ z)
                    if nv > 0.0:
                        pts.append((q ** (2 * n)) * nv)
    return pts


def make_trif_noise_hom(S: ExactHom, span, noise_amplitude: float, seed: int,
                        params: TrifParams, *, n_list=(1, 2, 3, 4),
                        z_count: int = 5, window=(0.35, 2.3),
                        z_samples=None, annulus=None,
                        check: bool = True) -> MapUnderTest:
    """S plus annulus-supported noise leaving a spanning-set orbit exact.

    The noise lives on a norm annulus inside ``window`` chosen to exclude
    the norms of q**n s, q**(2n) [s1 s2 z] and the sampled z themselves,
    for n in ``n_list``. Orbit membership of floats is undecidable, norm
    exclusion is. The control is the constant budget of the equation-only
    defect (this scenario's hypothesis has no ternary term), which holds
    globally.
    """
    span = [as_element(s, name="span element") for s in span]
    for s in span:
        if _norm(s @ s.conj().T @ s - s) > 1e-9 * max(1.0, _norm(s)):
            raise ValueError("span element fails the ternary idempotent check")
    rng = np.random.default_rng(seed)
    if z_samples is None:
        z_samples = [random_element_with_norm(S.domain_shape, 0.4 + 0.04 * k, rng)
                     for k in range(z_count)]
    else:
        z_samples = [as_element(z, name="z") for z in z_samples]

    if annulus is None:
        lo, hi = float(window[0]), float(window[1])
        pts = sorted(v for v in _protected_orbit_norms(span, z_samples, params, n_list)
                     if lo < v < hi)
        edges = [lo] + pts + [hi]
        widths = [(b - a, a, b) for a, b in zip(edges, edges[1:])]
        width, glo, ghi = max(widths)
        if width < 0.05:
            raise RuntimeError("no usable annulus gap in the requested window")
        annulus = (glo + 0.3 * width, ghi - 0.3 * width)
    a_lo, a_hi = float(annulus[0]), float(annulus[1])

    def amp(nrm: float) -> float:
        return noise_amplitude if a_lo < nrm < a_hi else 0.0

    eta = _noise_field(S.codomain_shape, seed, amp)

    def ev(x):
        return S(x) + eta(x)

    control = ConstantControl(noise_amplitude * params.trif_term_budget())
    m = MapUnderTest(
        domain_shape=S.domain_shape,
        codomain_shape=S.codomain_shape,
        evaluator=ev,
        kind="trif_noise",
        control=control,
        ground_truth=S,
        scalar_domain=UNIT_CIRCLE,
        defect_kind="trif_only",
        seed=seed,
        meta={"d": params.d, "l": params.l,
              "noise": {"kind": "annulus", "amplitude": noise_amplitude},
              "annulus": [a_lo, a_hi],
              "z_samples": [element_to_json(z) for z in z_samples],
              "n_list": list(n_list),
              "region_radius": DEFAULT_REGION_RADIUS,
              "expected_extraction": "ground_truth"},
    )
    if check:
        _spot_check_domination(m, params)
    return m


@dataclass(frozen=True)
class ExpectedOutcome:
    """What a pipeline run should find for a catalogue scenario."""

    extraction_target: str  # "ground_truth" | "zero_map"
    claim: str
    extraction_tol: float
    bound_variant: str = "scaled"


@dataclass(eq=False)
class CatalogueEntry:
    scenario_id: str
    map: MapUnderTest
    expected: ExpectedOutcome


def _child_seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(2, dtype=np.uint64)[0])


def catalogue(params: TrifParams, shapes, seed: int = 0,
              noise=None) -> list[CatalogueEntry]:
    """The standard six-scenario set per shape.

    exact / truncated / constant_noise / pnorm_noise / trif_noise /
    one_and_i, each with its advertised control and scalar domain.
    ``noise`` may override the default amplitudes
    (delta, eps, p, trif_amplitude, support_radius).
    """
    noise = dict(noise or {})
    delta = float(noise.get("delta", 0.25))
    eps = float(noise.get("eps", 0.1))
    p = float(noise.get("p", 0.5))
    trif_amp = float(noise.get("trif_amplitude", 0.5))
    support = float(noise.get("support_radius", DEFAULT_SUPPORT_RADIUS))

    entries = []
    for shape in shapes:
        shape = check_shape(shape)
        base = np.random.SeedSequence(entropy=int(seed),
                                      spawn_key=(shape.rows, shape.cols))
        kids = base.spawn(8)
        hom = ExactHom(
            random_isometry(shape.rows, shape.rows,
                            np.random.default_rng(kids[0])),
            random_isometry(shape.cols, shape.cols,
                            np.random.default_rng(kids[1])),
        )
        tag = f"{shape.rows}x{shape.cols}"

        def entry(scenario_id, m, expected):
            entries.append(CatalogueEntry(scenario_id, m, expected))

        entry(f"exact-{tag}",
              make_isometry_hom(hom.U, hom.V, params=params,
                                seed=_child_seed(kids[2])),
              ExpectedOutcome("ground_truth", "exactness", 1e-10))
        entry(f"truncated-{tag}",
              make_truncated_hom(hom, params, seed=_child_seed(kids[3])),
              ExpectedOutcome("zero_map", "zero_limit", 1e-12))
        entry(f"constant_noise-{tag}",
              make_perturbed_hom(hom, params, "constant_ball", delta=delta,
                                 seed=_child_seed(kids[4]),
                                 support_radius=support),
              ExpectedOutcome("ground_truth", "bounded_recovery", 1e-8))
        entry(f"pnorm_noise-{tag}",
              make_perturbed_hom(hom, params, "pnorm", eps=eps, p=p,
                                 seed=_child_seed(kids[5]),
                                 support_radius=support),
              ExpectedOutcome("ground_truth", "power_norm_bound", 1e-8))
        entry(f"trif_noise-{tag}",
              make_trif_noise_hom(hom, matrix_units_span(shape), trif_amp,
                                  _child_seed(kids[6]), params),
              ExpectedOutcome("ground_truth", "factorization", 1e-8))
        entry(f"one_and_i-{tag}",
              make_perturbed_hom(hom, params, "constant_ball", delta=delta,
                                 seed=_child_seed(kids[7]),
                                 support_radius=support,
                                 scalar_domain=ONE_AND_I),
              ExpectedOutcome("ground_truth", "axis_scalar_domain", 1e-8,
                              bound_variant="unscaled"))
    return entries


def scenario_from_descriptor(desc: dict) -> MapUnderTest:
    """Rebuild a scenario map from its JSON descriptor.

    The evaluator is reconstructed from named factories and stored
    parameters; no code is ever deserialized.
    """
    kind = desc["kind"]
    params = make_params(int(desc["d"]), int(desc["l"]))
    seed = int(desc.get("seed", 0))
    domain = ScalarDomain.from_name(desc.get("scalar_domain", "unit_circle"))
    if "hom" not in desc:
        raise ValueError(f"descriptor for {kind!r} needs the isometry pair")
    hom = ExactHom(element_from_json(desc["hom"]["U"]),
                   element_from_json(desc["hom"]["V"]))
    if kind == "exact":
        return make_isometry_hom(hom.U, hom.V, params=params, seed=seed,
                                 scalar_domain=domain, check=False)
    if kind == "truncated":
        return make_truncated_hom(hom, params, seed=seed,
                                  scalar_domain=domain, check=False)
    if kind in ("constant_noise", "pnorm_noise", "one_and_i"):
        noise = desc["noise"]
        common = dict(seed=seed,
                      support_radius=float(desc["support_radius"]),
                      region_radius=float(desc["region_radius"]),
                      scalar_domain=domain, check=False)
        if noise["kind"] == "constant_ball":
            return make_perturbed_hom(hom, params, "constant_ball",
                                      delta=float(noise["delta"]), **common)
        return make_perturbed_hom(hom, params, "pnorm",
                                  eps=float(noise["eps"]), p=float(noise["p"]),
                                  **common)
    if kind == "trif_noise":
        span = matrix_units_span(desc["domain_shape"])
        return make_trif_noise_hom(
            hom, span, float(desc["noise"]["amplitude"]), seed, params,
            n_list=tuple(desc["n_list"]),
            z_samples=[element_from_json(z) for z in desc["z_samples"]],
            annulus=tuple(desc["annulus"]), check=False)
    raise ValueError(f"unknown scenario kind {kind!r}")


def sweep_defects(m: MapUnderTest, params: TrifParams, samples: int,
                  seed: int = 0, radius: float | None = None) -> list:
    """Sampled defects of a scenario against its advertised control.

    Scalars come from the scenario's domain; ``trif_only`` scenarios
    evaluate the equation defect with zero ternary slots. Samples are
    generated up front so batch evaluation order cannot affect results.
    """
    if m.control is None:
        raise ValueError("scenario has no attached control")
    if radius is None:
        radius = m.meta.get("region_radius", DEFAULT_REGION_RADIUS)
    rng = np.random.default_rng(seed)
    mus = m.scalar_domain.sample(samples, rng)
    out = []
    zero = np.zeros(tuple(m.domain_shape), dtype=np.complex128)
    for i in range(samples):
        xs = tuple(random_element(m.domain_shape, radius, rng)
                   for _ in range(params.d))
        if m.defect_kind == "full":
            u = random_element(m.domain_shape, radius, rng)
            v = random_element(m.domain_shape, radius, rng)
            w = random_element(m.domain_shape, radius, rng)
            defect = full_defect(m, params, complex(mus[i]), xs, u, v, w)
        else:
            u = v = w = zero
            defect = trif_defect(m, params, xs, complex(mus[i]))
        control_value = eval_control(m.control, xs, u, v, w)
        max_norm = max(max(_norm(x) for x in xs), _norm(u), _norm(v), _norm(w))
        out.append(DefectSample(index=i, mu=complex(mus[i]), xs=xs, u=u, v=v,
                                w=w, defect=defect, control_value=control_value,
                                scale=max(1.0, max_norm) ** 3))
    return out


def override_control(m: MapUnderTest, control: ControlFunction) -> MapUnderTest:
    """Copy of a scenario with a different advertised control (no re-check)."""
    return replace(m, control=control)


__all__ = [
    "ExactHom",
    "MapUnderTest",
    "random_isometry",
    "random_element_with_norm",
    "make_isometry_hom",
    "make_truncated_hom",
    "make_perturbed_hom",
    "make_trif_noise_hom",
    "matrix_units_span",
    "ExpectedOutcome",
    "CatalogueEntry",
    "catalogue",
    "scenario_from_descriptor",
    "sweep_defects",
    "override_control",
    "SCENARIO_KINDS",
    "DEFAULT_SUPPORT_RADIUS",
    "DEFAULT_REGION_RADIUS",
]
