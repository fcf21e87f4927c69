"""Run configuration, deterministic report payload builders, schemas.

Builders are pure functions of the configuration: they never read the
clock or ambient state, so identical configs produce identical payloads.
The CLI layer injects a volatile ``timing`` block (generation timestamp
and wall clock) after building; that block is the only part excluded
from the determinism contract and from the config hash.

Scenario runs inside one report may execute in parallel (capped by the
``TERNARY_STAB_THREADS`` environment variable); results are assembled in
scenario-id order so scheduling cannot change the payload.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from .controls import (
    ConstantControl,
    ControlFunction,
    PNormControl,
    pnorm_bound,
    summed_control,
)
from .controls import bound_tuple as _bound_tuple
from .iteration import (
    exactness_check,
    extract_map,
    factorization_check,
    verify_conclusions,
)
from .ring import axiom_suite, element_from_json, element_to_json, matrix_units_span
from .scenarios import (
    SCENARIO_KINDS,
    CatalogueEntry,
    catalogue,
    override_control,
    scenario_from_descriptor,
    sweep_defects,
)
from .trif import make_params
from .validation import check_shape


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


@dataclass
class RunConfig:
    """Everything that determines a run's outputs, seed included.

    Seeds are mandatory: runs must be reproducible in CI, so there is no
    wall-clock fallback.
    """

    d: int = 3
    l: int = 2
    rows: int = 2
    cols: int = 2
    seed: int | None = None
    samples: int = 200
    verify_samples: int = 100
    bound_samples: int = 500
    n_max: int = 20
    iter_tol: float = 1e-10
    axiom_tol: float = 1e-9
    check_tol: float = 1e-8
    radius: float = 2.0
    scenario: str = "constant_noise"
    scenario_descriptor: dict | None = None
    scenarios: list = field(default_factory=lambda: list(SCENARIO_KINDS))
    control: dict | None = None
    noise: dict = field(default_factory=dict)
    norm_grid: list = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    offsets: list = field(default_factory=lambda: [0, 1, 2, 3])
    bound_only: bool = False

    _INT_FIELDS = ("d", "l", "rows", "cols", "seed", "samples", "verify_samples",
                   "bound_samples", "n_max")
    _FLOAT_FIELDS = ("iter_tol", "axiom_tol", "check_tol", "radius")

    @classmethod
    def from_sources(cls, file_dict: dict | None = None,
                     overrides: dict | None = None) -> "RunConfig":
        merged: dict = {}
        for src in (file_dict or {}), (overrides or {}):
            for key, val in src.items():
                if val is not None:
                    merged[key] = val
        known = set(cls.__dataclass_fields__)
        unknown = set(merged) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            for name in self._INT_FIELDS:
                val = getattr(self, name)
                if val is not None:
                    setattr(self, name, int(val))
            for name in self._FLOAT_FIELDS:
                setattr(self, name, float(getattr(self, name)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from None
        if self.seed is None:
            raise ConfigError(
                "seed is required (configs must pin their randomness; "
                "pass --seed or a 'seed' key)"
            )
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        check_shape((self.rows, self.cols))
        try:
            make_params(self.d, self.l)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.scenario not in SCENARIO_KINDS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; choose from {SCENARIO_KINDS}"
            )
        bad = [s for s in self.scenarios if s not in SCENARIO_KINDS]
        if bad:
            raise ConfigError(f"unknown scenarios {bad}; choose from {SCENARIO_KINDS}")
        for name in ("samples", "verify_samples", "bound_samples", "n_max"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.control is not None:
            ControlFunction.from_descriptor(self.control)  # raises on malformed
        self.norm_grid = [float(v) for v in self.norm_grid]
        self.offsets = sorted(int(o) for o in self.offsets)

    def to_dict(self) -> dict:
        return asdict(self)

    def sha256(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _payload_header(schema: str, cfg: RunConfig) -> dict:
    return {
        "schema": schema,
        "config": cfg.to_dict(),
        "config_sha256": cfg.sha256(),
        "library_version": __version__,
    }


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("TERNARY_STAB_THREADS", "1")))
    except ValueError:
        return 1


def _scenario_entries(cfg: RunConfig, kinds) -> list[CatalogueEntry]:
    params = make_params(cfg.d, cfg.l)
    entries = catalogue(params, [(cfg.rows, cfg.cols)], seed=cfg.seed,
                        noise=cfg.noise)
    wanted = [e for e in entries if e.map.kind in kinds]
    order = {k: i for i, k in enumerate(SCENARIO_KINDS)}
    wanted.sort(key=lambda e: (order[e.map.kind], e.scenario_id))
    return wanted


def _single_scenario_map(cfg: RunConfig):
    """Map for the single-scenario commands.

    A full descriptor in the config (matrix literals included) takes
    precedence over the catalogue kind, so externally produced scenarios
    can be replayed exactly.
    """
    if cfg.scenario_descriptor is not None:
        try:
            m = scenario_from_descriptor(cfg.scenario_descriptor)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad scenario descriptor: {exc}") from None
        if (m.meta.get("d"), m.meta.get("l")) != (cfg.d, cfg.l):
            raise ConfigError(
                "scenario descriptor was built for "
                f"(d, l) = ({m.meta.get('d')}, {m.meta.get('l')}), "
                f"config says ({cfg.d}, {cfg.l})"
            )
        return m
    entries = _scenario_entries(cfg, [cfg.scenario])
    if not entries:
        raise ConfigError(f"no catalogue entry for scenario {cfg.scenario!r}")
    return entries[0].map


# ----------------------------------------------------------------- verify-ring

def build_ring_report(cfg: RunConfig) -> tuple[dict, int]:
    report = axiom_suite((cfg.rows, cfg.cols), samples=cfg.samples,
                         seed=cfg.seed, tol=cfg.axiom_tol, radius=cfg.radius)
    payload = _payload_header("ring_report_v1", cfg)
    payload["report"] = report.as_dict()
    payload["passed"] = report.passed
    return payload, 0 if report.passed else 1


# --------------------------------------------------------------------- defect

DEFECT_CSV_COLUMNS = ("sample_index", "mu_re", "mu_im", "defect",
                      "control_value", "dominated")


def build_defect_rows(cfg: RunConfig) -> tuple[list[str], int]:
    params = make_params(cfg.d, cfg.l)
    m = _single_scenario_map(cfg)
    if cfg.control is not None:
        m = override_control(m, ControlFunction.from_descriptor(cfg.control))
    sweep = sweep_defects(m, params, samples=cfg.samples, seed=cfg.seed,
                          radius=cfg.radius)
    lines = [",".join(DEFECT_CSV_COLUMNS)]
    all_ok = True
    for s in sweep:
        ok = s.dominated
        all_ok = all_ok and ok
        lines.append(",".join((
            str(s.index),
            format(s.mu.real, ".17g"),
            format(s.mu.imag, ".17g"),
            format(s.defect, ".17g"),
            format(s.control_value, ".17g"),
            "true" if ok else "false",
        )))
    return lines, 0 if all_ok else 1


# -------------------------------------------------------------------- extract

def _trace_dict(basis, trace) -> dict:
    return {
        "basis": [int(basis[0]), int(basis[1])],
        "converged": trace.converged,
        "n_used": trace.n_used,
        "gaps": [float(g) for g in trace.gaps],
        "certified_gap_bounds": (
            None if trace.certified_gap_bounds is None
            else [float(b) for b in trace.certified_gap_bounds]),
        "final": element_to_json(trace.final),
    }


def build_extract_report(cfg: RunConfig) -> tuple[dict, int]:
    params = make_params(cfg.d, cfg.l)
    m = _single_scenario_map(cfg)
    extracted, traces = extract_map(m, params, n_max=cfg.n_max, tol=cfg.iter_tol,
                                    control=m.control, return_traces=True)
    payload = _payload_header("extract_report_v1", cfg)
    payload["scenario"] = m.to_descriptor()
    payload["extraction"] = extracted.as_dict()
    payload["traces"] = [_trace_dict(b, t) for b, t in traces]
    payload["passed"] = True
    return payload, 0


# --------------------------------------------------------------------- report

def _ground_truth_matrix(m) -> np.ndarray:
    units = matrix_units_span(m.domain_shape)
    cod = m.ground_truth(units[0]).shape
    mat = np.zeros((cod[0] * cod[1], len(units)), dtype=np.complex128)
    for k, e in enumerate(units):
        mat[:, k] = m.ground_truth(e).reshape(-1)
    return mat


def _bound_values(control, params, nrm: float) -> dict:
    rep = np.array([[nrm]], dtype=np.complex128)
    xs, u, v, w = _bound_tuple(params, rep)
    cert = summed_control(control, params, xs, u, v, w)
    scaled = float(params.bound_prefactor) * cert.value
    return {
        "norm": nrm,
        "series_truncated": cert.truncated_value,
        "series_closed_form": cert.closed_form_value,
        "tail_bound": cert.tail_bound,
        "stability_bound": scaled,
        "unscaled_bound": cert.value,
    }


def _run_scenario(entry: CatalogueEntry, cfg: RunConfig, index: int) -> dict:
    params = make_params(cfg.d, cfg.l)
    m = entry.map
    expected = entry.expected
    result = {
        "scenario_id": entry.scenario_id,
        "kind": m.kind,
        "claim": expected.claim,
        "scalar_domain": m.scalar_domain.variant,
        "defect_kind": m.defect_kind,
        "descriptor": m.to_descriptor(),
        "expected": {
            "extraction_target": expected.extraction_target,
            "tolerance": expected.extraction_tol,
            "bound_variant": expected.bound_variant,
        },
    }
    sweep_seed = (cfg.seed + 1009 * (index + 1)) % 2 ** 63
    sweep = sweep_defects(m, params, samples=cfg.samples, seed=sweep_seed,
                          radius=cfg.radius)
    all_dom = all(s.dominated for s in sweep)
    result["defect_sweep"] = {
        "samples": len(sweep),
        "max_defect": max(s.defect for s in sweep),
        "min_control": min(s.control_value for s in sweep),
        "all_dominated": all_dom,
    }

    extracted = extract_map(m, params, n_max=cfg.n_max, tol=cfg.iter_tol,
                            control=m.control)
    result["extraction"] = {
        "converged": True,
        "n_used": extracted.n_used,
        "matrix": element_to_json(extracted.matrix),
    }

    verdict = verify_conclusions(
        extracted, m, m.control, params, domain=m.scalar_domain,
        samples=cfg.verify_samples, bound_samples=cfg.bound_samples,
        seed=sweep_seed + 1, tol=cfg.check_tol, n_max=cfg.n_max,
        iter_tol=cfg.iter_tol, radius=cfg.radius, offsets=cfg.offsets,
        bound_variant=expected.bound_variant)
    result["checks"] = [c.as_dict() for c in verdict.checks]

    if expected.extraction_target == "zero_map":
        residual = float(np.abs(extracted.matrix).max())
    else:
        residual = float(np.linalg.norm(extracted.matrix - _ground_truth_matrix(m), 2))
    match_ok = residual <= expected.extraction_tol
    result["extraction_match"] = {
        "target": expected.extraction_target,
        "residual": residual,
        "tolerance": expected.extraction_tol,
        "passed": match_ok,
    }

    extra_ok = True
    if m.kind == "exact":
        ex = exactness_check(m, m.control, params,
                             samples=min(50, cfg.verify_samples),
                             seed=sweep_seed + 2, tol=cfg.axiom_tol)
        result["exactness"] = ex.as_dict()
        extra_ok = extra_ok and ex.passed
    if m.kind == "trif_noise":
        z_samples = [element_from_json(z) for z in m.meta["z_samples"]]
        fact = factorization_check(
            m, params, matrix_units_span(m.domain_shape), z_samples,
            n_list=tuple(m.meta["n_list"]), seed=sweep_seed + 3,
            n_max=cfg.n_max, iter_tol=cfg.iter_tol, tol=cfg.check_tol,
            samples=min(50, cfg.verify_samples))
        result["factorization"] = fact.as_dict()
        extra_ok = extra_ok and fact.passed
    if expected.bound_variant == "unscaled":
        ref = _bound_values(m.control, params, 1.0)
        result["bound_variants"] = {
            "scaled": ref["stability_bound"],
            "unscaled": ref["unscaled_bound"],
            "note": ("for the {1, i} scalar domain the certified bound omits the "
                     "1/(l*C(d-1,l-1)) prefactor; the run is judged against that "
                     "looser value and the scaled variant is included"),
        }

    result["passed"] = bool(all_dom and verdict.passed and match_ok and extra_ok)
    return result


def build_stability_report(cfg: RunConfig) -> tuple[dict, int]:
    payload = _payload_header("stability_report_v1", cfg)
    entries = _scenario_entries(cfg, cfg.scenarios)
    params = make_params(cfg.d, cfg.l)

    if cfg.bound_only:
        scenarios = []
        for entry in entries:
            scenarios.append({
                "scenario_id": entry.scenario_id,
                "kind": entry.map.kind,
                "control": entry.map.control.to_descriptor(),
                "bounds": [_bound_values(entry.map.control, params, nrm)
                           for nrm in cfg.norm_grid],
            })
        payload["bound_only"] = True
        payload["scenarios"] = scenarios
        payload["passed"] = True
        return payload, 0

    workers = _workers()
    jobs = list(enumerate(entries))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: _run_scenario(j[1], cfg, j[0]), jobs))
    else:
        results = [_run_scenario(entry, cfg, i) for i, entry in jobs]
    results.sort(key=lambda r: r["scenario_id"])
    payload["scenarios"] = results
    payload["passed"] = all(r["passed"] for r in results)
    return payload, 0 if payload["passed"] else 1


# ----------------------------------------------------------------------- bound

def build_bound_table(cfg: RunConfig) -> tuple[list[str], int]:
    if cfg.control is None:
        raise ConfigError("the bound command needs a control "
                          "(--control constant:DELTA or pnorm:EPS,P)")
    control = ControlFunction.from_descriptor(cfg.control)
    if not isinstance(control, (ConstantControl, PNormControl)):
        raise ConfigError("closed-form bound tables support constant and "
                          "pnorm controls only")
    params = make_params(cfg.d, cfg.l)
    is_pnorm = isinstance(control, PNormControl)
    header = ["norm", "series_truncated", "closed_form", "tail_bound",
              "stability_bound"]
    if is_pnorm:
        header.append("pnorm_bound")
    lines = ["  ".join(f"{h:>22}" for h in header)]
    for nrm in cfg.norm_grid:
        vals = _bound_values(control, params, nrm)
        row = [vals["norm"], vals["series_truncated"],
               vals["series_closed_form"], vals["tail_bound"],
               vals["stability_bound"]]
        if is_pnorm:
            row.append(pnorm_bound(control.eps, control.p, params, nrm))
        lines.append("  ".join(f"{v:>22.17g}" for v in row))
    return lines, 0


# --------------------------------------------------------------------- schemas

def load_schema(name: str) -> dict:
    ref = resources.files("ternary_stab") / "schemas" / f"{name}.schema.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def validate_payload(name: str, payload: dict) -> None:
    import jsonschema

    jsonschema.validate(payload, load_schema(name))


SCHEMA_BY_COMMAND = {
    "verify-ring": "ring_report",
    "extract": "extract_report",
    "report": "stability_report",
}


__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config_file",
    "build_ring_report",
    "build_defect_rows",
    "build_extract_report",
    "build_stability_report",
    "build_bound_table",
    "load_schema",
    "validate_payload",
    "DEFECT_CSV_COLUMNS",
    "SCHEMA_BY_COMMAND",
]
