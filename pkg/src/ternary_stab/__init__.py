"""Numerical stability toolkit for matrix C*-ternary rings.

Evaluates defects of approximate homomorphisms against the
(d, l)-parameterized functional equation, runs the direct-method
iteration T(x) = lim q**(-n) f(q**n x) to extract the nearby exact
homomorphism, and certifies the explicit distance bounds on generated
scenarios. See the README for CLI usage.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    ControlContractError,
    ExtractionError,
    NonSummableError,
    RangeExhaustedError,
    TernaryStabError,
)
from .validation import Shape
from .ring import (
    RingAxiomReport,
    add,
    axiom_suite,
    element_from_json,
    element_to_json,
    matrix_units_span,
    norm,
    random_element,
    scale,
    tprod,
    unital_structure,
)
from .trif import (
    ALL_COMPLEX,
    ONE_AND_I,
    UNIT_CIRCLE,
    DefectSample,
    ScalarDomain,
    TrifParams,
    collapse_defect,
    full_defect,
    l_subsets,
    make_params,
    trif_defect,
)
from .controls import (
    BoundCertificate,
    ConstantControl,
    ControlFunction,
    CustomControl,
    PNormControl,
    ProbeResult,
    pnorm_bound,
    eval_control,
    summed_control,
    register_control,
    stability_bound,
    summability_probe,
)
from .iteration import (
    CheckResult,
    ExtractedMap,
    IterationTrace,
    UniquenessResult,
    VerificationVerdict,
    cauchy_gap_bound,
    exactness_check,
    extract_map,
    factorization_check,
    iterate,
    unimodular_decompose,
    uniqueness_probe,
    verify_conclusions,
    verify_i_homogeneity,
)
from .scenarios import (
    CatalogueEntry,
    ExactHom,
    ExpectedOutcome,
    MapUnderTest,
    catalogue,
    make_isometry_hom,
    make_perturbed_hom,
    make_trif_noise_hom,
    make_truncated_hom,
    random_isometry,
    scenario_from_descriptor,
    sweep_defects,
)


def __getattr__(name: str):
    # lazy: keeps the CLI import path free of the sklearn import cost
    if name == "HomomorphismExtractor":
        from .estimator import HomomorphismExtractor

        return HomomorphismExtractor
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "__version__",
    "Shape",
    "TernaryStabError",
    "RangeExhaustedError",
    "NonSummableError",
    "ExtractionError",
    "ControlContractError",
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
    "ControlFunction",
    "ConstantControl",
    "PNormControl",
    "CustomControl",
    "register_control",
    "eval_control",
    "BoundCertificate",
    "summed_control",
    "stability_bound",
    "pnorm_bound",
    "ProbeResult",
    "summability_probe",
    "IterationTrace",
    "iterate",
    "cauchy_gap_bound",
    "ExtractedMap",
    "extract_map",
    "CheckResult",
    "VerificationVerdict",
    "verify_conclusions",
    "UniquenessResult",
    "uniqueness_probe",
    "unimodular_decompose",
    "exactness_check",
    "factorization_check",
    "verify_i_homogeneity",
    "ExactHom",
    "MapUnderTest",
    "random_isometry",
    "make_isometry_hom",
    "make_truncated_hom",
    "make_perturbed_hom",
    "make_trif_noise_hom",
    "ExpectedOutcome",
    "CatalogueEntry",
    "catalogue",
    "scenario_from_descriptor",
    "sweep_defects",
    "HomomorphismExtractor",
]
