"""Acceptance criteria, one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines.
Tolerances are pinned here and nowhere else.
"""
import json
import time
from math import comb

import numpy as np
import pytest

from ternary_stab import (
    ConstantControl,
    ExactHom,
    PNormControl,
    axiom_suite,
    pnorm_bound,
    exactness_check,
    extract_map,
    factorization_check,
    iterate,
    make_isometry_hom,
    make_params,
    make_perturbed_hom,
    make_trif_noise_hom,
    make_truncated_hom,
    matrix_units_span,
    norm,
    summed_control,
    random_element,
    random_isometry,
    stability_bound,
    trif_defect,
    unimodular_decompose,
)
from ternary_stab.controls import bound_tuple
from ternary_stab.reporting import RunConfig, build_stability_report
from ternary_stab.scenarios import MapUnderTest, random_element_with_norm


def _verdict(num, name, ok):
    print(f"ACCEPTANCE {num:>2} {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} ({name}) failed"


@pytest.fixture(scope="module")
def report_run():
    cfg = RunConfig.from_sources({"seed": 42})
    t0 = time.monotonic()
    payload, code = build_stability_report(cfg)
    elapsed = time.monotonic() - t0
    return cfg, payload, code, elapsed


def test_criterion_01_ring_axioms():
    t0 = time.monotonic()
    ok = True
    for shape in ((1, 1), (2, 2), (3, 2), (4, 4)):
        rep = axiom_suite(shape, samples=500, seed=101, tol=1e-9)
        ok = ok and rep.max_assoc_residual <= 1e-9
        ok = ok and rep.max_norm_ineq_violation <= 1e-9
        ok = ok and rep.max_cube_identity_residual <= 1e-9
    elapsed = time.monotonic() - t0
    _verdict(1, "ring axioms on 4 shapes, 500 tuples, <= 1e-9, <= 10 s",
             ok and elapsed <= 10.0)


def test_criterion_02_param_identities():
    ok = True
    for d in range(3, 11):
        for l in range(2, d):
            p = make_params(d, l)
            ok = ok and p.q + (d - 1) * p.r == 0
            ok = ok and p.q + (l - 1) * p.r == l
            ok = ok and d * p.c_dm2_lm2 + d * p.c_dm2_lm1 == l * p.c_d_l
            ok = ok and (d - 1) * p.c_dm2_lm1 == l * comb(d - 1, l)
    _verdict(2, "parameter identities exact for all (d,l), d <= 10", ok)


def test_criterion_03_affine_kernel():
    ok = True
    for d, l in ((3, 2), (4, 2), (4, 3)):
        p = make_params(d, l)
        rng = np.random.default_rng(300 + d * 10 + l)
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        c = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))

        def f(x):
            return a @ x @ b + c

        for _ in range(200):
            xs = [random_element((2, 2), 2.0, rng) for _ in range(d)]
            scale = p.trif_term_budget() * max(norm(f(x)) for x in xs)
            ok = ok and trif_defect(f, p, xs, 1.0) <= 1e-9 * max(1.0, scale)
    _verdict(3, "additive-plus-constant maps have zero defect (<= 1e-9 scale)", ok)


def test_criterion_04_truncated_regression():
    t0 = time.monotonic()
    p = make_params(3, 2)
    hom = ExactHom(random_isometry(2, 2, 400), random_isometry(2, 2, 401))
    t = make_truncated_hom(hom, p)
    ok = t.control.delta == 13.0
    x_ref = np.eye(2, dtype=complex)
    xs, u, v, w = bound_tuple(p, x_ref)
    cert = summed_control(t.control, p, xs, u, v, w)
    ok = ok and abs(cert.closed_form_value - 52 / 3) <= 1e-12
    ok = ok and abs(cert.truncated_value + cert.tail_bound - 52 / 3) <= 1e-12
    ok = ok and abs(stability_bound(t.control, p, x_ref) - 13 / 3) <= 1e-12
    extracted = extract_map(t, p)
    ok = ok and np.abs(extracted.matrix).max() <= 1e-12
    rng = np.random.default_rng(402)
    bound = 13 / 3
    for _ in range(1000):
        x = random_element((2, 2), 2.0, rng)
        ok = ok and norm(t(x) - extracted.apply(x)) <= bound
    elapsed = time.monotonic() - t0
    _verdict(4, "truncated regression: delta=13, 52/3, 13/3, zero map, <= 5 s",
             ok and elapsed <= 5.0)


def test_criterion_05_closed_form_cross_check():
    ok = True
    norms = np.geomspace(0.05, 8.0, 20)
    for d, l in ((3, 2), (4, 2), (4, 3)):
        p = make_params(d, l)
        for eps, pw in ((1.0, 0.0), (1.0, 0.5), (2.0, 0.9)):
            cf = PNormControl(eps, pw)
            for nrm in norms:
                x = np.array([[nrm]], dtype=complex)
                xs, u, v, w = bound_tuple(p, x)
                cert = summed_control(cf, p, xs, u, v, w)
                closed = cert.closed_form_value
                ok = ok and abs(cert.truncated_value + cert.tail_bound
                                - closed) <= 1e-10 * abs(closed)
                ok = ok and abs(stability_bound(cf, p, x)
                                - pnorm_bound(eps, pw, p, x)) \
                    <= 1e-10 * pnorm_bound(eps, pw, p, x)
    _verdict(5, "closed form vs truncated+tail and bound cross-check, 1e-10", ok)


def test_criterion_06_recovery():
    p = make_params(3, 2)
    q = p.q_float
    delta = 0.3
    ok = True
    for shape in ((2, 2), (3, 2)):
        units = matrix_units_span(shape)
        for seed in range(1, 6):
            hom = ExactHom(random_isometry(shape[0], shape[0], seed),
                           random_isometry(shape[1], shape[1], seed + 60))
            m = make_perturbed_hom(hom, p, "constant_ball", delta=delta,
                                   seed=seed)
            rng = np.random.default_rng(600 + seed)
            for _ in range(10):
                x = random_element(shape, 2.0, rng)
                tr = iterate(m, x, p, n_max=15)
                for n, val in tr.steps:
                    ok = ok and norm(val - hom(x)) <= delta * q ** (-n) * (1 + 1e-9)
            extracted = extract_map(m, p, n_max=15)
            want = np.zeros_like(extracted.matrix)
            for k, e in enumerate(units):
                want[:, k] = hom(e).reshape(-1)
            ok = ok and np.linalg.norm(extracted.matrix - want, 2) <= 1e-8
    _verdict(6, "constant perturbation recovery, per-step bound and 1e-8 match", ok)


def test_criterion_07_conclusions_on_catalogue(report_run):
    cfg, payload, code, _ = report_run
    ok = code == 0 and payload["passed"]
    assert cfg.bound_samples == 500 and cfg.offsets == [0, 1, 2, 3]
    for s in payload["scenarios"]:
        by_name = {c["name"]: c for c in s["checks"]}
        for name in ("additivity", "scalar_homogeneity",
                     "ternary_multiplicativity", "representation"):
            ok = ok and by_name[name]["residual"] <= 1e-8
        ok = ok and by_name["approximation_bound"]["passed"]
        ok = ok and by_name["approximation_bound"]["samples"] == 500
        ok = ok and by_name["uniqueness_shift"]["passed"]
        ok = ok and s["defect_sweep"]["all_dominated"]
        ok = ok and s["extraction_match"]["passed"]
    _verdict(7, "all catalogue scenarios: conclusions <= 1e-8, bound on 500, "
                "shift-invariance within tails", ok)


def test_criterion_08_exactness_discriminates():
    p = make_params(3, 2)
    exact = make_isometry_hom(random_isometry(2, 2, 800),
                              random_isometry(2, 2, 801), params=p)
    good = exactness_check(exact, ConstantControl(1.0), p, samples=40)
    ok = good.passed

    hom = exact.ground_truth
    c = 0.4 * random_element((2, 2), 1.0, seed=802)
    shifted = MapUnderTest(domain_shape=(2, 2), codomain_shape=(2, 2),
                           evaluator=lambda x: hom(x) + c, kind="custom",
                           control=ConstantControl(1.0))
    verdict = exactness_check(shifted, shifted.control, p, samples=40)
    premise = verdict.check("q_scaling_premise")
    expected_residual = (p.q_float - 1.0) * norm(c)
    ok = ok and not premise.passed
    ok = ok and abs(premise.residual - expected_residual) <= 1e-12
    _verdict(8, "exactness criterion separates exact from shifted maps", ok)


def test_criterion_09_factorization_with_noise():
    p = make_params(3, 2)
    hom = ExactHom(random_isometry(2, 2, 900), random_isometry(2, 2, 901))
    span = matrix_units_span((2, 2))
    m = make_trif_noise_hom(hom, span, 0.5, seed=902, params=p)
    from ternary_stab import element_from_json

    zs = [element_from_json(z) for z in m.meta["z_samples"]]
    verdict = factorization_check(m, p, span, zs, n_list=(1, 2, 3), seed=903)
    ok = verdict.check("factorization_orbit").residual <= 1e-9
    ok = ok and verdict.check("extracted_multiplicativity").residual <= 1e-8
    a, b = m.meta["annulus"]
    rng = np.random.default_rng(904)
    worst = 0.0
    for _ in range(300):
        xs = [random_element_with_norm((2, 2), rng.uniform(a, b), rng)
              for _ in range(3)]
        worst = max(worst, trif_defect(m, p, xs, 1.0))
    ok = ok and worst > 0.1
    _verdict(9, "factorization exact on protected orbit despite real noise "
                f"(max defect {worst:.3f})", ok)


def test_criterion_10_unimodular_decomposition():
    rng = np.random.default_rng(1000)
    ok = True
    for _ in range(10_000):
        lam = complex(rng.standard_normal(), rng.standard_normal()) * 3.0
        if lam == 0:
            continue
        M = int(abs(lam)) + int(rng.integers(1, 8))
        m1, m2 = unimodular_decompose(lam, M)
        ok = ok and abs(abs(m1) - 1.0) <= 1e-12
        ok = ok and abs(abs(m2) - 1.0) <= 1e-12
        ok = ok and abs((m1 + m2) - 2 * lam / M) <= 1e-12
    _verdict(10, "unimodular decomposition on 10^4 random inputs, 1e-12", ok)


def test_criterion_11_report_determinism(report_run):
    cfg, payload_a, code, elapsed = report_run
    payload_b, code_b = build_stability_report(cfg)
    a = json.dumps(payload_a, sort_keys=True)
    b = json.dumps(payload_b, sort_keys=True)
    ok = code == 0 and code_b == 0 and a == b and elapsed <= 60.0
    _verdict(11, f"report deterministic and fast enough ({elapsed:.1f} s)", ok)
