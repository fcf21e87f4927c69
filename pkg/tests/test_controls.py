import json

import numpy as np
import pytest

from ternary_stab import (
    ConstantControl,
    ControlFunction,
    CustomControl,
    NonSummableError,
    PNormControl,
    pnorm_bound,
    eval_control,
    summed_control,
    random_element,
    register_control,
    stability_bound,
    summability_probe,
)
from ternary_stab.controls import bound_tuple, control_series
from ternary_stab.errors import ControlContractError

from oracles import brute_series

Z = np.zeros((2, 2), dtype=complex)


def _args(rng, d=3, radius=1.0):
    xs = [random_element((2, 2), radius, rng) for _ in range(d)]
    u, v, w = (random_element((2, 2), radius, rng) for _ in range(3))
    return xs, u, v, w


def test_constant_control_value(rng):
    cf = ConstantControl(13.0)
    xs, u, v, w = _args(rng)
    assert eval_control(cf, xs, u, v, w) == 13.0


def test_pnorm_zero_inputs():
    cf = PNormControl(1.0, 0.5)
    assert eval_control(cf, [Z, Z, Z], Z, Z, Z) == 0.0


def test_pnorm_p_zero_counts_nonzero_arguments(rng):
    cf = PNormControl(2.0, 0.0)
    xs, u, v, w = _args(rng)
    # three nonzero points plus u, v, w nonzero -> 2 * (3 + 3)
    assert eval_control(cf, xs, u, v, w) == pytest.approx(12.0)
    assert eval_control(cf, [Z, Z, Z], u, v, w) == pytest.approx(6.0)


def test_pnorm_rejects_p_out_of_range():
    with pytest.raises(ValueError):
        PNormControl(1.0, 1.0)
    with pytest.raises(ValueError):
        PNormControl(1.0, -0.1)


def test_descriptor_roundtrip_bit_exact():
    for cf in (ConstantControl(13.0), ConstantControl(0.1),
               PNormControl(1 / 3, 0.5), PNormControl(2.0, 0.9)):
        desc = json.loads(json.dumps(cf.to_descriptor()))
        back = ControlFunction.from_descriptor(desc)
        assert back == cf
        assert back.to_descriptor() == cf.to_descriptor()


def test_custom_registry_and_contract(rng):
    register_control("always_negative", lambda params: lambda xs, u, v, w: -1.0)
    bad = CustomControl("always_negative")
    xs, u, v, w = _args(rng)
    with pytest.raises(ControlContractError):
        eval_control(bad, xs, u, v, w)
    with pytest.raises(ValueError):
        CustomControl("never_registered")


def test_summed_control_constant_closed_form(params32, rng):
    cf = ConstantControl(13.0)
    xs, u, v, w = _args(rng)
    cert = summed_control(cf, params32, xs, u, v, w)
    assert cert.closed_form_value == pytest.approx(52 / 3, abs=1e-12)
    assert cert.truncated_value + cert.tail_bound == pytest.approx(52 / 3, abs=1e-12)


def test_summed_control_closed_form_agreement_across_params(
        params32, params42, params43, rng):
    xs, u, v, w = _args(rng)
    for p in (params32, params42, params43):
        for cf in (ConstantControl(3.7), PNormControl(1.1, 0.5)):
            cert = summed_control(cf, p, xs, u, v, w)
            closed = cert.closed_form_value
            assert abs(cert.truncated_value + cert.tail_bound - closed) \
                <= cert.tail_bound + 1e-12 * closed


def test_summed_control_pnorm_zero_args(params32):
    cert = summed_control(PNormControl(1.0, 0.5), params32, [Z, Z, Z], Z, Z, Z)
    assert cert.value == 0.0


def test_summed_control_pnorm_single_unit_argument(params32):
    # one norm-one slot, p = 1/2, q = 4: terms are 2**-j, the series sums to 2
    x1 = np.eye(2, dtype=complex)
    cert = summed_control(PNormControl(1.0, 0.5), params32, [x1, Z, Z], Z, Z, Z)
    oracle = brute_series(
        lambda args: float(np.linalg.norm(args[0], 2)) ** 0.5,
        params32.q_float, [x1], 30)
    assert cert.value == pytest.approx(2.0, rel=1e-12)
    assert cert.value == pytest.approx(oracle, rel=1e-9)


def test_stability_bound_constant(params32, rng):
    cf = ConstantControl(13.0)
    for radius in (0.1, 1.0, 3.0):
        x = random_element((2, 2), radius, rng)
        assert stability_bound(cf, params32, x) == pytest.approx(13 / 3, abs=1e-12)


def test_stability_bound_zero_input(params32):
    assert stability_bound(PNormControl(1.0, 0.5), params32, Z) == 0.0


def test_stability_bound_equals_pnorm_closed_form(params32, params42, params43, rng):
    # two independent code paths: generic series engine vs closed form
    for p in (params32, params42, params43):
        for eps, pw in ((1.0, 0.0), (1.0, 0.5), (2.0, 0.9)):
            cf = PNormControl(eps, pw)
            for _ in range(5):
                x = random_element((2, 2), 2.5, rng)
                assert stability_bound(cf, p, x) == pytest.approx(
                    pnorm_bound(eps, pw, p, x), rel=1e-12)


def test_pnorm_bound_values(params32, params42):
    assert pnorm_bound(0.0, 0.5, params32, 1.0) == 0.0
    # p = 0: q * d * eps / (l * C(d-1,l-1) * (q-1)) = 4*3/(4*3) = 1
    x = np.eye(2, dtype=complex)
    assert pnorm_bound(1.0, 0.0, params32, x) == pytest.approx(1.0, rel=1e-12)
    # (4,2): q=3, r=-1, p=0.5 against a direct series summation
    cert_based = stability_bound(PNormControl(1.0, 0.5), params42, x)
    assert pnorm_bound(1.0, 0.5, params42, x) == pytest.approx(
        cert_based, rel=1e-10)


def test_pnorm_bound_rejects_p_out_of_valid_range(params32):
    with pytest.raises(ValueError):
        pnorm_bound(1.0, 1.0, params32, 1.0)
    with pytest.raises(ValueError):
        pnorm_bound(1.0, 1.5, params32, 1.0)


def test_summability_probe_constant(params32, rng):
    res = summability_probe(ConstantControl(5.0), params32,
                            [_args(rng)], horizon=12)
    assert res.passed
    assert res.estimated_ratio == pytest.approx(0.25, rel=1e-9)


def test_summability_probe_pnorm_high_p(params32, rng):
    res = summability_probe(PNormControl(1.0, 0.9), params32,
                            [_args(rng)], horizon=16)
    assert res.passed
    assert res.estimated_ratio == pytest.approx(4 ** (-0.1), rel=1e-6)


def test_summability_probe_linear_growth_fails(params32, rng):
    register_control("linear_growth",
                     lambda params: lambda xs, u, v, w: sum(
                         float(np.linalg.norm(a, 2)) for a in (*xs, u, v, w)))
    cf = CustomControl("linear_growth")
    res = summability_probe(cf, params32, [_args(rng)], horizon=12)
    assert not res.passed
    assert res.estimated_ratio == pytest.approx(1.0, rel=1e-9)


def test_summed_control_non_summable_raises(params32, rng):
    register_control("linear_growth2",
                     lambda params: lambda xs, u, v, w: sum(
                         float(np.linalg.norm(a, 2)) for a in (*xs, u, v, w)))
    cf = CustomControl("linear_growth2")
    xs, u, v, w = _args(rng)
    with pytest.raises(NonSummableError):
        summed_control(cf, params32, xs, u, v, w, max_terms=30)


def test_summed_control_monotone_in_amplitude(params32, rng):
    xs, u, v, w = _args(rng)
    deltas = [0.0, 0.5, 1.0, 2.0, 5.0]
    vals = [summed_control(ConstantControl(d), params32, xs, u, v, w).value
            for d in deltas]
    assert vals == sorted(vals)
    epsv = [0.1, 0.2, 0.4, 1.0]
    vals = [summed_control(PNormControl(e, 0.5), params32, xs, u, v, w).value
            for e in epsv]
    assert vals == sorted(vals)


def test_summed_control_pnorm_scaling_law(params32, rng):
    cf = PNormControl(1.3, 0.5)
    xs, u, v, w = _args(rng)
    base = summed_control(cf, params32, xs, u, v, w).value
    for lam in (0.5, 2.0, 3 + 4j):
        scaled = summed_control(cf, params32, [lam * x for x in xs],
                           lam * u, lam * v, lam * w).value
        assert scaled == pytest.approx(abs(lam) ** 0.5 * base, rel=1e-12)


def test_control_series_finite_window_matches_brute(params32, rng):
    cf = PNormControl(1.0, 0.5)
    xs, u, v, w = _args(rng)
    cert = control_series(cf, params32, xs, u, v, w, start=2, stop=9)
    brute = brute_series(
        lambda args: eval_control(cf, args[:3], args[3], args[4], args[5]),
        params32.q_float, [*xs, u, v, w], 9) - brute_series(
        lambda args: eval_control(cf, args[:3], args[3], args[4], args[5]),
        params32.q_float, [*xs, u, v, w], 2)
    assert cert.truncated_value == pytest.approx(brute, rel=1e-12)
    assert cert.tail_bound == 0.0


def test_bound_tuple_structure(params32):
    x = np.eye(2, dtype=complex)
    xs, u, v, w = bound_tuple(params32, x)
    assert len(xs) == 3
    assert np.array_equal(xs[0], 4.0 * x)
    assert np.array_equal(xs[1], -2.0 * x)
    assert not u.any() and not v.any() and not w.any()
