from fractions import Fraction
from math import comb

import numpy as np
import pytest

from ternary_stab import (
    ALL_COMPLEX,
    ONE_AND_I,
    UNIT_CIRCLE,
    collapse_defect,
    full_defect,
    l_subsets,
    make_params,
    make_perturbed_hom,
    make_isometry_hom,
    random_element,
    random_isometry,
    trif_defect,
)

from oracles import brute_combinations, defect_transcription, trif_transcription


@pytest.mark.parametrize("d,l,q,r,coeffs", [
    (3, 2, 4, -2, (1, 1, 2, 3)),
    (4, 3, 9, -3, (2, 1, 3, 4)),
    (4, 2, 3, -1, (1, 2, 3, 6)),
])
def test_make_params_examples(d, l, q, r, coeffs):
    p = make_params(d, l)
    assert p.q == Fraction(q) and p.r == Fraction(r)
    assert (p.c_dm2_lm2, p.c_dm2_lm1, p.c_dm1_lm1, p.c_d_l) == coeffs


@pytest.mark.parametrize("d,l", [(3, 1), (3, 3), (2, 2), (13, 5)])
def test_make_params_rejects_bad_ranges(d, l):
    with pytest.raises(ValueError):
        make_params(d, l)


def test_params_identities_exact_up_to_d10():
    for d in range(3, 11):
        for l in range(2, d):
            p = make_params(d, l)
            assert p.q + (d - 1) * p.r == 0
            assert p.q + (l - 1) * p.r == l
            assert d * p.c_dm2_lm2 + d * p.c_dm2_lm1 == l * p.c_d_l
            assert (d - 1) * p.c_dm2_lm1 == l * comb(d - 1, l)


def test_l_subsets_small_cases():
    assert l_subsets(3, 2) == ((0, 1), (0, 2), (1, 2))
    assert len(l_subsets(4, 2)) == 6


def test_l_subsets_matches_brute_force():
    got = l_subsets(10, 5)
    assert len(got) == comb(10, 5) == 252
    assert list(got) == brute_combinations(10, 5)
    for s in got:
        assert list(s) == sorted(set(s))
    assert list(got) == sorted(got)


def test_scalar_domains(rng):
    assert np.max(np.abs(np.abs(UNIT_CIRCLE.sample(200, rng)) - 1.0)) <= 1e-15
    vals = ONE_AND_I.sample(5, rng)
    assert set(vals.tolist()) == {1 + 0j, 1j}
    assert ALL_COMPLEX.sample(10, rng).shape == (10,)


def _linear_plus_constant(shape, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    b = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    def f(x):
        return a @ x @ b + c

    return f


@pytest.mark.parametrize("dl", [(3, 2), (4, 2), (4, 3)])
def test_trif_defect_affine_kernel(dl, rng):
    p = make_params(*dl)
    f = _linear_plus_constant((2, 2), seed=dl[0] * 10 + dl[1])
    for _ in range(30):
        xs = [random_element((2, 2), 2.0, rng) for _ in range(p.d)]
        scale_ref = p.trif_term_budget() * max(
            float(np.linalg.norm(f(x), 2)) for x in xs)
        assert trif_defect(f, p, xs, 1.0) <= 1e-9 * max(1.0, scale_ref)


def test_trif_defect_constant_map_is_zero(params32, params43):
    c = np.array([[1.0 + 2j, 0.5], [0.25j, -1.0]])
    for p in (params32, params43):
        xs = [random_element((2, 2), 1.0, seed=k) for k in range(p.d)]
        # the identity d*C(d-2,l-2) + d*C(d-2,l-1) = l*C(d,l) makes this exact
        assert trif_defect(lambda x: c, p, xs, 1.0) <= 1e-12


def test_trif_defect_cubic_scalar_example(params32):
    # 1x1 ring, f(t) = |t|^2 t restricted to real inputs gives t**3
    def f(x):
        return (np.abs(x) ** 2) * x

    one = np.array([[1.0 + 0j]])
    xs_zero = [one, one, one]
    assert trif_defect(f, params32, xs_zero, 1.0) <= 1e-12
    xs = [one, one, 4.0 * one]
    got = trif_defect(f, params32, xs, 1.0)
    expected = trif_transcription(f, 3, 2, 1.0, xs)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got > 1.0  # genuinely nonzero off the diagonal tuple


def test_full_defect_exact_hom_zero_on_ternary_only(rng, params32):
    m = make_isometry_hom(random_isometry(2, 2, 1), random_isometry(2, 2, 2),
                          params=params32)
    zero = np.zeros((2, 2), dtype=complex)
    for _ in range(10):
        u, v, w = (random_element((2, 2), 2.0, rng) for _ in range(3))
        val = full_defect(m, params32, 1.0, [zero] * 3, u, v, w)
        assert val <= 1e-12 * max(1.0, (np.linalg.norm(u, 2)
                                        * np.linalg.norm(v, 2)
                                        * np.linalg.norm(w, 2)))


def test_full_defect_zero_map(params32, rng):
    def f(x):
        return np.zeros((2, 2), dtype=complex)

    xs = [random_element((2, 2), 1.0, rng) for _ in range(3)]
    u, v, w = (random_element((2, 2), 1.0, rng) for _ in range(3))
    assert full_defect(f, params32, 1j, xs, u, v, w) == 0.0


def test_full_defect_matches_transcription_oracle(params32, rng):
    hom = make_isometry_hom(random_isometry(2, 2, 3), random_isometry(2, 2, 4),
                            params=params32)
    c = 0.3 * random_element((2, 2), 1.0, seed=8)

    def f(x):
        return hom(x) + c

    for _ in range(20):
        xs = [random_element((2, 2), 2.0, rng) for _ in range(3)]
        u, v, w = (random_element((2, 2), 2.0, rng) for _ in range(3))
        mu = np.exp(1j * rng.uniform(0, 2 * np.pi))
        got = full_defect(f, params32, mu, xs, u, v, w)
        want = defect_transcription(f, 3, 2, mu, xs, u, v, w)
        assert got == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_full_defect_equals_trif_at_zero_ternary_slots(params32, rng):
    # exact agreement requires the map to vanish at zero; catalogue maps do
    m = make_perturbed_hom(
        make_isometry_hom(random_isometry(2, 2, 5),
                          random_isometry(2, 2, 6)).ground_truth,
        params32, "constant_ball", delta=0.2, seed=9)
    zero = np.zeros((2, 2), dtype=complex)
    for k in range(10):
        xs = [random_element((2, 2), 2.0, seed=100 + k * 3 + i) for i in range(3)]
        mu = np.exp(1j * (0.37 + k))
        assert (full_defect(m, params32, mu, xs, zero, zero, zero)
                == trif_defect(m, params32, xs, mu))


def test_collapse_defect_linear_map_zero(params32, rng):
    a = random_element((2, 2), 1.0, seed=1)
    b = random_element((2, 2), 1.0, seed=2)

    def f(x):
        return a @ x @ b

    for _ in range(5):
        x = random_element((2, 2), 2.0, rng)
        assert collapse_defect(f, params32, x) <= 1e-12


def test_collapse_defect_truncated_above_unit_ball(params32):
    from ternary_stab import make_truncated_hom

    hom = make_isometry_hom(random_isometry(2, 2, 7), random_isometry(2, 2, 8))
    t = make_truncated_hom(hom.ground_truth, params32)
    x = random_element((2, 2), 1.0, seed=3)
    x = x / np.linalg.norm(x, 2) * 1.5  # both x and qx land in the zero branch
    assert collapse_defect(t, params32, x) == 0.0


def test_collapse_defect_matches_substituted_tuple(params32, rng):
    hom = make_isometry_hom(random_isometry(2, 2, 9), random_isometry(2, 2, 10))
    m = make_perturbed_hom(hom.ground_truth, params32, "constant_ball",
                           delta=0.3, seed=21)
    qf, rf = params32.q_float, params32.r_float
    for _ in range(10):
        x = random_element((2, 2), 1.5, rng)
        got = collapse_defect(m, params32, x, cross_check=True)
        want = trif_defect(m, params32, [qf * x, rf * x, rf * x], 1.0)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-15)


def test_collapse_defect_requires_vanishing_at_zero(params32):
    def f(x):
        return x + np.ones_like(x)

    with pytest.raises(ValueError):
        collapse_defect(f, params32, np.eye(2, dtype=complex))
