"""Independent oracles the tests check the library against.

Everything here is intentionally written from scratch (power iteration,
recursive enumeration, a literal transcription of the defect operator)
so a bug in the library cannot hide in a shared code path.
"""
from __future__ import annotations

from math import comb

import numpy as np


def power_norm(x, tol: float = 1e-12, max_iter: int = 20000) -> float:
    """Largest singular value via power iteration on the Gram matrix."""
    x = np.asarray(x, dtype=np.complex128)
    gram = x.conj().T @ x
    n = gram.shape[0]
    rng = np.random.default_rng(2024)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = gram @ v
        wn = np.linalg.norm(w)
        if wn == 0.0:
            return 0.0
        v = w / wn
        new_lam = float(np.real(v.conj() @ gram @ v))
        if abs(new_lam - lam) <= tol * max(1.0, abs(new_lam)):
            lam = new_lam
            break
        lam = new_lam
    return float(np.sqrt(max(lam, 0.0)))


def brute_combinations(d: int, l: int):
    """All strictly increasing l-subsets of range(d) by explicit recursion."""
    out = []

    def rec(prefix, start):
        if len(prefix) == l:
            out.append(tuple(prefix))
            return
        for i in range(start, d):
            rec(prefix + [i], i + 1)

    rec([], 0)
    return out


def _svd_norm(a) -> float:
    return float(np.linalg.svd(np.asarray(a, dtype=np.complex128),
                               compute_uv=False)[0])


def defect_transcription(f, d: int, l: int, mu: complex, xs, u, v, w) -> float:
    """Literal second implementation of the full defect operator."""
    c1 = comb(d - 2, l - 2)
    c2 = comb(d - 2, l - 1)
    total = xs[0] * 0
    for x in xs:
        total = total + x
    uvw = u @ v.conj().T @ w
    lead = mu * total / d + uvw / (d * c1)
    acc = d * c1 * f(lead)
    for x in xs:
        acc = acc + c2 * mu * f(x)
    for subset in brute_combinations(d, l):
        sub = xs[subset[0]] * 0
        for j in subset:
            sub = sub + xs[j]
        acc = acc - l * mu * f(sub / l)
    fu, fv, fw = f(u), f(v), f(w)
    acc = acc - fu @ fv.conj().T @ fw
    return _svd_norm(acc)


def trif_transcription(f, d: int, l: int, mu: complex, xs) -> float:
    """Literal second implementation of the equation-only defect."""
    c1 = comb(d - 2, l - 2)
    c2 = comb(d - 2, l - 1)
    total = xs[0] * 0
    for x in xs:
        total = total + x
    acc = d * c1 * f(mu * total / d)
    for x in xs:
        acc = acc + c2 * mu * f(x)
    for subset in brute_combinations(d, l):
        sub = xs[subset[0]] * 0
        for j in subset:
            sub = sub + xs[j]
        acc = acc - l * mu * f(sub / l)
    return _svd_norm(acc)


def brute_series(phi_of_args, q: float, args, terms: int) -> float:
    """Direct summation of q**(-j) * phi(q**j * args) over j < terms."""
    total = 0.0
    for j in range(terms):
        s = q ** j
        scaled = [s * a for a in args]
        total += phi_of_args(scaled) / s
    return total
