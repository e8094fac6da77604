"""Shared helpers: a naive dict-of-monomials polynomial oracle and
hypothesis strategies for small random jets."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from hopflin.jets import Jet, JetMap, monomial_basis

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=40)
settings.load_profile("repo")


# -- naive polynomial oracle: {exponent tuple: complex} -----------------------

def poly_mul(p: dict, q: dict, n: int) -> dict:
    out: dict = {}
    for a, x in p.items():
        for b, y in q.items():
            e = tuple(i + j for i, j in zip(a, b))
            out[e] = out.get(e, 0) + x * y
    return out


def poly_pow(p: dict, k: int, n: int) -> dict:
    out = {(0,) * n: 1.0}
    for _ in range(k):
        out = poly_mul(out, p, n)
    return out


def poly_compose(f: dict, g: list[dict], n: int) -> dict:
    """Full symbolic expansion of ``f o g`` (no truncation)."""
    out: dict = {}
    for a, c in f.items():
        term = {(0,) * n: c}
        for i, k in enumerate(a):
            term = poly_mul(term, poly_pow(g[i], k, n), n)
        for e, v in term.items():
            out[e] = out.get(e, 0) + v
    return out


def truncate(p: dict, d: int) -> dict:
    return {e: c for e, c in p.items() if sum(e) <= d}


def poly_eval(p: dict, z) -> complex:
    return sum(c * np.prod([zi**k for zi, k in zip(z, e)]) for e, c in p.items())


def jet_to_poly(j: Jet) -> dict:
    out = {e: complex(c) for e, c in zip(j.basis.exponents, j.coeffs) if c != 0}
    if j.const:
        out[(0,) * j.basis.n] = j.const
    return out


def poly_to_jet(p: dict, n: int, d: int) -> Jet:
    return Jet.from_terms(monomial_basis(n, d), list(p.items()))


def assert_poly_close(p: dict, q: dict, atol: float = 1e-12):
    keys = set(p) | set(q)
    for k in keys:
        assert abs(p.get(k, 0) - q.get(k, 0)) <= atol, (k, p.get(k, 0), q.get(k, 0))


# -- strategies ---------------------------------------------------------------

coef = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def jets(draw, n=None, d=None, const=False):
    n = draw(st.integers(1, 3)) if n is None else n
    d = draw(st.integers(1, 4)) if d is None else d
    basis = monomial_basis(n, d)
    c = draw(st.lists(coef, min_size=len(basis), max_size=len(basis)))
    k = draw(coef) if const else 0j
    return Jet(basis, np.array(c), k)


@st.composite
def jetmaps(draw, n, d):
    basis = monomial_basis(n, d)
    comps = []
    for _ in range(n):
        c = draw(st.lists(coef, min_size=len(basis), max_size=len(basis)))
        comps.append(Jet(basis, np.array(c)))
    return JetMap(tuple(comps))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def all_exponents(n: int, d: int):
    return [e for e in itertools.product(range(d + 1), repeat=n) if 1 <= sum(e) <= d]
