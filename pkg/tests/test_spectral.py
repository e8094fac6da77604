import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hopflin.contraction import ContractionSpec
from hopflin.errors import IllConditionedError, InvalidInputError
from hopflin.jets import Jet
from hopflin.koopman import build
from hopflin.spectral import (cluster_values, detect_resonances, f_finite_span, jordan_chains,
                              monomial_eigenvalues, root_decomposition, schur_coordinates,
                              triangularize)
from hopflin.suite import generic_cubic, halving, kodaira, quadratic, random_linear, random_polynomial

from conftest import all_exponents


def brute_resonances(lam, d, tol):
    """All pairs alpha != beta with |lam^alpha - lam^beta| <= tol * max modulus."""
    ex = all_exponents(len(lam), d)
    vals = {e: np.prod([l**k for l, k in zip(lam, e)]) for e in ex}
    out = set()
    for a, b in itertools.combinations(ex, 2):
        s = max(abs(vals[a]), abs(vals[b]))
        if abs(vals[a] - vals[b]) <= tol * s:
            out.add(frozenset((a, b)))
    return out


class TestMonomialEigenvalues:
    def test_halving(self):
        assert np.allclose([v for _, v in monomial_eigenvalues([[0.5]], 3)], [0.5, 0.25, 0.125])

    def test_two_dim(self):
        vals = sorted(abs(v) for _, v in monomial_eigenvalues(np.diag([0.3, 0.5]), 2))
        assert np.allclose(vals, sorted([0.3, 0.5, 0.09, 0.15, 0.25]))

    def test_repeated_value(self):
        vals = [v for _, v in monomial_eigenvalues(np.diag([0.25, 0.5]), 2)]
        assert sum(abs(v - 0.25) < 1e-15 for v in vals) == 2

    def test_order_matches_basis(self):
        ex = [e for e, _ in monomial_eigenvalues(np.diag([0.3, 0.5]), 3)]
        assert ex == list(build(quadratic(), 3).basis.exponents)


class TestResonances:
    def test_none(self):
        assert detect_resonances(np.diag([0.3, 0.5]), 4) == []

    def test_exact(self):
        res = detect_resonances(np.diag([0.25, 0.5]), 2)
        assert len(res) == 1
        r = res[0]
        assert r.source == (0, 2) and r.target == (1, 0)
        assert r.target_index == 0 and r.is_exact and r.within_tol

    def test_near(self):
        res = detect_resonances(np.diag([0.2500001, 0.5]), 2, tol_res=1e-6)
        assert [r.classification for r in res] == ["near"]
        assert res[0].within_tol

    def test_outside_window(self):
        assert detect_resonances(np.diag([0.26, 0.5]), 2, tol_res=1e-8) == []

    def test_higher_degree_pairs(self):
        # lam = (0.5, 0.25): z2 ~ z1^2 and z1 z2 ~ z1^3, z2^2 ~ z1^4 ...
        res = detect_resonances(np.diag([0.5, 0.25]), 4)
        pairs = {frozenset((r.source, r.target)) for r in res}
        assert pairs == brute_resonances([0.5, 0.25], 4, 1e-12)

    @given(st.lists(st.floats(0.2, 0.9), min_size=1, max_size=3),
           st.integers(2, 4))
    def test_matches_brute_force(self, mods, d):
        lam = np.array(mods)
        res = detect_resonances(np.diag(lam), d, tol_res=1e-8)
        got = {frozenset((r.source, r.target)) for r in res if r.within_tol}
        assert got == brute_resonances(lam, d, 1e-8)

    def test_complex_eigenvalue_exact(self, rng):
        A = random_linear(rng, 2, 0.5)
        lam = np.linalg.eigvals(A)
        A2 = np.diag([lam[0], lam[0] ** 2])
        assert any(r.is_exact for r in detect_resonances(A2, 2))


class TestClusterAndTriangular:
    def test_cluster_values(self):
        labels = cluster_values(np.array([0.25, 0.5, 0.25 + 1e-12, 0.125]), 1e-8)
        assert labels[0] == labels[2] and len(set(labels)) == 3

    def test_cluster_chain(self):
        # transitive closure of the epsilon graph
        v = np.array([1.0, 1.0 + 0.6e-8, 1.0 + 1.2e-8])
        assert len(set(cluster_values(v, 1e-8))) == 1

    def test_schur_unitary(self, rng):
        A = random_linear(rng, 3)
        Q, R = schur_coordinates(A)
        assert np.allclose(Q @ R @ Q.conj().T, A, atol=1e-13)
        assert np.allclose(np.tril(R, -1), 0)

    def test_triangularization_similarity(self, rng):
        s = random_polynomial(rng, random_linear(rng, 2, 0.7), 3, 0.2)
        T = build(s, 4)
        tri = triangularize(T)
        assert np.allclose(np.triu(tri.Tt, 1), 0)
        assert np.allclose(T.matrix @ tri.C, tri.C @ tri.Tt, atol=1e-12)

    def test_triangular_identity_shortcut(self):
        tri = triangularize(build(quadratic(), 3))
        assert np.array_equal(tri.C, np.eye(9))


class TestRootDecomposition:
    def test_halving(self):
        dec = root_decomposition(build(halving(1), 2))
        assert [c.multiplicity for c in dec.clusters] == [1, 1]
        assert np.isclose(dec.cluster_for(0.5).vectors[:, 0], [1, 0]).all()
        assert np.isclose(dec.cluster_for(0.25).vectors[:, 0], [0, 1]).all()

    def test_quadratic_root(self):
        dec = root_decomposition(build(quadratic(), 2))
        v = dec.cluster_for(0.3).vectors[:, 0]
        v = v / v[0]
        assert np.allclose(v, [1, 0, 0, 0, 20], atol=1e-12)

    def test_kodaira_chain(self):
        T = build(kodaira(0.5, 2, 1.0), 2)
        c = root_decomposition(T).cluster_for(0.25)
        assert c.multiplicity == 2
        assert sorted(r.chain_length for r in c.root_vectors) == [1, 2]
        chains = c.jordan_chains()
        assert [ch.shape[1] for ch in chains] == [2]
        eig, gen = chains[0][:, 0], chains[0][:, 1]
        assert np.allclose(T.matrix @ eig, 0.25 * eig, atol=1e-14)
        assert np.allclose(T.matrix @ gen - 0.25 * gen, eig, atol=1e-14)
        # eigenvector is z2^2, generator has a z1 component
        assert abs(eig[4]) > 0 and np.allclose(eig[:4], 0)
        assert abs(gen[0]) > 0

    def test_total_multiplicity(self):
        T = build(generic_cubic(), 4)
        assert root_decomposition(T).total_multiplicity == len(T.basis)

    def test_only_indices(self):
        dec = root_decomposition(build(quadratic(), 3), only_indices=[0])
        assert len(dec.clusters) == 1 and np.isclose(dec.clusters[0].value, 0.3)

    def test_ill_conditioned(self):
        # relative gap 4e-11: below tol_indep, above tol_cluster
        T = build(quadratic(0.25 + 1e-11, 0.5), 2)
        with pytest.raises(IllConditionedError):
            root_decomposition(T, tol_cluster=1e-13, tol_indep=1e-10)

    @pytest.mark.parametrize("seed", range(4))
    def test_invariants(self, seed):
        rng = np.random.default_rng(seed)
        n = 1 + seed % 3
        s = random_polynomial(rng, random_linear(rng, n, 0.7), 3, 0.2)
        T = build(s, 4 if n < 3 else 3)
        dec = root_decomposition(T)
        assert dec.total_multiplicity == len(T.basis)
        assert dec.invariance_residual <= 1e-9
        for c in dec.clusters:
            for rv in c.root_vectors:
                assert rv.residual <= 1e-9

    def test_invariants_resonant(self):
        T = build(kodaira(0.4, 3, -2.0), 6)
        dec = root_decomposition(T)
        assert dec.total_multiplicity == len(T.basis)
        assert dec.invariance_residual <= 1e-9
        assert max(rv.residual for c in dec.clusters for rv in c.root_vectors) <= 1e-9


class TestJordanChains:
    def test_single_block(self):
        N = np.diag([1.0, 1.0], -1)
        chains = jordan_chains(N)
        assert len(chains) == 1 and chains[0].shape == (3, 3)

    def test_zero(self):
        chains = jordan_chains(np.zeros((2, 2)))
        assert [c.shape[1] for c in chains] == [1, 1]

    def test_mixed(self):
        N = np.zeros((3, 3))
        N[1, 0] = 1.0
        assert sorted(c.shape[1] for c in jordan_chains(N)) == [1, 2]


class TestFiniteSpan:
    def test_diagonal(self):
        T = build(ContractionSpec.linear(np.diag([0.3, 0.5])), 3)
        span = f_finite_span(T, [Jet.coordinate(T.basis, 0)])
        assert span.dim == 1 and np.allclose(span.restricted, [[0.3]])

    def test_kodaira(self):
        T = build(kodaira(0.5, 2, 1.0), 4)
        span = f_finite_span(T, [Jet.coordinate(T.basis, 0)])
        assert span.dim == 2
        assert np.allclose(np.abs(span.basis[:, 0]), np.eye(len(T.basis))[0])
        assert np.allclose(np.abs(span.basis[:, 1]), np.eye(len(T.basis))[4])
        # orient the basis as (z1, z2^2)
        D = np.diag([span.basis[0, 0], span.basis[4, 1]])
        R = D @ span.restricted @ np.linalg.inv(D)
        assert np.allclose(R, [[0.25, 0], [1, 0.25]], atol=1e-14)

    def test_full(self):
        T = build(generic_cubic(), 3)
        span = f_finite_span(T, list(np.eye(len(T.basis))))
        assert span.dim == len(T.basis)
        assert np.allclose(span.basis @ span.restricted @ span.basis.conj().T, T.matrix)

    def test_bad_seed(self):
        T = build(halving(1), 2)
        with pytest.raises(InvalidInputError):
            f_finite_span(T, [np.ones(3)])

    @pytest.mark.parametrize("seed", range(3))
    def test_properties(self, seed):
        rng = np.random.default_rng(seed)
        s = random_polynomial(rng, random_linear(rng, 2, 0.7), 3, 0.3)
        T = build(s, 4)
        size = len(T.basis)
        seeds = [Jet.coordinate(T.basis, 0)]
        span = f_finite_span(T, seeds)
        assert span.residual <= 1e-9
        # idempotent
        again = f_finite_span(T, list(span.basis.T))
        assert again.dim == span.dim
        # monotone
        bigger = f_finite_span(T, seeds + [Jet.coordinate(T.basis, 1)])
        assert bigger.dim >= span.dim
        P = bigger.basis @ bigger.basis.conj().T
        assert np.allclose(P @ span.basis, span.basis, atol=1e-9)
        # spectrum inside the monomial eigenvalue set
        mono = np.array([v for _, v in monomial_eigenvalues(s.linear_part, 4)])
        for mu in np.linalg.eigvals(span.restricted):
            assert np.abs(mono - mu).min() <= 1e-8
        assert span.dim <= size
