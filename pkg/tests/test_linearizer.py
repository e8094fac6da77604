import numpy as np
import pytest

from hopflin.contraction import ContractionSpec, iterate
from hopflin.errors import IllConditionedError, InvalidInputError
from hopflin.koopman import build
from hopflin.linearizer import (default_degree, export_linear_hopf, linearize, linearize_closure,
                                linearize_root_prune, semiconjugacy_residuals, verify,
                                verify_injectivity, verify_semiconjugacy)
from hopflin.sampling import sphere_points
from hopflin.spectral import monomial_eigenvalues
from hopflin.suite import examples, generic_cubic, halving, kodaira, quadratic, random_linear


def psi_terms(model, k, tol=1e-12):
    """Psi_k as {exponents: coeff}, normalized so the largest linear coefficient is 1."""
    v = model.B[:, k]
    lin = v[model.basis.degree_slice(1)]
    v = v / lin[np.argmax(np.abs(lin))]
    return {e: c for e, c in zip(model.basis.exponents, v) if abs(c) > tol}


def test_default_degree():
    assert default_degree(halving(1)) == 3
    # ln 0.3 / ln 0.5 = 1.74 -> 2 + 2
    assert default_degree(quadratic()) == 4
    assert default_degree(ContractionSpec.linear(np.diag([0.9, 0.01]))) == 8
    assert default_degree(ContractionSpec.linear(np.diag([0.9, 0.01])), cap=50) == 46


class TestClosure:
    def test_linear(self, rng):
        A = random_linear(rng, 3, 0.8)
        m = linearize_closure(ContractionSpec.linear(A), 3)
        assert m.N == 3
        assert np.allclose(np.sort_complex(np.linalg.eigvals(m.A_W)),
                           np.sort_complex(np.linalg.eigvals(A)), atol=1e-10)
        z = sphere_points(3, 64, 0.3, 1)
        assert semiconjugacy_residuals(m, ContractionSpec.linear(A), z).max() < 1e-14

    def test_linear_convention(self):
        A = np.array([[0.5, 0.2], [0.0, 0.3]])
        m = linearize_closure(ContractionSpec.linear(A), 2)
        # coordinates as Psi: point_map equals A
        z = np.array([0.1, 0.2j])
        assert np.allclose(m.psi(A @ z), m.point_map @ m.psi(z))

    def test_kodaira(self):
        spec = kodaira(0.5, 3, 2.0)
        m = linearize_closure(spec, 4)
        assert m.N == 3
        lin = m.linear_block()
        assert np.linalg.matrix_rank(lin) == 2
        eig = np.sort(np.abs(np.linalg.eigvals(m.A_W)))
        assert np.allclose(eig, [0.125, 0.125, 0.5])
        rep = verify_semiconjugacy(m, spec)
        assert max(rep.residuals) < 1e-12 and rep.passed

    def test_quadratic(self):
        m = linearize_closure(quadratic(), 2)
        assert m.N == 3
        assert m.jet_residual < 1e-12
        vals = sorted(np.abs(np.linalg.eigvals(m.A_W)))
        assert np.allclose(vals, [0.25, 0.3, 0.5])

    def test_jet_exactness(self):
        m = linearize_closure(generic_cubic(), 4)
        T = build(generic_cubic(), 4)
        assert np.linalg.norm(T.matrix @ m.B - m.B @ m.A_W) <= 1e-10

    def test_bad_degree(self):
        with pytest.raises(InvalidInputError):
            linearize_closure(quadratic(), 0)


class TestRootPrune:
    def test_quadratic(self):
        m = linearize_root_prune(quadratic(), 2)
        assert m.N == 2
        assert np.allclose(m.A_W, np.diag([0.3, 0.5]), atol=1e-13)
        assert psi_terms(m, 0) == pytest.approx({(1, 0): 1, (0, 2): 20})
        assert psi_terms(m, 1) == pytest.approx({(0, 1): 1})

    def test_kodaira_same_as_closure(self):
        spec = kodaira(0.5, 2, 1.0)
        rp, cl = linearize_root_prune(spec, 4), linearize_closure(spec, 4)
        assert rp.N == cl.N == 3
        P = cl.B @ np.linalg.pinv(cl.B)
        assert np.allclose(P @ rp.B, rp.B, atol=1e-9)

    def test_linear(self, rng):
        m = linearize_root_prune(ContractionSpec.linear(random_linear(rng, 2)), 3)
        assert m.N == 2

    def test_refuses_near_resonance(self):
        with pytest.raises(IllConditionedError, match="use closure strategy"):
            linearize_root_prune(quadratic(0.2500001, 0.5), 2)

    def test_auto_fallback(self):
        m = linearize(quadratic(0.2500001, 0.5), "auto", 2)
        assert m.strategy == "closure"
        assert linearize(quadratic(), "auto", 2).strategy == "root-prune"

    def test_unknown_strategy(self):
        with pytest.raises(InvalidInputError):
            linearize(quadratic(), "greedy")


class TestInvariants:
    @pytest.mark.parametrize("name", sorted(examples()))
    def test_suite(self, name):
        spec = examples()[name]
        d = min(default_degree(spec), 5)
        for strategy in ("closure", "auto"):
            m = linearize(spec, strategy, d)
            # d Psi_0 has rank n
            assert np.linalg.svd(m.linear_block(), compute_uv=False).min() > 1e-10
            mono = np.array([v for _, v in monomial_eigenvalues(spec.linear_part, d)])
            for mu in np.linalg.eigvals(m.A_W):
                assert np.abs(mono - mu).min() <= 1e-8
            assert m.jet_residual <= 1e-10

    def test_strategy_agreement(self):
        spec = quadratic()
        cl, rp = linearize_closure(spec, 3), linearize_root_prune(spec, 3)
        a, b = verify_semiconjugacy(cl, spec), verify_semiconjugacy(rp, spec)
        assert a.passed and b.passed
        # pruned image inside the closure image
        P = cl.B @ np.linalg.pinv(cl.B)
        assert np.linalg.norm(P @ rp.B - rp.B) <= 1e-9

    def test_strategy_agreement_truncated(self):
        spec = generic_cubic()
        cl, rp = linearize_closure(spec, 3), linearize_root_prune(spec, 3)
        ea = verify_semiconjugacy(cl, spec).exponent
        eb = verify_semiconjugacy(rp, spec).exponent
        assert ea >= 3.5 and eb >= 3.5

    @pytest.mark.parametrize("k", range(1, 6))
    def test_iterates(self, k):
        spec = generic_cubic()
        m = linearize(spec, "auto", 4)
        errs = []
        for r in (0.04, 0.02):
            z = sphere_points(2, 64, r, k)
            gk = iterate(spec, k, 4)
            lhs = m.psi(gk(z))
            rhs = m.psi(z) @ np.linalg.matrix_power(m.A_W, k)
            errs.append(np.abs(lhs - rhs).max())
        # O(|z|^{d+1}): halving r divides by at least 2^4.5
        assert errs[1] <= errs[0] / 2**4.5


class TestVerify:
    def test_linear_residuals(self, rng):
        spec = ContractionSpec.linear(random_linear(rng, 2))
        rep = verify_semiconjugacy(linearize(spec, "closure", 2), spec)
        assert max(rep.residuals) <= 1e-14 and rep.passed

    def test_generic_cubic_exponent(self):
        spec = generic_cubic()
        for strategy in ("closure", "root-prune"):
            rep = verify_semiconjugacy(linearize(spec, strategy, 4), spec)
            assert rep.exponent >= 4.5 and rep.passed

    def test_failure_recorded(self):
        # a model for the wrong map fails instead of raising
        m = linearize(quadratic(), "closure", 3)
        rep = verify_semiconjugacy(m, quadratic(0.31, 0.5))
        assert not rep.passed

    def test_injectivity_linear(self):
        spec = halving(2)
        rep = verify_injectivity(linearize(spec, "closure", 2), spec, pairs=2000)
        assert rep.passed and rep.collisions == 0
        assert rep.min_ratio == pytest.approx(1.0)

    def test_injectivity_kodaira(self):
        spec = kodaira(0.5, 2, 1.0)
        rep = verify_injectivity(linearize(spec, "closure", 3), spec, pairs=2000)
        assert rep.passed and rep.min_ratio >= 1 - 1e-12

    def test_verify_bundle(self):
        rep = verify(linearize(quadratic(), "auto", 3), quadratic(), pairs=1000)
        assert rep.passed and rep.spectrum_inside_disk


class TestExport:
    def test_kodaira(self):
        hopf = export_linear_hopf(linearize(kodaira(0.5, 2, 1.0), "closure", 3))
        assert np.allclose(np.sort(np.abs(np.linalg.eigvals(hopf.B))), [0.25, 0.25, 0.5])

    def test_rejects_non_contraction(self):
        m = linearize(halving(1), "closure", 2)
        m.A_W = np.array([[1.0]])
        with pytest.raises(Exception, match="contraction"):
            export_linear_hopf(m)
