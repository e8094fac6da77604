import numpy as np
import pytest
from hypothesis import given, strategies as st

from hopflin.errors import InvalidInputError, NotAContractionError, NotDiagonalizableError
from hopflin.linearizer import export_linear_hopf, linearize
from hopflin.potential import (FlowPotentialModel, LinearHopfModel, PotentialModel,
                               build_automorphic_potential, build_flow_potential, build_potential,
                               build_potential_approx, check_psh, complex_derivatives, expm_stack,
                               pull_back_potential)
from hopflin.sampling import sphere_points
from hopflin.suite import generic_cubic, halving, kodaira, random_linear

JORDAN = np.array([[0.5, 1.0], [0.0, 0.5]])


def automorphy_defect(pot, B, w):
    phi = pot(w)
    return np.max(np.abs(pot(w @ B.T) - pot.c * phi) / (pot.c * phi))


class TestLinearHopfModel:
    def test_diagonalizable(self):
        m = LinearHopfModel.from_matrix(np.diag([0.5, 0.25]))
        assert m.diagonalizable and m.sigma_max == 0.5 and m.sigma_min == 0.25

    def test_jordan(self):
        assert not LinearHopfModel.from_matrix(JORDAN).diagonalizable

    def test_expanding(self):
        with pytest.raises(NotAContractionError):
            LinearHopfModel.from_matrix(np.diag([0.5, 1.0]))

    def test_singular(self):
        with pytest.raises(NotAContractionError):
            LinearHopfModel.from_matrix(np.diag([0.5, 0.0]))

    def test_not_square(self):
        with pytest.raises(InvalidInputError):
            LinearHopfModel.from_matrix(np.ones((2, 3)) * 0.1)


class TestDiagonalPotential:
    def test_half_identity(self):
        pot = build_potential(LinearHopfModel.from_matrix(0.5 * np.eye(3)))
        assert np.allclose(pot.beta, 1) and pot.c == pytest.approx(0.25)
        w = np.array([0.3, -0.2j, 1.0])
        assert pot(w) == pytest.approx(np.sum(np.abs(w) ** 2))

    def test_two_rates(self):
        pot = build_potential(LinearHopfModel.from_matrix(np.diag([0.5, 0.25])))
        assert np.allclose(pot.beta, [1, 0.5]) and pot.c == pytest.approx(0.25)
        assert pot(np.array([1.0, 1.0])) == pytest.approx(2.0)
        assert pot(np.array([0.5, 0.25])) == pytest.approx(0.5)

    def test_scalar(self):
        pot = build_potential(LinearHopfModel.from_matrix([[0.5]]))
        assert pot(np.array([1.0])) == pytest.approx(1.0)

    def test_rejects_jordan(self):
        with pytest.raises(NotDiagonalizableError):
            build_potential(LinearHopfModel.from_matrix(JORDAN))

    @pytest.mark.parametrize("seed", range(5))
    def test_automorphy(self, seed):
        rng = np.random.default_rng(seed)
        B = random_linear(rng, 1 + seed % 3, 0.8)
        pot = build_potential(LinearHopfModel.from_matrix(B))
        w = sphere_points(B.shape[0], 4096, 1.0, seed)
        assert automorphy_defect(pot, B, w) <= 1e-12
        Binv = np.linalg.inv(B)
        phi = pot(w)
        assert np.max(np.abs(pot(w @ Binv.T) - phi / pot.c) / (phi / pot.c)) <= 1e-12

    @given(st.floats(1e-3, 1e3), st.integers(0, 20))
    def test_homogeneity_bounds(self, t, seed):
        B = np.diag([0.6, 0.3, 0.45j])
        pot = build_potential(LinearHopfModel.from_matrix(B))
        w = sphere_points(3, 16, 1.0, seed)
        lo, hi = sorted([t ** (2 * pot.beta.min()), t ** (2 * pot.beta.max())])
        ratio = pot(t * w) / pot(w)
        assert np.all(ratio <= hi * (1 + 1e-12)) and np.all(ratio >= lo * (1 - 1e-12))

    def test_positivity_on_shells(self):
        pot = build_potential(LinearHopfModel.from_matrix(np.diag([0.6, 0.2])))
        for r in (1e-3, 1.0, 1e3):
            assert pot(sphere_points(2, 512, r, 3)).min() > 0


@pytest.fixture(scope="module")
def flow():
    return build_flow_potential(LinearHopfModel.from_matrix(JORDAN))


class TestFlowPotential:
    def test_automorphy(self, flow):
        w = sphere_points(2, 4096, 1.0, 5)
        assert automorphy_defect(flow, JORDAN, w) <= 1e-11

    def test_inverse_deck(self, flow):
        w = sphere_points(2, 512, 1.0, 6)
        phi = flow(w)
        back = flow(w @ np.linalg.inv(JORDAN).T)
        assert np.max(np.abs(back - phi / flow.c) / (phi / flow.c)) <= 1e-11

    def test_constant(self, flow):
        assert flow.c == pytest.approx(np.exp(-flow.q))
        assert flow.q >= -2 * np.log(0.5) - 1e-12

    def test_time_on_unit_sphere(self, flow):
        # points on the H unit sphere have crossing time 0
        w = sphere_points(2, 64, 1.0, 7)
        hn = np.sqrt(np.einsum("ij,jk,ik->i", w.conj(), flow.H, w).real)
        assert np.allclose(flow.time(w / hn[:, None]), 0, atol=1e-12)

    def test_psh(self, flow):
        assert check_psh(flow, 128).passed

    def test_positivity(self, flow):
        for r in (1e-3, 1.0, 1e3):
            assert flow(sphere_points(2, 256, r, 2)).min() > 0

    def test_dispatch(self):
        assert isinstance(build_automorphic_potential(LinearHopfModel.from_matrix(JORDAN)),
                          FlowPotentialModel)
        assert isinstance(build_automorphic_potential(LinearHopfModel.from_matrix(0.5 * np.eye(2))),
                          PotentialModel)


def test_expm_stack_matches_scipy():
    from scipy.linalg import expm
    L = np.array([[0.1 + 0.3j, 1.0], [0.0, -0.2]])
    t = np.array([-3.0, 0.0, 0.7, 12.0])
    got = expm_stack(t, L)
    for k, tk in enumerate(t):
        assert np.allclose(got[k], expm(tk * L), rtol=1e-12, atol=1e-14)


def test_complex_derivatives_quadratic():
    M = np.array([[2.0, 0.5j], [-0.5j, 1.0]])
    f = lambda w: np.einsum("ij,jk,ik->i", w.conj(), M, w).real
    _, levi = complex_derivatives(f, np.array([[0.3, 0.1j], [1.0, -1.0]]), 1e-4)
    # L_ij = d^2 f / dw_i dwbar_j = M_ji
    assert np.allclose(levi, M.T, atol=1e-6)


class TestApprox:
    def test_jordan_flagged(self):
        pot, rep = build_potential_approx(LinearHopfModel.from_matrix(JORDAN))
        assert rep.approximate and rep.defect > rep.bound

    def test_diagonalizable_noop(self):
        m = LinearHopfModel.from_matrix(np.diag([0.5, 0.25]))
        pot, rep = build_potential_approx(m)
        assert not rep.approximate and rep.defect < 1e-11
        assert np.allclose(pot.beta, build_potential(m).beta)


class TestPsh:
    def test_half_identity(self):
        rep = check_psh(build_potential(LinearHopfModel.from_matrix(0.5 * np.eye(2))), 64)
        assert rep.passed and rep.min_eigenvalue == pytest.approx(1.0, rel=1e-5)

    def test_two_rates(self):
        pot = build_potential(LinearHopfModel.from_matrix(np.diag([0.5, 0.25])))
        rep = check_psh(pot, np.array([[1.0, 1.0]]))
        assert rep.passed and rep.min_eigenvalue > 0

    def test_axis_rejected(self):
        pot = build_potential(LinearHopfModel.from_matrix(np.diag([0.5, 0.25])))
        with pytest.raises(InvalidInputError):
            check_psh(pot, np.array([[1.0, 0.0]]))

    def test_non_psh_detected(self):
        class Bad:
            S = np.eye(2)

            def __call__(self, w):
                w = np.atleast_2d(w)
                return np.abs(w[:, 0]) ** 2 + 1.0 - 0.5 * np.abs(w[:, 1]) ** 2

        assert not check_psh(Bad(), np.array([[0.5, 0.5]])).passed


class TestPullback:
    def test_linear(self):
        spec = halving(2)
        m = linearize(spec, "closure", 2)
        pot = build_automorphic_potential(export_linear_hopf(m))
        rep = pull_back_potential(pot, m, spec, samples=512)
        assert rep.exact and rep.max_defect <= 1e-12 and rep.passed

    def test_kodaira(self):
        spec = kodaira(0.5, 2, 1.0)
        m = linearize(spec, "auto", 4)
        pot = build_automorphic_potential(export_linear_hopf(m))
        rep = pull_back_potential(pot, m, spec, samples=512)
        assert rep.exact and rep.max_defect <= 1e-9 and rep.passed

    def test_generic_cubic_root_prune(self):
        spec = generic_cubic()
        m = linearize(spec, "root-prune", 4)
        pot = build_automorphic_potential(export_linear_hopf(m))
        rep = pull_back_potential(pot, m, spec, annulus=(0.05, 0.1), samples=512)
        assert not rep.exact
        assert rep.bound == pytest.approx(10 * 0.1**5 / rep.min_psi_norm)
        assert rep.automorphy_part <= 1e-9 and rep.passed
