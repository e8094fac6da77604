"""Automorphic plurisubharmonic potentials on linear Hopf manifolds.

For a linear contraction ``B`` a potential is a positive function ``phi`` on
``C^N \\ 0`` with ``phi(B w) = c * phi(w)``, ``0 < c < 1``, which is
plurisubharmonic. Two exact constructions are provided:

* diagonalizable ``B = S diag(lambda) S^{-1}``:
  ``phi(w) = sum_j |(S^{-1} w)_j|^{2 beta_j}`` with ``c = sigma_max^2`` and
  ``beta_j = ln(sigma_max) / ln|lambda_j|``;
* any ``B`` (Jordan blocks allowed): ``phi(w) = exp(-q t(w))`` where
  ``t(w)`` is the time at which the flow ``exp(-t L) w`` (``L = log B``)
  crosses the unit sphere of a Lyapunov metric ``H`` for ``L``. Then
  ``t(B w) = t(w) + 1`` and ``c = exp(-q)``; the sublevel sets of ``-t``
  are ellipsoids, so ``phi`` is plurisubharmonic once ``q`` dominates the
  Levi form of ``-t`` transverse to its level sets.

``build_potential_approx`` keeps the epsilon-perturbation fallback for
non-diagonalizable input and reports its automorphy defect.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import IllConditionedError, InvalidInputError, NotAContractionError, NotDiagonalizableError
from .sampling import annulus_points, sphere_points

DECK_CONVENTION = ("B is the contraction generating the deck group; its inverse "
                   "(all eigenvalue moduli > 1) multiplies the potential by 1/c > 1")


@dataclass
class LinearHopfModel:
    """The linear contraction ``B`` of ``C^N`` defining ``(C^N \\ 0) / <B>``."""

    B: np.ndarray
    eigenvalues: np.ndarray
    S: np.ndarray
    diagonalizable: bool
    condition: float
    deck_convention: str = DECK_CONVENTION

    @property
    def N(self) -> int:
        return self.B.shape[0]

    @property
    def sigma_max(self) -> float:
        return float(np.abs(self.eigenvalues).max())

    @property
    def sigma_min(self) -> float:
        return float(np.abs(self.eigenvalues).min())

    @classmethod
    def from_matrix(cls, B, cond_limit: float = 1e6, recon_tol: float = 1e-10) -> "LinearHopfModel":
        B = np.atleast_2d(np.asarray(B, dtype=complex))
        if B.shape[0] != B.shape[1]:
            raise InvalidInputError("contraction matrix must be square")
        lam, S = np.linalg.eig(B)
        if np.abs(lam).max() >= 1.0:
            raise NotAContractionError(
                f"not a linear contraction: eigenvalue modulus {np.abs(lam).max():.6g} >= 1")
        if np.abs(lam).min() == 0:
            raise NotAContractionError("not a linear contraction: B is singular")
        cond = float(np.linalg.cond(S))
        diag_ok = np.isfinite(cond) and cond < cond_limit
        if diag_ok:
            recon = np.linalg.norm(S @ np.diag(lam) @ np.linalg.inv(S) - B)
            diag_ok = recon <= recon_tol * max(np.linalg.norm(B), 1e-300)
        return cls(B, lam, S, bool(diag_ok), cond)


@dataclass
class PotentialModel:
    """``phi(w) = sum_j |(S^{-1} w)_j|^{2 beta_j}`` with ``phi(B w) = c phi(w)``."""

    beta: np.ndarray
    c: float
    S: np.ndarray
    S_inv: np.ndarray
    eigenvalues: np.ndarray
    kind: str = "diagonal"

    def eigen_coordinates(self, w) -> np.ndarray:
        w = np.atleast_2d(np.asarray(w, dtype=complex))
        return w @ self.S_inv.T

    def __call__(self, w):
        arr = np.asarray(w, dtype=complex)
        u = self.eigen_coordinates(arr)
        out = np.sum(np.abs(u) ** (2 * self.beta[None, :]), axis=1)
        return float(out[0]) if arr.ndim == 1 else out

    @property
    def max_exponent(self) -> float:
        return float(2 * self.beta.max())

    def singular_set_distance(self, w) -> np.ndarray:
        """Relative distance to the eigen-hyperplanes where phi is not smooth."""
        u = self.eigen_coordinates(w)
        rough = self.beta < 1
        if not rough.any():
            return np.full(u.shape[0], np.inf)
        return np.abs(u[:, rough]).min(axis=1) / np.linalg.norm(u, axis=1)


def build_potential(model: LinearHopfModel) -> PotentialModel:
    if not model.diagonalizable:
        raise NotDiagonalizableError(
            f"B is not diagonalizable (eigenvector condition {model.condition:.3g}); "
            "use build_flow_potential or build_potential_approx")
    mods = np.abs(model.eigenvalues)
    smax = mods.max()
    beta = np.log(smax) / np.log(mods)
    return PotentialModel(beta, float(smax**2), model.S, np.linalg.inv(model.S), model.eigenvalues)


@dataclass
class FlowPotentialModel:
    """``phi(w) = exp(-q t(w))`` with ``|exp(-t(w) L) w|_H = 1``."""

    L: np.ndarray
    H: np.ndarray
    q: float
    c: float
    sigma_max: float
    q_min: float
    kind: str = "flow"

    def __post_init__(self):
        ev = np.linalg.eigvalsh(self.H)
        self._slope_lo = 1.0 / ev.max()
        self._slope_hi = 1.0 / ev.min()

    def _log_norm(self, t, w):
        E = expm_stack(-t, self.L)
        wt = np.einsum("sij,sj->si", E, w)
        F = np.real(np.einsum("si,ij,sj->s", wt.conj(), self.H, wt))
        return np.log(F), np.sum(np.abs(wt) ** 2, axis=1) / F

    def time(self, w, max_iter: int = 200) -> np.ndarray:
        """Crossing time ``t(w)``, bracketed Newton on ``log |exp(-tL) w|_H^2``."""
        w = np.atleast_2d(np.asarray(w, dtype=complex))
        if np.any(np.linalg.norm(w, axis=1) == 0):
            raise InvalidInputError("the potential is undefined at w = 0")
        t = np.zeros(w.shape[0])
        G, dG = self._log_norm(t, w)
        # G is increasing with slope in [lo, hi]
        pos = G > 0
        lo = np.where(pos, t - G / self._slope_lo, t - G / self._slope_hi)
        hi = np.where(pos, t - G / self._slope_hi, t - G / self._slope_lo)
        lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
        t = 0.5 * (lo + hi)
        step = hi - lo
        active = np.arange(len(t))
        for _ in range(max_iter):
            ta, wa = t[active], w[active]
            G, dG = self._log_norm(ta, wa)
            ha = np.where(G > 0, ta, hi[active])
            la = np.where(G <= 0, ta, lo[active])
            new = ta - G / dG
            # bisect when Newton leaves the bracket or fails to halve the step
            bad = (new < la) | (new > ha) | (np.abs(2 * G) > np.abs(step[active] * dG))
            new = np.where(bad, 0.5 * (la + ha), new)
            step[active] = np.abs(new - ta)
            t[active], lo[active], hi[active] = new, la, ha
            done = (step[active] <= 4e-15 * np.maximum(1.0, np.abs(new))) | (
                ha - la <= 4e-16 * np.maximum(1.0, np.abs(new)))
            active = active[~done]
            if len(active) == 0:
                break
        else:
            raise IllConditionedError(f"crossing time did not converge at {len(active)} points")
        return t

    def time_derivatives(self, w) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``t``, ``dt/dw_j`` and Levi form ``d^2 t / dw_j dwbar_k`` in closed form.

        Implicit differentiation of ``rho(t, w) = |exp(-tL) w|_H^2 = 1``;
        the Lyapunov equation gives ``d rho / dt = |exp(-tL) w|^2``.
        """
        w = np.atleast_2d(np.asarray(w, dtype=complex))
        t = self.time(w)
        E = expm_stack(-t, self.L)
        u = np.einsum("sij,sj->si", E, w)
        A = np.einsum("sji,jk,skl->sil", E.conj(), self.H, E)
        rho_t = np.sum(np.abs(u) ** 2, axis=1)
        rho_j = np.einsum("si,sij->sj", w.conj(), A)
        rho_jt = np.einsum("si,sij->sj", u.conj(), E)
        rho_tt = -np.real(np.einsum("si,ij,sj->s", u.conj(), self.L.conj().T + self.L, u))
        tj = -rho_j / rho_t[:, None]
        M = (np.transpose(A, (0, 2, 1)) + rho_jt[:, :, None] * tj.conj()[:, None, :]
             + tj[:, :, None] * rho_jt.conj()[:, None, :]
             + rho_tt[:, None, None] * tj[:, :, None] * tj.conj()[:, None, :])
        return t, tj, -M / rho_t[:, None, None]

    def __call__(self, w):
        arr = np.asarray(w, dtype=complex)
        out = np.exp(-self.q * self.time(arr))
        return float(out[0]) if arr.ndim == 1 else out

    @property
    def max_exponent(self) -> float:
        return float(self.q / -np.log(self.sigma_max))


def expm_stack(t: np.ndarray, L: np.ndarray, order: int = 18) -> np.ndarray:
    """``exp(t_s L)`` for every scalar ``t_s``: scaling and squaring with Taylor.

    One common scaling exponent keeps the whole stack in a single batched
    matmul sequence.
    """
    t = np.asarray(t, dtype=float)
    N = L.shape[0]
    norm = np.abs(t).max(initial=0.0) * np.linalg.norm(L, 1)
    s = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0 else 0
    X = (t / 2.0**s)[:, None, None] * L[None, :, :]
    eye = np.eye(N, dtype=complex)
    E = np.broadcast_to(eye, X.shape).copy()
    for k in range(order, 0, -1):
        E = eye + (X @ E) / k
    for _ in range(s):
        E = E @ E
    return E


def complex_derivatives(f: Callable[[np.ndarray], np.ndarray], w: np.ndarray,
                        h_rel: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference ``df/dz`` and Levi form ``d^2 f / dz_j d zbar_k``.

    Central differences in the 2N real directions with step
    ``h_rel * |w|``; all stencil points are evaluated in one batch.
    """
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    S, N = w.shape
    R = 2 * N
    dirs = np.concatenate([np.eye(N), 1j * np.eye(N)], axis=0)
    h = h_rel * np.linalg.norm(w, axis=1)
    offsets = [np.zeros(N, dtype=complex)]
    for p in range(R):
        offsets += [dirs[p], -dirs[p]]
    pairs = [(p, r) for p in range(R) for r in range(p + 1, R)]
    for p, r in pairs:
        offsets += [dirs[p] + dirs[r], dirs[p] - dirs[r], -dirs[p] + dirs[r], -dirs[p] - dirs[r]]
    offsets = np.array(offsets)
    pts = w[:, None, :] + h[:, None, None] * offsets[None, :, :]
    vals = np.asarray(f(pts.reshape(-1, N)), dtype=float).reshape(S, len(offsets))
    f0 = vals[:, 0]
    grad = np.zeros((S, R))
    hess = np.zeros((S, R, R))
    h2 = h**2
    for p in range(R):
        fp, fm = vals[:, 1 + 2 * p], vals[:, 2 + 2 * p]
        grad[:, p] = (fp - fm) / (2 * h)
        hess[:, p, p] = (fp - 2 * f0 + fm) / h2
    base = 1 + 2 * R
    for i, (p, r) in enumerate(pairs):
        a, b, c, d = (vals[:, base + 4 * i + s] for s in range(4))
        hess[:, p, r] = hess[:, r, p] = (a - b - c + d) / (4 * h2)
    x, y = slice(0, N), slice(N, R)
    dz = 0.5 * (grad[:, x] - 1j * grad[:, y])
    levi = 0.25 * (hess[:, x, x] + hess[:, y, y] + 1j * (hess[:, x, y] - hess[:, y, x]))
    levi = 0.5 * (levi + np.conj(np.transpose(levi, (0, 2, 1))))
    return dz, levi


def _min_q(levi: np.ndarray, g: np.ndarray) -> float:
    """Least q with ``levi + q g g^*`` positive semidefinite."""
    gn = np.linalg.norm(g)
    N = len(g)
    basis = np.linalg.qr(np.column_stack([g / gn, np.eye(N)]))[0][:, :N]
    Mb = basis.conj().T @ levi @ basis
    mgg = Mb[0, 0].real
    if N == 1:
        return float(-mgg / gn**2)
    Muu, Mgu = Mb[1:, 1:], Mb[0, 1:]
    if np.linalg.eigvalsh(Muu).min() <= 0:
        raise IllConditionedError("level sets of the flow time are not strictly pseudoconvex")
    return float((np.real(Mgu @ np.linalg.solve(Muu, Mgu.conj())) - mgg) / gn**2)


def build_flow_potential(model: LinearHopfModel, samples: int = 256, margin: float = 2.0,
                         seed: int = 0) -> FlowPotentialModel:
    """Exact automorphic potential for any linear contraction.

    ``q`` is at least ``-2 ln sigma_max`` (so ``c <= sigma_max^2``, matching
    the diagonal construction for scalar ``B``) and at least ``margin``
    times the largest transverse Levi deficit of ``-t`` sampled on the
    Lyapunov sphere. By flow equivariance that sphere sees every orbit.
    """
    L = sla.logm(model.B)
    L = np.asarray(L, dtype=complex)
    H = sla.solve_continuous_lyapunov(L.conj().T, -np.eye(model.N))
    H = 0.5 * (H + H.conj().T)
    if np.linalg.eigvalsh(H).min() <= 0:
        raise IllConditionedError("Lyapunov metric is not positive definite")
    probe = FlowPotentialModel(L, H, 1.0, np.exp(-1.0), model.sigma_max, 0.0)
    u = sphere_points(model.N, samples, 1.0, seed)
    w = u @ np.linalg.inv(sla.sqrtm(H)).T
    _, dt, levi_t = probe.time_derivatives(w)
    q_need = max(_min_q(-levi_t[i], -dt[i]) for i in range(len(w)))
    q = max(-2.0 * np.log(model.sigma_max), margin * q_need)
    return FlowPotentialModel(L, H, float(q), float(np.exp(-q)), model.sigma_max, float(q_need))


def build_automorphic_potential(model: LinearHopfModel, **kw):
    """Closed-form potential when B is diagonalizable, flow potential otherwise."""
    if model.diagonalizable:
        return build_potential(model)
    return build_flow_potential(model, **kw)


@dataclass
class ApproxReport:
    epsilon: float
    defect: float
    bound: float
    approximate: bool
    perturbed_condition: float


def build_potential_approx(model: LinearHopfModel, eps: float = 1e-4, samples: int = 1024,
                           bound: float = 1e-6, seed: int = 0) -> tuple[PotentialModel, ApproxReport]:
    """Exact potential of a diagonalizable perturbation ``B_eps`` of ``B``.

    Repeated Schur diagonal entries are split by ``eps * j`` (j = 0, 1, ...)
    which breaks every Jordan block; the automorphy defect is measured for
    the true ``B``.
    """
    from .spectral import cluster_values

    if model.diagonalizable:
        pot = build_potential(model)
        cond = model.condition
    else:
        R, Q = sla.schur(model.B, output="complex")
        diag = np.diag(R).copy()
        labels = cluster_values(diag, 1e-8)
        shift = np.zeros(len(diag))
        for lab in np.unique(labels):
            idx = np.flatnonzero(labels == lab)
            shift[idx] = eps * np.arange(len(idx))
        Be = Q @ (R + np.diag(shift)) @ Q.conj().T
        pert = LinearHopfModel.from_matrix(Be, cond_limit=np.inf, recon_tol=1e-8)
        pert.diagonalizable = True
        pot = build_potential(pert)
        cond = pert.condition
    w = sphere_points(model.N, samples, 1.0, seed)
    phi = pot(w)
    defect = float(np.max(np.abs(pot(w @ model.B.T) - pot.c * phi) / (pot.c * phi)))
    return pot, ApproxReport(eps, defect, bound, bool(defect > bound), cond)


@dataclass
class PshReport:
    min_eigenvalue: float
    samples: int
    tolerance: float
    passed: bool


def psh_sample_points(pot, N: int, count: int, seed: int = 0, guard: float = 1e-2) -> np.ndarray:
    """Unit-sphere samples, skipping those near the non-smooth hyperplanes."""
    pts = sphere_points(N, 4 * count, 1.0, seed)
    if isinstance(pot, PotentialModel):
        pts = pts[pot.singular_set_distance(pts) >= guard]
    if len(pts) < count:
        raise InvalidInputError("could not find enough sample points off the eigen-hyperplanes")
    return pts[:count]


def check_psh(pot, samples=256, h_rel: float = 1e-4, tol: float = -1e-6,
              guard: float = 1e-2, seed: int = 0) -> PshReport:
    """Finite-difference Levi form test.

    The Levi form at ``w`` is scaled by ``|w|^2 / phi(w)`` so the threshold
    is independent of the sample radius.
    """
    if isinstance(samples, (int, np.integer)):
        N = pot.S.shape[0] if isinstance(pot, PotentialModel) else pot.L.shape[0]
        w = psh_sample_points(pot, N, int(samples), seed, guard)
    else:
        w = np.atleast_2d(np.asarray(samples, dtype=complex))
        if isinstance(pot, PotentialModel) and np.any(pot.singular_set_distance(w) < guard):
            raise InvalidInputError(
                "sample lies on an eigen-coordinate hyperplane where phi is not smooth")
    _, levi = complex_derivatives(pot, w, h_rel)
    scale = np.linalg.norm(w, axis=1) ** 2 / np.asarray(pot(w))
    mins = np.linalg.eigvalsh(levi)[:, 0] * scale
    m = float(mins.min())
    return PshReport(m, len(w), tol, bool(m >= tol))


@dataclass
class PullbackReport:
    max_defect: float
    automorphy_part: float
    residual_part: float
    relative_residual: float
    min_psi_norm: float
    first_order_estimate: float
    truncation_bound: float
    bound: float
    tolerance: float
    exact: bool
    samples: int
    passed: bool


def pull_back_potential(pot, model, spec, annulus: tuple[float, float] = (0.1, 1.0),
                        samples: int = 2048, seed: int = 0, tol: float = 1e-9,
                        exact: Optional[bool] = None) -> PullbackReport:
    """Automorphy of ``Phi = phi o Psi`` under the nonlinear contraction.

    ``Phi(gamma z) - c Phi(z)`` splits into a semiconjugacy part
    ``phi(Psi(gamma z)) - phi(B Psi z)`` and an automorphy part
    ``phi(B Psi z) - c phi(Psi z)``; both are reported relative to
    ``c Phi(z)``, the value they should match.

    The automorphy part must stay within ``tol``. When the semiconjugacy is
    exact (relative residual at round-off) so must the total; otherwise the
    total is held to the truncation bound ``10 r_out^(d+1) / min|Psi|``.
    """
    z = annulus_points(spec.n, samples, annulus[0], annulus[1], seed)
    B = model.point_map
    psi = model.psi(z)
    psi_g = model.psi(spec(z))
    lin = psi @ B.T
    norms = np.linalg.norm(psi, axis=1)
    if np.any(norms <= 1e-14):
        raise IllConditionedError("Psi vanishes at a sample point off the origin")
    Phi = pot(psi)
    ref = pot.c * Phi
    total = np.abs(pot(psi_g) - ref) / ref
    resid = np.abs(pot(psi_g) - pot(lin)) / ref
    auto = np.abs(pot(lin) - ref) / ref
    rel_res = float(np.max(np.linalg.norm(psi_g - lin, axis=1) / np.linalg.norm(lin, axis=1)))
    if exact is None:
        exact = rel_res <= 1e-12
    first = 10.0 * pot.max_exponent * rel_res
    trunc = 10.0 * annulus[1] ** (model.d + 1) / float(norms.min())
    bound = tol if exact else max(tol, trunc)
    m = float(total.max())
    return PullbackReport(m, float(auto.max()), float(resid.max()), rel_res,
                          float(norms.min()), float(first), float(trunc), float(bound), tol,
                          bool(exact), samples, bool(auto.max() <= tol and m <= bound))
