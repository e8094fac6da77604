"""Polynomial embeddings Psi of a contraction into a linear model.

An :class:`EmbeddingModel` is a finite family of jets ``w_1..w_N`` spanning a
pullback-invariant subspace ``W``. The matrix ``A_W`` acts on W-basis
coordinates by columns, ``T B = B A_W``, so at points

    Psi(gamma(z)) = A_W.T @ Psi(z)    (mod degree > d)

and ``point_map = A_W.T`` is the linear contraction of ``C^N`` that Psi
intertwines with ``gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .contraction import ContractionSpec, spectral_bounds
from .errors import IllConditionedError, InvalidInputError
from .jets import Jet, MonomialBasis, jacobian, monomial_values
from .koopman import build
from .potential import LinearHopfModel
from .sampling import annulus_points, sphere_points
from .spectral import detect_resonances, f_finite_span, root_decomposition

DEGREE_CAP = 8


def default_degree(spec: ContractionSpec, cap: int = DEGREE_CAP) -> int:
    """``ceil(ln sigma_min / ln sigma_max) + 2``, capped.

    Beyond this degree no monomial eigenvalue can reach the modulus of a
    coordinate eigenvalue, so every coordinate resonance is visible.
    """
    s_max, s_min = spectral_bounds(spec.linear_part)
    if not 0 < s_min <= s_max < 1:
        raise InvalidInputError("default degree needs a contracting, invertible linear part")
    d = math.ceil(math.log(s_min) / math.log(s_max) - 1e-12) + 2
    return int(min(max(d, 1), cap))


@dataclass
class EmbeddingModel:
    strategy: str
    n: int
    d: int
    basis: MonomialBasis
    B: np.ndarray
    A_W: np.ndarray
    provenance: list[str] = field(default_factory=list)
    jet_residual: float = 0.0

    @property
    def N(self) -> int:
        return self.B.shape[1]

    @property
    def point_map(self) -> np.ndarray:
        return self.A_W.T

    @property
    def jets(self) -> list[Jet]:
        return [Jet(self.basis, self.B[:, k]) for k in range(self.N)]

    def psi(self, z) -> np.ndarray:
        arr = np.asarray(z, dtype=complex)
        out = monomial_values(self.basis, np.atleast_2d(arr)) @ self.B
        return out[0] if arr.ndim == 1 else out

    def psi_jacobian(self, z) -> np.ndarray:
        return jacobian(self.jets, z)

    def linear_block(self) -> np.ndarray:
        """Degree-1 coefficients, shape (N, n)."""
        return self.B[self.basis.degree_slice(1), :].T

    def terms(self, k: int, tol: float = 1e-14) -> list[tuple[tuple[int, ...], complex]]:
        return Jet(self.basis, self.B[:, k]).terms(tol)


def _jet_residual(Tm: np.ndarray, B: np.ndarray, A: np.ndarray) -> float:
    return float(np.linalg.norm(Tm @ B - B @ A))


def linearize_closure(spec: ContractionSpec, d: Optional[int] = None,
                      rank_tol: float = 1e-10) -> EmbeddingModel:
    """W = Krylov closure of the coordinate jets under the pullback."""
    d = default_degree(spec) if d is None else int(d)
    if d < 1:
        raise InvalidInputError("degree must be >= 1")
    T = build(spec, d)
    seeds = [Jet.coordinate(T.basis, i) for i in range(spec.n)]
    span = f_finite_span(T, seeds, rank_tol, labels=[f"seed:z{i + 1}" for i in range(spec.n)])
    if span.dim < spec.n:
        raise IllConditionedError("coordinate jets are dependent; internal error")
    return EmbeddingModel("closure", spec.n, d, T.basis, span.basis, span.restricted,
                          span.provenance, _jet_residual(T.matrix, span.basis, span.restricted))


def near_resonances(spec: ContractionSpec, d: int, prune_threshold: float):
    """Coordinate resonances that are close but not exact."""
    res = detect_resonances(spec.linear_part, d, tol_res=prune_threshold)
    return [r for r in res if r.target_index is not None and r.within_tol and not r.is_exact]


def linearize_root_prune(spec: ContractionSpec, d: Optional[int] = None,
                         prune_threshold: float = 1e-5, tol_cluster: float = 1e-8,
                         rank_tol: float = 1e-10) -> EmbeddingModel:
    """Minimal W generated by one root function per coordinate direction.

    For each Schur coordinate ``i`` the root function ``psi_i`` has linear part
    ``z_i`` and no component on the other monomials of its eigenvalue
    cluster. W is the pullback closure of ``{psi_i}``: exactly resonant
    monomials that ``psi_i`` couples to enter as extra generators.
    """
    d = default_degree(spec) if d is None else int(d)
    if d < 1:
        raise InvalidInputError("degree must be >= 1")
    bad = near_resonances(spec, d, prune_threshold)
    if bad:
        r = bad[0]
        raise IllConditionedError(
            f"ill-conditioned linearization; use closure strategy (near resonance "
            f"{r.source} -> {r.target}, relative defect {r.relative_defect:.3g})")
    T = build(spec, d)
    n = spec.n
    dec = root_decomposition(T, tol_cluster=tol_cluster, only_indices=range(n))
    psi = np.zeros((len(T.basis), n), dtype=complex)
    for cl in dec.clusters:
        for pos, j in enumerate(cl.indices):
            if j < n:
                psi[:, j] = cl.vectors[:, pos]
    span = f_finite_span(T, list(psi.T), rank_tol,
                         labels=[f"root:psi{i + 1}" for i in range(n)])
    extra = span.basis[:, n:]
    Bm = np.column_stack([psi, extra])
    A, *_ = np.linalg.lstsq(Bm, T.matrix @ Bm, rcond=None)
    prov = [f"root:psi{i + 1}" for i in range(n)] + span.provenance[n:]
    return EmbeddingModel("root-prune", n, d, T.basis, Bm, A, prov,
                          _jet_residual(T.matrix, Bm, A))


def linearize(spec: ContractionSpec, strategy: str = "closure", d: Optional[int] = None,
              **kw) -> EmbeddingModel:
    """Dispatch on ``strategy``; ``auto`` tries root-prune and falls back to closure."""
    if strategy == "auto":
        try:
            return linearize_root_prune(spec, d, **kw)
        except IllConditionedError:
            return linearize_closure(spec, d, **{k: v for k, v in kw.items() if k == "rank_tol"})
    if strategy == "closure":
        return linearize_closure(spec, d, **{k: v for k, v in kw.items() if k == "rank_tol"})
    if strategy in ("root-prune", "root_prune"):
        return linearize_root_prune(spec, d, **kw)
    raise InvalidInputError(f"unknown strategy {strategy!r}")


@dataclass
class SemiconjugacyReport:
    radii: list[float]
    residuals: list[float]
    exponent: float
    fit_residual: float
    scale: float
    tolerance: float
    required_exponent: float
    samples: int
    passed: bool


@dataclass
class InjectivityReport:
    pairs: int
    annulus: tuple[float, float]
    min_ratio: float
    min_image_distance: float
    min_source_distance: float
    collisions: int
    min_singular_value: float
    singular_tol: float
    passed: bool


@dataclass
class VerificationReport:
    semiconjugacy: SemiconjugacyReport
    injectivity: Optional[InjectivityReport]
    eigenvalues: np.ndarray
    spectrum_inside_disk: bool

    @property
    def passed(self) -> bool:
        inj = self.injectivity is None or self.injectivity.passed
        return self.semiconjugacy.passed and inj and self.spectrum_inside_disk


def semiconjugacy_residuals(model: EmbeddingModel, spec: ContractionSpec, z) -> np.ndarray:
    """``|Psi(gamma z) - A_W.T Psi(z)|`` per point, through the full polynomial gamma."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    diff = model.psi(spec(z)) - model.psi(z) @ model.A_W
    return np.linalg.norm(diff, axis=1)


def verify_semiconjugacy(model: EmbeddingModel, spec: ContractionSpec,
                         radii: Sequence[float] = (0.1, 0.05, 0.025), samples: int = 256,
                         seed: int = 0, rtol: float = 1e-12) -> SemiconjugacyReport:
    radii = [float(r) for r in radii]
    res, scale = [], 1.0
    for k, r in enumerate(radii):
        z = sphere_points(spec.n, samples, r, seed + k)
        res.append(float(semiconjugacy_residuals(model, spec, z).max()))
        scale = max(scale, float(np.abs(model.psi(z)).max()))
    tol = rtol * scale
    exponent, fit = float("nan"), float("nan")
    pos = [(r, e) for r, e in zip(radii, res) if e > 0]
    if len(pos) >= 2 and len({r for r, _ in pos}) >= 2:
        lr, le = np.log([p[0] for p in pos]), np.log([p[1] for p in pos])
        coef, sq, *_ = np.polyfit(lr, le, 1, full=True)
        exponent = float(coef[0])
        fit = float(np.sqrt(sq[0] / len(pos))) if len(sq) else 0.0
    need = model.d + 0.5
    ok = max(res) <= tol or (np.isfinite(exponent) and exponent >= need)
    return SemiconjugacyReport(radii, res, exponent, fit, scale, tol, need, samples, bool(ok))


def verify_injectivity(model: EmbeddingModel, spec: ContractionSpec,
                       annulus: tuple[float, float] = (0.1, 1.0), pairs: int = 10_000,
                       seed: int = 0, collision_tol: float = 1e-9, separation: float = 1e-3,
                       singular_tol: float = 1e-8) -> InjectivityReport:
    """Sampled injectivity and immersion checks on the fundamental annulus."""
    pts = annulus_points(spec.n, 2 * pairs, annulus[0], annulus[1], seed)
    a, b = pts[:pairs], pts[pairs:]
    src = np.linalg.norm(a - b, axis=1)
    img = np.linalg.norm(model.psi(a) - model.psi(b), axis=1)
    collisions = int(np.sum((img < collision_tol) & (src > separation)))
    J = model.psi_jacobian(pts[: min(len(pts), 2048)])
    smin = float(np.linalg.svd(J, compute_uv=False)[:, -1].min())
    ratio = img / src
    return InjectivityReport(pairs, tuple(annulus), float(ratio.min()), float(img.min()),
                             float(src.min()), collisions, smin, singular_tol,
                             bool(collisions == 0 and smin >= singular_tol))


def verify(model: EmbeddingModel, spec: ContractionSpec,
           radii: Sequence[float] = (0.1, 0.05, 0.025), samples: int = 256,
           annulus: Optional[tuple[float, float]] = (0.1, 1.0), pairs: int = 10_000,
           seed: int = 0) -> VerificationReport:
    semi = verify_semiconjugacy(model, spec, radii, samples, seed)
    inj = None if annulus is None else verify_injectivity(model, spec, annulus, pairs, seed)
    eig = np.linalg.eigvals(model.A_W)
    return VerificationReport(semi, inj, eig, bool(np.abs(eig).max() < 1.0))


def export_linear_hopf(model: EmbeddingModel, **kw) -> LinearHopfModel:
    return LinearHopfModel.from_matrix(model.point_map, **kw)
