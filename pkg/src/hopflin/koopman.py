"""Finite-section matrix of the pullback operator ``f -> f o gamma^k`` on jets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .contraction import ContractionSpec, iterate
from .errors import InvalidInputError
from .jets import JetMap, MonomialBasis, compose_map, power_table


@dataclass(frozen=True, eq=False)
class KoopmanMatrix:
    """Matrix ``T`` of the pullback by ``gamma^k`` on ``m / m^{d+1}``.

    Column alpha holds the coefficients of ``(gamma^k)^alpha``, so
    ``T @ f.coeffs`` are the coefficients of ``f o gamma^k``. Entries with
    ``deg(row) < deg(col)`` vanish identically.
    """

    basis: MonomialBasis
    matrix: np.ndarray
    jetmap: JetMap
    k: int = 1
    spec: Optional[ContractionSpec] = None

    @property
    def size(self) -> int:
        return len(self.basis)

    def __matmul__(self, other):
        return self.matrix @ other


def build(spec: ContractionSpec | JetMap, d: Optional[int] = None, k: int = 1) -> KoopmanMatrix:
    if isinstance(spec, JetMap):
        g, src = spec, None
    else:
        if d is None:
            raise InvalidInputError("degree d is required when building from a spec")
        g, src = spec.jet(d), spec
    gk = iterate(g, k)
    return KoopmanMatrix(g.basis, power_table(gk), gk, k, src)


def block_triangularity_defect(T: KoopmanMatrix) -> float:
    """Largest entry with ``deg(row) < deg(col)``; zero by construction."""
    tot = T.basis.totals
    mask = tot[:, None] < tot[None, :]
    return float(np.abs(T.matrix[mask]).max()) if mask.any() else 0.0


def contravariance_check(gamma: ContractionSpec | JetMap, delta: ContractionSpec | JetMap,
                         d: Optional[int] = None) -> float:
    """Relative size of ``T(gamma o delta) - T(delta) T(gamma)``.

    Pullback reverses composition order; the residual is zero up to
    floating-point accumulation.
    """
    g = gamma if isinstance(gamma, JetMap) else gamma.jet(d)
    h = delta if isinstance(delta, JetMap) else delta.jet(d)
    if g.basis is not h.basis:
        raise InvalidInputError("gamma and delta must share dimension and degree")
    lhs = power_table(compose_map(g, h))
    rhs = power_table(h) @ power_table(g)
    denom = np.linalg.norm(lhs)
    return float(np.linalg.norm(lhs - rhs) / denom) if denom else float(np.linalg.norm(rhs))


@dataclass
class CompactnessProbe:
    block_norms: np.ndarray
    rate: float
    fit_residual: float


def fischer_weights(basis) -> np.ndarray:
    """``sqrt(alpha! / |alpha|!)``: the unitarily invariant norm of ``z^alpha``."""
    return np.array([math.sqrt(math.prod(math.factorial(a) for a in e) / math.factorial(sum(e)))
                     for e in basis.exponents])


def compactness_probe(T: KoopmanMatrix, weighting: str = "fischer") -> CompactnessProbe:
    """Operator norms of ``T`` compressed to the span of degree >= m monomials.

    Coefficients are measured in the Fischer norm by default, so a unitary
    change of coordinates leaves every block norm unchanged; ``"none"`` uses
    raw monomial coefficients. The geometric rate is ``exp`` of the
    least-squares slope of ``log(norm_m)`` against ``m``.
    """
    if weighting == "fischer":
        w = fischer_weights(T.basis)
        M = T.matrix * w[:, None] / w[None, :]
    elif weighting == "none":
        M = T.matrix
    else:
        raise InvalidInputError(f"unknown weighting {weighting!r}")
    d = T.basis.d
    norms = []
    for m in range(1, d + 1):
        s = T.basis.tail_slice(m)
        norms.append(np.linalg.norm(M[s, s], 2))
    norms = np.array(norms)
    if d == 1 or np.any(norms <= 0):
        return CompactnessProbe(norms, float(norms[-1]) if d == 1 else float("nan"), 0.0)
    m = np.arange(1, d + 1)
    coef, res, *_ = np.polyfit(m, np.log(norms), 1, full=True)
    return CompactnessProbe(norms, float(np.exp(coef[0])),
                            float(np.sqrt(res[0] / d)) if len(res) else 0.0)
