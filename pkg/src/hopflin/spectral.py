"""Root-space structure of the jet-level pullback operator.

After a unitary change of variables putting the linear part ``A`` in upper
triangular (complex Schur) form, the pullback matrix is lower triangular in
the graded basis and its diagonal is the list of monomial eigenvalues
``lambda^alpha``. Root spaces are then obtained by forward substitution
instead of a dense eigensolver.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import IllConditionedError, InvalidInputError
from .jets import Jet, JetMap, Multidegree, monomial_basis, power_table
from .koopman import KoopmanMatrix

EXACT_RTOL = 1e-12


def schur_coordinates(A) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(Q, R)`` with ``A = Q R Q^H`` and ``R`` upper triangular.

    Already upper-triangular input is returned untouched (``Q = I``) so that
    the original coordinates, and their eigenvalue order, are kept.
    """
    A = np.asarray(A, dtype=complex)
    if not np.any(np.tril(A, -1)):
        return np.eye(A.shape[0], dtype=complex), A.copy()
    R, Q = sla.schur(A, output="complex")
    return Q, R


def monomial_eigenvalues(A, d: int) -> list[tuple[Multidegree, complex]]:
    """All products ``lambda^alpha`` for ``1 <= |alpha| <= d``, in basis order.

    ``lambda`` is read off the Schur diagonal of ``A``, so ``alpha`` refers to
    Schur coordinates (the original ones when ``A`` is upper triangular).
    """
    _, R = schur_coordinates(A)
    lam = np.diag(R)
    basis = monomial_basis(len(lam), d)
    vals = np.prod(lam[None, :] ** basis.exponent_array, axis=1)
    return list(zip(basis.exponents, (complex(v) for v in vals)))


@dataclass
class Resonance:
    source: Multidegree
    target: Multidegree
    defect: float
    relative_defect: float
    classification: str
    target_index: Optional[int] = None
    within_tol: bool = False

    @property
    def is_exact(self) -> bool:
        return self.classification == "exact"


def detect_resonances(A, d: int, tol_res: float = 1e-8) -> list[Resonance]:
    """Coincidences ``lambda^alpha = lambda^beta`` (alpha != beta, |.| <= d).

    A pair is ``exact`` when its relative defect is at floating-point level
    (``<= min(tol_res, 1e-12)``) and ``near`` when it is within ``1e3 * tol_res``.
    ``target`` is the lower-degree member of the pair; ``target_index`` is
    set when it is a coordinate eigenvalue.
    """
    pairs = monomial_eigenvalues(A, d)
    exps = [p[0] for p in pairs]
    vals = np.array([p[1] for p in pairs])
    mods = np.abs(vals)
    window = 1e3 * tol_res
    exact_tol = min(tol_res, EXACT_RTOL)
    order = np.argsort(mods, kind="stable")
    out = []
    for pos, i in enumerate(order):
        for j in order[pos + 1:]:
            if mods[j] > mods[i] * (1 + window) + 1e-300:
                break
            scale = max(mods[i], mods[j])
            defect = abs(vals[i] - vals[j])
            rel = defect / scale if scale else 0.0
            if rel > window:
                continue
            a, b = (i, j) if (sum(exps[i]), i) > (sum(exps[j]), j) else (j, i)
            target = exps[b]
            out.append(Resonance(
                source=exps[a], target=target, defect=float(defect),
                relative_defect=float(rel),
                classification="exact" if rel <= exact_tol else "near",
                target_index=target.index(1) if sum(target) == 1 else None,
                within_tol=bool(rel <= tol_res)))
    out.sort(key=lambda r: (sum(r.target), r.target[::-1], sum(r.source), r.source[::-1]))
    return out


def cluster_values(values: np.ndarray, tol: float) -> np.ndarray:
    """Label the connected components of the relative epsilon-graph on ``values``.

    Two values are joined when ``|a - b| <= tol * max(|a|, |b|)``; labels are
    numbered by first occurrence so the result is order-deterministic.
    """
    values = np.asarray(values)
    n = len(values)
    mods = np.abs(values)
    rows, cols = [], []
    order = np.argsort(mods, kind="stable")
    for pos, i in enumerate(order):
        for j in order[pos + 1:]:
            if mods[j] > mods[i] * (1 + tol) + 1e-300:
                break
            if abs(values[i] - values[j]) <= tol * max(mods[i], mods[j]):
                rows.append(i)
                cols.append(j)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    remap: dict[int, int] = {}
    return np.array([remap.setdefault(l, len(remap)) for l in labels])


@dataclass
class Triangularization:
    """``T = C Tt C^{-1}`` with ``Tt`` lower triangular in the graded basis."""

    Tt: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray


def triangularize(T: KoopmanMatrix) -> Triangularization:
    g = T.jetmap
    basis = g.basis
    Q, R = schur_coordinates(g.linear_part())
    if np.allclose(Q, np.eye(basis.n), rtol=0, atol=0):
        return Triangularization(T.matrix, np.eye(len(basis), dtype=complex), Q, R)
    Qh = Q.conj().T
    # gamma~ = L o gamma o L^{-1} with L(z) = Q^H z
    inner = power_table(JetMap.linear(basis, Q))
    G = (inner @ g.coeff_matrix().T).T
    G = Qh @ G
    G[:, :basis.n] = R
    gt = JetMap(tuple(Jet(basis, row) for row in G))
    Tt = np.tril(power_table(gt))
    C = power_table(JetMap.linear(basis, Qh))
    return Triangularization(Tt, C, Q, R)


@dataclass
class RootVector:
    eigenvalue: complex
    chain_length: int
    coeffs: np.ndarray
    residual: float


@dataclass
class Cluster:
    value: complex
    indices: np.ndarray
    exponents: list[Multidegree]
    vectors: np.ndarray
    restricted: np.ndarray
    root_vectors: list[RootVector]
    min_singular: float

    @property
    def multiplicity(self) -> int:
        return len(self.indices)

    def jordan_chains(self, tol: float = 1e-9) -> list[np.ndarray]:
        """Jordan chains as column stacks ``[eigenvector, ..., generator]``."""
        chains = []
        for chain in jordan_chains(self.restricted - self.value * np.eye(self.multiplicity), tol):
            chains.append(self.vectors @ chain)
        return chains


@dataclass
class RootDecomposition:
    clusters: list[Cluster]
    schur_Q: np.ndarray
    schur_R: np.ndarray
    size: int
    invariance_residual: float = 0.0

    @property
    def total_multiplicity(self) -> int:
        return sum(c.multiplicity for c in self.clusters)

    def cluster_for(self, value: complex, tol: float = 1e-8) -> Cluster:
        for c in self.clusters:
            if abs(c.value - value) <= tol * max(abs(value), abs(c.value)):
                return c
        raise KeyError(value)


def jordan_chains(N: np.ndarray, tol: float = 1e-9) -> list[np.ndarray]:
    """Jordan chains of a (numerically) nilpotent matrix ``N``.

    Generators are picked top-down: at level j, directions of ``ker N^j``
    outside ``ker N^{j-1}`` plus the level-j members of longer chains.
    """
    k = N.shape[0]
    scale = max(1.0, np.linalg.norm(N, 2))

    def kernel(M):
        if M.size == 0:
            return np.eye(k, dtype=complex)
        u, s, vh = np.linalg.svd(M)
        rank = int(np.sum(s > tol * scale))
        return vh[rank:].conj().T

    powers = [np.eye(k, dtype=complex)]
    for _ in range(k):
        powers.append(N @ powers[-1])
    kers = [np.zeros((k, 0), dtype=complex)] + [kernel(powers[j]) for j in range(1, k + 1)]
    top = next((j for j in range(1, k + 1) if kers[j].shape[1] == k), k)

    chains: list[tuple[int, np.ndarray]] = []
    for level in range(top, 0, -1):
        blocks = [kers[level - 1]]
        for L, g in chains:
            blocks.append((powers[L - level] @ g)[:, None])
        S = np.concatenate(blocks, axis=1)
        if S.shape[1]:
            u, s, _ = np.linalg.svd(S, full_matrices=True)
            r = int(np.sum(s > tol))
            perp = u[:, r:]
        else:
            perp = np.eye(k, dtype=complex)
        cand = perp.conj().T @ kers[level]
        if cand.size == 0:
            continue
        u, s, _ = np.linalg.svd(cand, full_matrices=False)
        r = int(np.sum(s > tol))
        for col in range(r):
            g = perp @ u[:, col]
            g = kers[level] @ np.linalg.lstsq(kers[level], g, rcond=None)[0]
            chains.append((level, g / np.linalg.norm(g)))
    out = []
    for L, g in chains:
        out.append(np.stack([powers[L - 1 - i] @ g for i in range(L)], axis=1))
    return out


def _cluster_staircase(Tt: np.ndarray, J: np.ndarray, tol_indep: float):
    """Root-space basis ``X`` (``X[J] = I``) and restricted matrix ``M``."""
    size = Tt.shape[0]
    m = len(J)
    p = int(J[0])
    X = np.zeros((size, m), dtype=complex)
    if m == 1:
        mu = Tt[p, p]
        X[p, 0] = 1.0
        if p + 1 < size:
            D = Tt[p + 1:, p + 1:] - mu * np.eye(size - p - 1)
            gaps = np.abs(np.diag(D))
            if np.any(gaps <= tol_indep * np.maximum(np.abs(np.diag(Tt)[p + 1:]), abs(mu))):
                raise IllConditionedError(
                    f"eigenvalue {mu:.6g} is within {tol_indep:g} of another diagonal value "
                    "outside its cluster")
            X[p + 1:, 0] = sla.solve_triangular(D, -Tt[p + 1:, p], lower=True)
        return X, np.array([[mu]])

    pos = {int(k): a for a, k in enumerate(J)}
    M = np.zeros((m, m), dtype=complex)
    act = 0
    for k in range(p, size):
        rhs = Tt[k, p:k] @ X[p:k, :]
        a = pos.get(k)
        if a is not None:
            X[k, a] = 1.0
            M[a, :] = rhs
            M[a, a] += Tt[k, k]
            act = a + 1
            continue
        D = M[:act, :act] - Tt[k, k] * np.eye(act)
        gaps = np.abs(np.diag(D))
        if np.any(gaps <= tol_indep * max(abs(Tt[k, k]), np.abs(np.diag(M)[:act]).max())):
            raise IllConditionedError(
                f"diagonal value {Tt[k, k]:.6g} nearly collides with a cluster "
                f"(gap {gaps.min():.3g}); root space is ill-conditioned")
        X[k, :act] = sla.solve_triangular(D.T, rhs[:act], lower=False)
    return X, M


def root_decomposition(T: KoopmanMatrix, tol_cluster: float = 1e-8, tol_root: float = 1e-9,
                       tol_indep: float = 1e-10,
                       only_indices: Optional[Sequence[int]] = None) -> RootDecomposition:
    """Cluster the monomial eigenvalues and compute a basis of each root space.

    ``only_indices`` restricts the work to clusters containing the given
    (Schur-coordinate) basis positions.
    """
    tri = triangularize(T)
    Tt, C = tri.Tt, tri.C
    diag = np.diag(Tt)
    labels = cluster_values(diag, tol_cluster)
    wanted = None if only_indices is None else {labels[i] for i in only_indices}
    basis = T.basis
    Tm = T.matrix
    clusters = []
    worst = 0.0
    for lab in range(labels.max() + 1):
        if wanted is not None and lab not in wanted:
            continue
        J = np.flatnonzero(labels == lab)
        X, M = _cluster_staircase(Tt, J, tol_indep)
        V = C @ X
        mu = complex(np.mean(diag[J]))
        colnorms = np.linalg.norm(V, axis=0)
        smin = float(np.linalg.svd(V / colnorms, compute_uv=False).min())
        if smin <= tol_indep:
            raise IllConditionedError(
                f"root vectors for eigenvalue {mu:.6g} are dependent "
                f"(min singular value {smin:.3g})")
        inv_res = np.linalg.norm(Tm @ V - V @ M) / max(1.0, np.linalg.norm(V))
        worst = max(worst, float(inv_res))
        Nm = M - mu * np.eye(len(J))
        thresh = tol_root * max(1.0, np.linalg.norm(M, 2))
        rvs = []
        for a in range(len(J)):
            e = np.zeros(len(J), dtype=complex)
            e[a] = 1.0
            length, w = len(J), e
            for s in range(1, len(J) + 1):
                w = Nm @ w
                if np.linalg.norm(w) <= thresh:
                    length = s
                    break
            v = V[:, a]
            r = v
            for _ in range(length):
                r = Tm @ r - mu * r
            rvs.append(RootVector(mu, length, v, float(np.linalg.norm(r) / np.linalg.norm(v))))
        clusters.append(Cluster(mu, J, [basis.exponents[j] for j in J], V, M, rvs, smin))
    return RootDecomposition(clusters, tri.Q, tri.R, len(basis), worst)


@dataclass
class FiniteSpan:
    """Smallest T-invariant subspace containing the seeds."""

    basis: np.ndarray
    restricted: np.ndarray
    provenance: list[str] = field(default_factory=list)
    residual: float = 0.0

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _as_vector(seed, size):
    if isinstance(seed, Jet):
        return np.array(seed.coeffs, dtype=complex)
    v = np.asarray(seed, dtype=complex).reshape(-1)
    if v.shape[0] != size:
        raise InvalidInputError(f"seed has length {v.shape[0]}, expected {size}")
    return v


def f_finite_span(T: KoopmanMatrix | np.ndarray, seeds: Sequence, rank_tol: float = 1e-10,
                  labels: Optional[Sequence[str]] = None) -> FiniteSpan:
    """Krylov closure of ``seeds`` under ``T`` with rank-revealing Gram-Schmidt.

    Seeds are processed first, then images ``T q`` breadth-first. A vector
    is kept when the part orthogonal to the current basis (two Gram-Schmidt
    passes) exceeds ``rank_tol`` times its norm. The returned basis is
    orthonormal and ``T B = B restricted`` up to the dropped components.
    """
    Tm = T.matrix if isinstance(T, KoopmanMatrix) else np.asarray(T, dtype=complex)
    size = Tm.shape[0]
    labels = list(labels) if labels is not None else [f"seed:{i}" for i in range(len(seeds))]
    queue = deque((_as_vector(s, size), lab) for s, lab in zip(seeds, labels))
    cols: list[np.ndarray] = []
    prov: list[str] = []
    Q = np.zeros((size, 0), dtype=complex)
    while queue and len(cols) < size:
        v, lab = queue.popleft()
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        w = v.copy()
        for _ in range(2):
            w -= Q @ (Q.conj().T @ w)
        nw = np.linalg.norm(w)
        if nw <= rank_tol * nv:
            continue
        q = w / nw
        cols.append(q)
        prov.append(lab)
        Q = np.column_stack(cols)
        queue.append((Tm @ q, f"T*basis[{len(cols) - 1}]"))
    Q = np.column_stack(cols) if cols else np.zeros((size, 0), dtype=complex)
    Ar = Q.conj().T @ Tm @ Q
    res = float(np.linalg.norm(Tm @ Q - Q @ Ar)) if cols else 0.0
    return FiniteSpan(Q, Ar, prov, res)
