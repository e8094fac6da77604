"""Polynomial holomorphic contractions of C^n centered at the origin."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError, NotAContractionError, SingularLinearPartError
from .jets import JetMap, compose_map, inverse_map, monomial_basis
from .sampling import sphere_points

Term = tuple[tuple[int, ...], complex]
Polynomial = tuple[Term, ...]


def _normalize_poly(poly, n: int) -> Polynomial:
    out = []
    for item in poly:
        exps, coeff = item
        e = tuple(int(x) for x in exps)
        if len(e) != n or min(e) < 0:
            raise InvalidInputError(f"exponent vector {list(exps)} invalid for dimension {n}")
        out.append((e, complex(coeff)))
    return tuple(out)


def poly_eval(poly: Polynomial, z: np.ndarray) -> np.ndarray:
    """Direct evaluation of a term list at points ``z`` of shape (S, n)."""
    out = np.zeros(z.shape[0], dtype=complex)
    for e, c in poly:
        term = np.full(z.shape[0], c, dtype=complex)
        for j, a in enumerate(e):
            if a:
                term = term * z[:, j] ** a
        out += term
    return out


@dataclass(frozen=True)
class ContractionSpec:
    """A polynomial self-map of C^n, optionally with a polynomial inverse.

    ``components[i]`` is a tuple of ``(exponents, coeff)`` terms.
    Structural checks (shape, exponent vectors) happen here; the analytic
    ones (vanishing at 0, invertible linear part, contraction) live in
    :func:`validate`.
    """

    n: int
    components: tuple[Polynomial, ...]
    inverse: Optional[tuple[Polynomial, ...]] = None
    name: str = ""

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InvalidInputError("dimension must be >= 1")
        if len(self.components) != n:
            raise InvalidInputError(f"expected {n} components, got {len(self.components)}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "components",
                           tuple(_normalize_poly(p, n) for p in self.components))
        if self.inverse is not None:
            if len(self.inverse) != n:
                raise InvalidInputError(f"inverse needs {n} components")
            object.__setattr__(self, "inverse",
                               tuple(_normalize_poly(p, n) for p in self.inverse))

    @property
    def degree(self) -> int:
        return max((sum(e) for p in self.components for e, c in p if c != 0), default=1)

    @property
    def linear_part(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=complex)
        for i, p in enumerate(self.components):
            for e, c in p:
                if sum(e) == 1:
                    A[i, e.index(1)] += c
        return A

    def constant_terms(self) -> np.ndarray:
        return np.array([sum(c for e, c in p if sum(e) == 0) for p in self.components])

    def __call__(self, z) -> np.ndarray:
        """Evaluate the full polynomial map (not a jet) at points ``(S, n)``."""
        arr = np.asarray(z, dtype=complex)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        out = np.stack([poly_eval(p, arr) for p in self.components], axis=1)
        return out[0] if single else out

    def evaluate_inverse(self, z) -> np.ndarray:
        if self.inverse is None:
            raise InvalidInputError("no inverse supplied")
        arr = np.atleast_2d(np.asarray(z, dtype=complex))
        return np.stack([poly_eval(p, arr) for p in self.inverse], axis=1)

    def jet(self, d: int) -> JetMap:
        return JetMap.from_terms(monomial_basis(self.n, d), self.components)

    def inverse_jet(self, d: int) -> JetMap:
        if self.inverse is None:
            raise InvalidInputError("no inverse supplied")
        return JetMap.from_terms(monomial_basis(self.n, d), self.inverse)

    @classmethod
    def linear(cls, A, name: str = "") -> "ContractionSpec":
        A = np.asarray(A, dtype=complex)
        n = A.shape[0]
        comps = []
        for i in range(n):
            terms = []
            for j in range(n):
                if A[i, j] != 0:
                    e = [0] * n
                    e[j] = 1
                    terms.append((tuple(e), A[i, j]))
            comps.append(tuple(terms))
        return cls(n, tuple(comps), name=name)


@dataclass
class ContractionDiagnostics:
    sigma_max: float
    sigma_min: float
    n_enter: int
    entry_steps: np.ndarray
    escape_count: int
    verdict: str
    r_K: float
    r_U: float
    samples: int
    n_max: int
    r_guard: float
    scope: str = field(default=(
        "contraction certified only for the sampled sphere |z| = r_K; "
        "global injectivity and proper discontinuity are assumed, not tested"))

    @property
    def is_contraction(self) -> bool:
        return self.verdict == "contraction"


def spectral_bounds(A: np.ndarray) -> tuple[float, float]:
    mods = np.abs(np.linalg.eigvals(A))
    return float(mods.max()), float(mods.min())


def validate(spec: ContractionSpec, r_K: float = 1.0, r_U: float = 0.1,
             samples: int = 1024, n_max: int = 200, r_guard: float = 1e3,
             seed: int = 0) -> ContractionDiagnostics:
    """Check that ``spec`` is a contraction centered at 0.

    Orbits of ``samples`` points on the sphere of radius ``r_K`` are followed
    under the full polynomial map. ``n_enter`` is the least N such that
    every sampled orbit stays inside the ball of radius ``r_U`` from step N
    on (up to ``n_max``). Raises on any failure.
    """
    if np.any(np.abs(spec.constant_terms()) > 0):
        raise InvalidInputError("components do not vanish at the origin")
    A = spec.linear_part
    if np.linalg.matrix_rank(A) < spec.n:
        raise SingularLinearPartError("linear part dγ_0 is singular")
    s_max, s_min = spectral_bounds(A)
    if s_max >= 1.0:
        raise NotAContractionError(
            f"not a contraction: spectral radius of the linear part is {s_max:.6g} >= 1")

    z = sphere_points(spec.n, samples, r_K, seed)
    entry = np.full(samples, -1, dtype=np.int64)
    last_outside = 0 if np.any(np.linalg.norm(z, axis=1) > r_U) else -1
    for step in range(1, n_max + 1):
        z = spec(z)
        norms = np.linalg.norm(z, axis=1)
        if not np.all(np.isfinite(norms)) or np.any(norms > r_guard):
            bad = int(np.sum(~np.isfinite(norms) | (norms > r_guard)))
            raise NotAContractionError(
                f"not globally contracting on test domain: {bad} sampled orbits left "
                f"the guard ball |z| <= {r_guard:g} at step {step}")
        inside = norms <= r_U
        newly = inside & (entry < 0)
        entry[newly] = step
        if not np.all(inside):
            last_outside = step
            entry[~inside] = -1
        if np.all(norms == 0):
            break
    if last_outside >= n_max:
        raise NotAContractionError(
            f"not globally contracting on test domain: orbits did not settle in "
            f"|z| <= {r_U:g} within {n_max} steps")
    return ContractionDiagnostics(
        sigma_max=s_max, sigma_min=s_min, n_enter=last_outside + 1,
        entry_steps=entry, escape_count=0, verdict="contraction",
        r_K=r_K, r_U=r_U, samples=samples, n_max=n_max, r_guard=r_guard)


def iterate(spec: ContractionSpec | JetMap, k: int, d: Optional[int] = None) -> JetMap:
    """The d-jet of the k-th iterate."""
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    g = spec if isinstance(spec, JetMap) else spec.jet(d)
    out = g
    for _ in range(k - 1):
        out = compose_map(g, out)
    return out


@dataclass
class InverseReport:
    passed: bool
    mode: str
    jet_residual: float
    point_residual: Optional[float]
    message: str


def check_inverse(spec: ContractionSpec, d: int = 4, samples: int = 256,
                  radius: float = 1.0, tol: float = 1e-10, seed: int = 0) -> InverseReport:
    """Verify invertibility: globally against a supplied inverse, else locally."""
    if spec.inverse is None:
        g = spec.jet(d)
        h = inverse_map(g)
        ident = JetMap.identity(g.basis)
        res = max(np.abs(compose_map(g, h).coeff_matrix() - ident.coeff_matrix()).max(),
                  np.abs(compose_map(h, g).coeff_matrix() - ident.coeff_matrix()).max())
        return InverseReport(bool(res < tol), "local", float(res), None,
                             "local inverse only; global invertibility assumed")

    inv_deg = max((sum(e) for p in spec.inverse for e, c in p if c != 0), default=1)
    D = max(1, spec.degree * inv_deg)
    g, h = spec.jet(D), spec.inverse_jet(D)
    ident = JetMap.identity(g.basis).coeff_matrix()
    jet_res = max(np.abs(compose_map(g, h).coeff_matrix() - ident).max(),
                  np.abs(compose_map(h, g).coeff_matrix() - ident).max())
    pts = np.concatenate([sphere_points(spec.n, samples, radius, seed),
                          sphere_points(spec.n, samples, 0.5 * radius, seed + 1)])
    pt_res = max(np.abs(spec(spec.evaluate_inverse(pts)) - pts).max(),
                 np.abs(spec.evaluate_inverse(spec(pts)) - pts).max())
    if jet_res >= tol or pt_res >= tol:
        raise InvalidInputError(
            f"supplied inverse fails composition check (jet residual {jet_res:.3g}, "
            f"point residual {pt_res:.3g})")
    return InverseReport(True, "global", float(jet_res), float(pt_res),
                         "supplied inverse verified")
