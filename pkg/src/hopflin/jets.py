"""Truncated multivariate power series (d-jets) over the complex numbers.

A jet on ``MonomialBasis(n, d)`` stores one complex coefficient per monomial
``z^alpha`` with ``1 <= |alpha| <= d`` plus an optional constant term.
Monomials are ordered graded-lexicographically: every degree-m monomial
precedes every degree-(m+1) one, and inside a degree the exponent tuples
are sorted in decreasing lexicographic order, so for n=2, d=2 the order is
``z1, z2, z1^2, z1 z2, z2^2``.

Composition ``f o g`` is exact on jets as long as ``g`` has no constant
term: substituting ``g`` into a monomial of degree m only produces terms of
degree >= m.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import BasisMismatchError, InvalidInputError, SingularLinearPartError

Multidegree = tuple[int, ...]


def _degree_block(n: int, m: int) -> list[Multidegree]:
    out = []
    for combo in itertools.combinations_with_replacement(range(n), m):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return sorted(out, reverse=True)


class MonomialBasis:
    """All monomials ``z^alpha`` with ``1 <= |alpha| <= d`` in ``n`` variables.

    Use :func:`monomial_basis` to obtain shared, cached instances; the
    multiplication tables are built lazily and reused by every jet on the
    basis.
    """

    def __init__(self, n: int, d: int):
        if n < 1 or d < 1:
            raise InvalidInputError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        self.n = int(n)
        self.d = int(d)
        exps: list[Multidegree] = []
        starts = []
        for m in range(1, d + 1):
            starts.append(len(exps))
            exps.extend(_degree_block(n, m))
        starts.append(len(exps))
        self.exponents: tuple[Multidegree, ...] = tuple(exps)
        self.index: dict[Multidegree, int] = {e: i for i, e in enumerate(exps)}
        self._starts = tuple(starts)
        self.exponent_array = np.array(exps, dtype=np.int64).reshape(len(exps), n)
        self.totals = self.exponent_array.sum(axis=1)
        assert len(exps) == comb(n + d, d) - 1

        # z^alpha = z^parent * z_var, with var the first nonzero exponent
        parent = np.full(len(exps), -1, dtype=np.int64)
        var = np.zeros(len(exps), dtype=np.int64)
        for i, e in enumerate(exps):
            j = next(k for k, a in enumerate(e) if a)
            var[i] = j
            if sum(e) > 1:
                p = list(e)
                p[j] -= 1
                parent[i] = self.index[tuple(p)]
        self.parent = parent
        self.var = var

    def __len__(self) -> int:
        return len(self.exponents)

    def __repr__(self) -> str:
        return f"MonomialBasis(n={self.n}, d={self.d}, size={len(self)})"

    def degree_slice(self, m: int) -> slice:
        """Positions of the degree-``m`` monomials."""
        return slice(self._starts[m - 1], self._starts[m])

    def tail_slice(self, m: int) -> slice:
        """Positions of all monomials of degree ``>= m``."""
        return slice(self._starts[m - 1], len(self))

    @cached_property
    def mul_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Index triples ``(i, j, k)`` with ``z^i z^j = z^k`` and ``|k| <= d``."""
        I, J, K = [], [], []
        idx = self.index
        for a in range(1, self.d):
            sa = self.degree_slice(a)
            for b in range(1, self.d - a + 1):
                sb = self.degree_slice(b)
                for i in range(sa.start, sa.stop):
                    ei = self.exponents[i]
                    for j in range(sb.start, sb.stop):
                        ej = self.exponents[j]
                        I.append(i)
                        J.append(j)
                        K.append(idx[tuple(x + y for x, y in zip(ei, ej))])
        return (np.array(I, dtype=np.int64), np.array(J, dtype=np.int64),
                np.array(K, dtype=np.int64))

    @cached_property
    def derivative_tables(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Per variable j: (source, target, factor) with d/dz_j z^src = factor z^tgt.

        ``target == -1`` denotes the constant monomial.
        """
        out = []
        for j in range(self.n):
            src, tgt, fac = [], [], []
            for i, e in enumerate(self.exponents):
                if e[j] == 0:
                    continue
                lower = list(e)
                lower[j] -= 1
                src.append(i)
                tgt.append(self.index[tuple(lower)] if sum(lower) else -1)
                fac.append(e[j])
            out.append((np.array(src, dtype=np.int64), np.array(tgt, dtype=np.int64),
                        np.array(fac, dtype=float)))
        return out


@lru_cache(maxsize=64)
def monomial_basis(n: int, d: int) -> MonomialBasis:
    return MonomialBasis(n, d)


def _mul_coeffs(basis: MonomialBasis, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two jets without constant terms, truncated at degree d."""
    I, J, K = basis.mul_table
    if len(K) == 0:
        return np.zeros(len(basis), dtype=complex)
    prod = a[I] * b[J]
    size = len(basis)
    return (np.bincount(K, weights=prod.real, minlength=size)
            + 1j * np.bincount(K, weights=prod.imag, minlength=size))


@dataclass(frozen=True, eq=False)
class Jet:
    """A d-jet: coefficient vector on ``basis`` plus a constant term."""

    basis: MonomialBasis
    coeffs: np.ndarray
    const: complex = 0j

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.shape[0] != len(self.basis):
            raise InvalidInputError(
                f"coefficient vector has length {c.shape[0]}, basis size is {len(self.basis)}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "const", complex(self.const))

    @classmethod
    def zero(cls, basis: MonomialBasis) -> "Jet":
        return cls(basis, np.zeros(len(basis), dtype=complex))

    @classmethod
    def constant(cls, basis: MonomialBasis, value: complex) -> "Jet":
        return cls(basis, np.zeros(len(basis), dtype=complex), value)

    @classmethod
    def coordinate(cls, basis: MonomialBasis, i: int) -> "Jet":
        e = [0] * basis.n
        e[i] = 1
        return cls.monomial(basis, e)

    @classmethod
    def monomial(cls, basis: MonomialBasis, exponents: Sequence[int],
                 coeff: complex = 1.0) -> "Jet":
        return cls.from_terms(basis, [(exponents, coeff)])

    @classmethod
    def from_terms(cls, basis: MonomialBasis,
                   terms: Iterable[tuple[Sequence[int], complex]]) -> "Jet":
        """Build a jet from ``(exponents, coeff)`` pairs; degree > d is dropped."""
        c = np.zeros(len(basis), dtype=complex)
        const = 0j
        for exps, coeff in terms:
            e = tuple(int(x) for x in exps)
            if len(e) != basis.n or min(e) < 0:
                raise InvalidInputError(f"bad exponent vector {list(exps)} for n={basis.n}")
            total = sum(e)
            if total == 0:
                const += coeff
            elif total <= basis.d:
                c[basis.index[e]] += coeff
        return cls(basis, c, const)

    def terms(self, tol: float = 0.0) -> list[tuple[Multidegree, complex]]:
        """Nonzero terms as ``(exponents, coeff)``, constant first if present."""
        out = []
        if abs(self.const) > tol:
            out.append(((0,) * self.basis.n, self.const))
        for e, c in zip(self.basis.exponents, self.coeffs):
            if abs(c) > tol:
                out.append((e, complex(c)))
        return out

    def degree_part(self, m: int) -> np.ndarray:
        return self.coeffs[self.basis.degree_slice(m)]

    def order(self) -> int:
        """Lowest degree carrying a nonzero coefficient (d+1 for the zero jet)."""
        if self.const != 0:
            return 0
        nz = np.flatnonzero(self.coeffs)
        return int(self.basis.totals[nz[0]]) if len(nz) else self.basis.d + 1

    def _check(self, other: "Jet"):
        if other.basis is not self.basis:
            raise BasisMismatchError(f"{self.basis!r} vs {other.basis!r}")

    def __add__(self, other):
        if isinstance(other, Jet):
            return add(self, other)
        return Jet(self.basis, self.coeffs, self.const + other)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.basis, -self.coeffs, -self.const)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return mul(self, other)
        return Jet(self.basis, self.coeffs * other, self.const * other)

    __rmul__ = __mul__

    def allclose(self, other: "Jet", atol: float = 1e-12) -> bool:
        self._check(other)
        return (np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol)
                and abs(self.const - other.const) <= atol)

    def __call__(self, z):
        return evaluate(self, z)


def add(a: Jet, b: Jet) -> Jet:
    a._check(b)
    return Jet(a.basis, a.coeffs + b.coeffs, a.const + b.const)


def mul(a: Jet, b: Jet) -> Jet:
    a._check(b)
    c = _mul_coeffs(a.basis, a.coeffs, b.coeffs)
    c += a.const * b.coeffs + b.const * a.coeffs
    return Jet(a.basis, c, a.const * b.const)


@dataclass(frozen=True, eq=False)
class JetMap:
    """An n-tuple of jets without constant terms: a map germ fixing 0."""

    components: tuple[Jet, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InvalidInputError("a JetMap needs at least one component")
        basis = comps[0].basis
        for c in comps:
            c._check(comps[0])
            if c.const != 0:
                raise InvalidInputError("JetMap components must vanish at the origin")
        if len(comps) != basis.n:
            raise InvalidInputError(
                f"JetMap on C^{basis.n} needs {basis.n} components, got {len(comps)}")
        object.__setattr__(self, "components", comps)

    @property
    def basis(self) -> MonomialBasis:
        return self.components[0].basis

    @property
    def n(self) -> int:
        return self.basis.n

    @classmethod
    def identity(cls, basis: MonomialBasis) -> "JetMap":
        return cls(tuple(Jet.coordinate(basis, i) for i in range(basis.n)))

    @classmethod
    def linear(cls, basis: MonomialBasis, A) -> "JetMap":
        """The map ``z -> A z``."""
        A = np.asarray(A, dtype=complex)
        n = basis.n
        comps = []
        for i in range(n):
            c = np.zeros(len(basis), dtype=complex)
            c[:n] = A[i]
            comps.append(Jet(basis, c))
        return cls(tuple(comps))

    @classmethod
    def from_terms(cls, basis: MonomialBasis, components) -> "JetMap":
        return cls(tuple(Jet.from_terms(basis, t) for t in components))

    def linear_part(self) -> np.ndarray:
        """Matrix ``A`` with ``A[i, j]`` the coefficient of ``z_j`` in component i."""
        n = self.n
        return np.array([c.coeffs[:n] for c in self.components])

    def coeff_matrix(self) -> np.ndarray:
        return np.array([c.coeffs for c in self.components])

    def __getitem__(self, i) -> Jet:
        return self.components[i]

    def __len__(self):
        return len(self.components)

    def allclose(self, other: "JetMap", atol: float = 1e-12) -> bool:
        return all(a.allclose(b, atol) for a, b in zip(self.components, other.components))

    def __call__(self, z):
        return evaluate(self, z)


def power_table(g: JetMap) -> np.ndarray:
    """Matrix whose column alpha is the coefficient vector of ``g^alpha``.

    This is exactly the matrix of ``f -> f o g`` on the maximal ideal.
    Columns are filled in basis order, each one a single truncated product
    of an earlier column with a component of ``g``.
    """
    basis = g.basis
    size = len(basis)
    P = np.zeros((size, size), dtype=complex)
    G = g.coeff_matrix()
    for k in range(size):
        j = basis.var[k]
        p = basis.parent[k]
        if p < 0:
            P[:, k] = G[j]
        else:
            P[:, k] = _mul_coeffs(basis, P[:, p], G[j])
    return P


def compose(f: Jet, g: JetMap) -> Jet:
    """The d-jet of ``f o g``."""
    f._check(g.components[0])
    return Jet(f.basis, power_table(g) @ f.coeffs, f.const)


def compose_map(g: JetMap, h: JetMap) -> JetMap:
    """The jet of ``g o h`` (apply ``h`` first)."""
    g.components[0]._check(h.components[0])
    P = power_table(h)
    return JetMap(tuple(Jet(c.basis, P @ c.coeffs) for c in g.components))


def inverse_map(g: JetMap, cond_limit: float = 1e12) -> JetMap:
    """Compositional inverse of ``g`` modulo degree > d.

    Writing ``g = A z + N(z)``, the inverse satisfies ``h = A^{-1}(z - N o h)``.
    The degree-m part of ``N o h`` only involves parts of ``h`` of degree
    < m, so d - 1 fixed-point sweeps fix every degree.
    """
    basis = g.basis
    A = g.linear_part()
    if not np.all(np.isfinite(A)) or np.linalg.cond(A) > cond_limit:
        raise SingularLinearPartError("linear part is singular; no local inverse")
    Ainv = np.linalg.inv(A)
    n = basis.n
    G = g.coeff_matrix()
    Nl = G.copy()
    Nl[:, :n] = 0
    ident = np.zeros((n, len(basis)), dtype=complex)
    ident[:, :n] = np.eye(n)

    H = Ainv @ ident
    for _ in range(basis.d - 1):
        h = JetMap(tuple(Jet(basis, row) for row in H))
        P = power_table(h)
        NH = (P @ Nl.T).T
        H = Ainv @ (ident - NH)
    return JetMap(tuple(Jet(basis, row) for row in H))


def monomial_values(basis: MonomialBasis, z) -> np.ndarray:
    """Values of every basis monomial at the points ``z`` (shape (S, n))."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    S = z.shape[0]
    mon = np.empty((S, len(basis)), dtype=complex)
    for k in range(len(basis)):
        p = basis.parent[k]
        zj = z[:, basis.var[k]]
        mon[:, k] = zj if p < 0 else mon[:, p] * zj
    return mon


def evaluate(f, z):
    """Evaluate a Jet or JetMap at one point (shape (n,)) or many (shape (S, n)).

    Monomials are generated degree by degree from their graded parents,
    so each point costs one multiplication per basis monomial.
    """
    arr = np.asarray(z, dtype=complex)
    single = arr.ndim <= 1
    basis = f.basis
    if single:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != basis.n:
        raise InvalidInputError(f"points must have {basis.n} coordinates")
    mon = monomial_values(basis, arr)
    if isinstance(f, Jet):
        out = mon @ f.coeffs + f.const
        return complex(out[0]) if single else out
    out = mon @ f.coeff_matrix().T
    return out[0] if single else out


def jacobian(f: JetMap | Sequence[Jet], z) -> np.ndarray:
    """Holomorphic Jacobian ``d f_i / d z_j`` at points ``z``: shape (S, len(f), n)."""
    comps = f.components if isinstance(f, JetMap) else tuple(f)
    basis = comps[0].basis
    C = np.array([c.coeffs for c in comps])
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    mon = monomial_values(basis, z)
    mon1 = np.concatenate([mon, np.ones((z.shape[0], 1), dtype=complex)], axis=1)
    out = np.zeros((z.shape[0], len(comps), basis.n), dtype=complex)
    for j, (src, tgt, fac) in enumerate(basis.derivative_tables):
        # target -1 picks the trailing column of ones
        D = mon1[:, tgt] * fac
        out[:, :, j] = D @ C[:, src].T
    return out
