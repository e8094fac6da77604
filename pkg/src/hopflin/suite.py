"""Reference contractions used by the tests, the acceptance run and the CLI."""

from __future__ import annotations

import numpy as np

from .contraction import ContractionSpec
from .jets import monomial_basis


def halving(n: int = 1) -> ContractionSpec:
    return ContractionSpec.linear(0.5 * np.eye(n), name=f"halving-{n}")


def kodaira(lam: float = 0.5, m: int = 2, t: float = 1.0) -> ContractionSpec:
    """``(lam^m z1 + t z2^m, lam z2)``: resonant, not linearizable for ``t != 0``."""
    e1, e2 = (1, 0), (0, 1)
    comps = (((e1, lam**m), ((0, m), t)), ((e2, lam),))
    inv = (((e1, lam**-m), ((0, m), -t * lam ** (-2 * m))),
           ((e2, 1 / lam),))
    return ContractionSpec(2, comps, inverse=inv, name=f"kodaira(lam={lam}, m={m}, t={t})")


def quadratic(l1: float = 0.3, l2: float = 0.5) -> ContractionSpec:
    """``(l1 z1 + z2^2, l2 z2)``; non-resonant when ``l1 != l2^2``."""
    return ContractionSpec(2, ((((1, 0), l1), ((0, 2), 1.0)), (((0, 1), l2),)),
                           name=f"quadratic({l1}, {l2})")


def random_linear(rng: np.random.Generator, n: int, sigma_max: float = 0.8,
                  sigma_min: float = 0.2) -> np.ndarray:
    """Random complex matrix with eigenvalue moduli in ``[sigma_min, sigma_max]``."""
    mods = rng.uniform(sigma_min, sigma_max, n)
    mods[rng.integers(n)] = sigma_max
    lam = mods * np.exp(2j * np.pi * rng.uniform(size=n))
    P = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    P /= np.linalg.norm(P, axis=0)
    while np.linalg.cond(P) > 50:
        P = P + 0.5 * np.eye(n)
    return P @ np.diag(lam) @ np.linalg.inv(P)


def random_normal(rng: np.random.Generator, n: int, sigma_max: float = 0.8,
                  sigma_min: float = 0.2) -> np.ndarray:
    """Unitarily diagonalizable matrix with eigenvalue moduli in ``[sigma_min, sigma_max]``."""
    mods = rng.uniform(sigma_min, sigma_max, n)
    mods[rng.integers(n)] = sigma_max
    lam = mods * np.exp(2j * np.pi * rng.uniform(size=n))
    Q, R = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    return Q @ np.diag(lam) @ Q.conj().T


def random_polynomial(rng: np.random.Generator, A: np.ndarray, degree: int = 3,
                      scale: float = 0.1) -> ContractionSpec:
    """Linear part ``A`` plus random terms of degree 2..``degree`` of size ~``scale``."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    basis = monomial_basis(n, degree)
    comps = []
    for i in range(n):
        terms = [(e, A[i, e.index(1)]) for e in basis.exponents[:n] if A[i, e.index(1)] != 0]
        for e in basis.exponents[n:]:
            c = complex(rng.normal(), rng.normal()) * scale / np.sqrt(2)
            terms.append((e, c))
        comps.append(tuple(terms))
    return ContractionSpec(n, tuple(comps), name=f"random-poly(n={n}, deg={degree})")


def generic_cubic(seed: int = 7) -> ContractionSpec:
    """Fixed seeded cubic contraction of C^2 with spectral radius 0.6."""
    rng = np.random.default_rng(seed)
    A = np.array([[0.6, 0.15], [0.0, 0.45]]) * np.exp(0.3j)
    spec = random_polynomial(rng, A, 3, 0.2)
    return ContractionSpec(2, spec.components, name=f"generic-cubic(seed={seed})")


def examples() -> dict[str, ContractionSpec]:
    """The named reference suite."""
    rng = np.random.default_rng(11)
    out = {
        "halving-1": halving(1),
        "halving-3": halving(3),
        "linear-2": ContractionSpec.linear(random_linear(rng, 2, 0.7), name="linear-2"),
        "quadratic": quadratic(),
        "generic-cubic": generic_cubic(),
    }
    for lam in (0.4, 0.5, 0.7):
        for m in (2, 3):
            for t in (1.0, -2.0):
                s = kodaira(lam, m, t)
                out[s.name] = s
    return out
