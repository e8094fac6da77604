"""Brute-force semiconjugacy residuals from serialized data.

Works on the plain JSON dictionaries produced by :mod:`hopflin.io` with
Python complex arithmetic only, so it shares no evaluation code with the
jet machinery it cross-checks.
"""

from __future__ import annotations

from typing import Iterable, Sequence


def _c(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)


def eval_terms(terms: Sequence[dict], z: Sequence[complex]) -> complex:
    total = 0j
    for t in terms:
        val = _c(t["coeff"])
        for zi, a in zip(z, t["exponents"]):
            for _ in range(a):
                val *= zi
        total += val
    return total


def eval_map(components: Sequence[Sequence[dict]], z: Sequence[complex]) -> list[complex]:
    return [eval_terms(c, z) for c in components]


def residual(spec: dict, model: dict, z: Sequence[complex]) -> float:
    """``|Psi(gamma z) - A_W^T Psi(z)|`` at one point."""
    z = [complex(x) for x in z]
    gz = eval_map(spec["components"], z)
    psi_gz = eval_map(model["psi"], gz)
    psi_z = eval_map(model["psi"], z)
    A = [[_c(x) for x in row] for row in model["A_W"]]
    N = len(psi_z)
    sq = 0.0
    for i in range(N):
        lin = sum(A[j][i] * psi_z[j] for j in range(N))
        sq += abs(psi_gz[i] - lin) ** 2
    return sq**0.5


def residual_table(spec: dict, model: dict, points: Iterable[Sequence[complex]]) -> list[float]:
    return [residual(spec, model, z) for z in points]
