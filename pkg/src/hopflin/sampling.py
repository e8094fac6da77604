"""Deterministic point sets in C^n used by every sampling check."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import norm, qmc


def _sobol(dim: int, count: int, seed: int) -> np.ndarray:
    engine = qmc.Sobol(d=dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # balance warning for non powers of two is irrelevant here
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(count)


def sphere_points(n: int, count: int, radius: float = 1.0, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points on the sphere ``|z| = radius`` in C^n.

    Scrambled Sobol points in [0,1)^{2n} are pushed through the normal
    quantile function and projected radially, so the set is a
    deterministic function of ``(n, count, seed)``.
    """
    u = np.clip(_sobol(2 * n, count, seed), 1e-12, 1 - 1e-12)
    g = norm.ppf(u)
    z = g[:, :n] + 1j * g[:, n:]
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return radius * z


def annulus_points(n: int, count: int, r_in: float, r_out: float,
                   seed: int = 0) -> np.ndarray:
    """Points uniformly distributed (by volume) in ``r_in <= |z| <= r_out``."""
    directions = sphere_points(n, count, 1.0, seed)
    rng = np.random.default_rng(seed)
    u = rng.random(count)
    k = 2 * n
    radii = (r_in**k + u * (r_out**k - r_in**k)) ** (1.0 / k)
    return directions * radii[:, None]
