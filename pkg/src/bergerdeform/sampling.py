"""Reproducible sample-point generation over a chart's domain box.

Half of each batch comes from an unscrambled Halton sequence (deterministic
low-discrepancy coverage), the other half from a seeded uniform generator, so
validation and comparison reports are reproducible given (n, seed).
"""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

__all__ = ["sample_points", "random_vectors"]


def sample_points(domain, n: int, seed: int = 42, halton_fraction: float = 0.5) -> np.ndarray:
    """Return ``n`` points inside the closed box ``domain`` as an (n, d) array."""
    domain = np.asarray(domain, dtype=float)
    d = domain.shape[0]
    lo, hi = domain[:, 0], domain[:, 1]
    n_halton = int(round(n * halton_fraction))
    n_random = n - n_halton
    parts = []
    if n_halton > 0:
        unit = qmc.Halton(d=d, scramble=False).random(n_halton)
        parts.append(lo + unit * (hi - lo))
    if n_random > 0:
        rng = np.random.default_rng(seed)
        parts.append(rng.uniform(lo, hi, size=(n_random, d)))
    return np.concatenate(parts, axis=0)


def random_vectors(rng: np.random.Generator, batch_shape, n: int, count: int) -> np.ndarray:
    """Standard-normal vectors of shape batch_shape + (count, n)."""
    return rng.standard_normal(tuple(batch_shape) + (count, n))
