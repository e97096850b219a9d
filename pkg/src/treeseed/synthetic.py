"""Synthetic Gaussian mixtures for benchmarks and tests."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import Dataset


def mixture_means(d: int, n_components: int, spread: float, separation: float | None,
                  rng: np.random.Generator, max_tries: int = 10_000) -> np.ndarray:
    """Means uniform in ``[-spread, spread]^d``, optionally at least ``separation`` apart."""
    if separation is None:
        return rng.uniform(-spread, spread, size=(n_components, d))
    means = np.empty((0, d))
    tries = 0
    while means.shape[0] < n_components:
        cand = rng.uniform(-spread, spread, size=(1, d))
        if means.shape[0] == 0 or cdist(cand, means).min() >= separation:
            means = np.vstack([means, cand])
            tries = 0
        else:
            tries += 1
            if tries > max_tries:
                raise ValueError(f"cannot place {n_components} means {separation} apart "
                                 f"in a box of half-width {spread}")
    return means


def gaussian_mixture(n: int, d: int, n_components: int = 100, sigma: float = 1.0,
                     spread: float = 10.0, separation: float | None = None, rng_seed=None,
                     return_labels: bool = False):
    """Isotropic mixture with equal weights.

    ``separation`` is in units of ``sigma``: every pair of means is at
    least ``separation * sigma`` apart.
    """
    rng = np.random.default_rng(rng_seed)
    sep = None if separation is None else separation * sigma
    means = mixture_means(d, n_components, spread, sep, rng)
    labels = rng.integers(0, n_components, size=n)
    X = means[labels] + sigma * rng.standard_normal((n, d))
    ds = Dataset(X)
    return (ds, labels, means) if return_labels else ds
