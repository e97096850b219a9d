"""Reference seeders: exact k-means++ and uniform sampling."""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .dataset import Dataset


def kmeanspp_exact(ds: Dataset, k: int, rng_seed=None, return_distances: bool = False):
    """Classic D^2 seeding, Theta(n d k).

    The first center is uniform; each following center is drawn with
    probability proportional to its squared distance to the closest chosen
    center. If all residual distances vanish before ``k`` centers are
    chosen, the lowest-index unchosen points are used.
    """
    if not 1 <= k <= ds.n:
        raise ValueError(f"k={k} must lie in [1, n={ds.n}]")
    rng = np.random.default_rng(rng_seed)
    uniforms = rng.random(k)
    centers = np.empty(k, dtype=np.int64)
    dist2 = np.empty(ds.n)
    K.kmeanspp_loop(ds.points, k, uniforms, centers, dist2)
    out = [int(c) for c in centers]
    return (out, dist2) if return_distances else out


def uniform_sampling(ds: Dataset, k: int, rng_seed=None) -> list[int]:
    if not 1 <= k <= ds.n:
        raise ValueError(f"k={k} must lie in [1, n={ds.n}]")
    rng = np.random.default_rng(rng_seed)
    return [int(i) for i in rng.choice(ds.n, size=k, replace=False)]


def d2_probabilities(ds: Dataset, centers) -> np.ndarray:
    """Exact D^2 distribution given a fixed center set (brute force)."""
    P = ds.points
    C = P[np.asarray(list(centers), dtype=np.int64)]
    d2 = ((P[:, None, :] - C[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    total = d2.sum()
    if total <= 0:
        raise ValueError("all points coincide with a center")
    return d2 / total
