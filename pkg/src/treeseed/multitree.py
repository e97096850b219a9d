"""Three independently shifted tree embeddings combined by taking the minimum distance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadtree
from ._seeding import seed_sequence
from .dataset import Dataset
from .quadtree import QuadTree

N_TREES = 3


@dataclass
class MultiTree:
    ds: Dataset
    trees: list[QuadTree]
    M: float
    # flattened copies of the per-tree arrays for the compiled kernels
    packed: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.ds.n

    @property
    def height(self) -> int:
        return max(t.height for t in self.trees)

    def node_offsets(self) -> np.ndarray:
        sizes = [t.n_nodes for t in self.trees]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)


def multitree_init(ds: Dataset, rng_seed=None, n_trees: int = N_TREES,
                   independent_shifts: bool = False) -> MultiTree:
    if n_trees < 1:
        raise ValueError("need at least one tree")
    ss = seed_sequence(rng_seed)
    trees = [quadtree.build(ds, child, independent_shifts=independent_shifts)
             for child in ss.spawn(n_trees)]
    M = 16.0 * ds.d * ds.max_dist_bound ** 2
    mt = MultiTree(ds, trees, M)
    mt.packed = _pack(mt)
    return mt


def _pack(mt: MultiTree) -> dict:
    off = mt.node_offsets()
    H = mt.height
    ring = np.zeros((len(mt.trees), H + 1))
    for t, tree in enumerate(mt.trees):
        ring[t, :tree.height + 1] = tree.ring_d2()
    par = np.concatenate([np.where(t.parent >= 0, t.parent + off[i], -1)
                          for i, t in enumerate(mt.trees)])
    return {
        "leaf_of": np.stack([t.leaf_of + off[i] for i, t in enumerate(mt.trees)]),
        "parent": par,
        "level": np.concatenate([t.level for t in mt.trees]),
        "start": np.concatenate([t.start for t in mt.trees]),
        "end": np.concatenate([t.end for t in mt.trees]),
        "perm": np.stack([t.perm for t in mt.trees]),
        "ring_d2": ring,
        "offsets": off,
    }


def multitree_dist(mt: MultiTree, p: int, q: int) -> float:
    return min(quadtree.tree_dist(t, p, q) for t in mt.trees)


def multitree_dist_to_set(mt: MultiTree, p: int, S) -> float:
    """Distance to the closest member of ``S``; ``sqrt(M)`` for the empty set."""
    S = list(S)
    if not S:
        return math.sqrt(mt.M)
    return min(multitree_dist(mt, p, s) for s in S)
