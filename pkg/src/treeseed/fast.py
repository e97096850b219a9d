"""D^2 sampling under the multi-tree metric with incremental weight maintenance.

The state keeps, for every point, its squared multi-tree distance to the
opened set, mirrored in a sample tree, plus mark bits on every embedding
node. Opening a point walks each tree from its leaf up to the highest
unmarked ancestor and only rescans the points below it.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .dataset import Dataset
from .multitree import MultiTree, multitree_init
from .sampletree import SampleTree


class SeederState:
    def __init__(self, mt: MultiTree):
        self.mt = mt
        n = mt.n
        self.st = SampleTree(n, mt.M)
        self.marked = np.zeros(mt.packed["parent"].shape[0], dtype=np.bool_)
        self.decreases = np.zeros(n, dtype=np.int64)
        # marks, weight decreases, points scanned
        self.counters = np.zeros(3, dtype=np.int64)
        self.opened: list[int] = []

    @property
    def n(self) -> int:
        return self.mt.n

    @property
    def weights(self) -> np.ndarray:
        return self.st.weights

    @property
    def total_weight(self) -> float:
        return self.st.total

    def reset(self) -> None:
        self.st.tree[self.st.size:self.st.size + self.n] = self.mt.M
        self.st.tree[self.st.size + self.n:] = 0.0
        K.st_build(self.st.tree, self.st.size)
        self.marked[:] = False
        self.decreases[:] = 0
        self.counters[:] = 0
        self.opened = []

    def tree_marks(self, t: int) -> np.ndarray:
        off = self.mt.packed["offsets"]
        return self.marked[off[t]:off[t + 1]]

    def open(self, x: int) -> None:
        if not 0 <= x < self.n:
            raise IndexError(f"point {x} out of range for n={self.n}")
        pk = self.mt.packed
        K.open_point(int(x), pk["leaf_of"], pk["parent"], pk["level"], pk["start"],
                     pk["end"], pk["perm"], self.marked, pk["ring_d2"], self.st.weights,
                     self.st.tree, self.st.size, self.decreases, self.counters)
        self.opened.append(int(x))

    def sample(self, rng: np.random.Generator) -> int:
        return self.st.sample(rng)

    def sample_u(self, u: float) -> int:
        if self.st.tree[1] <= 0.0:
            raise ValueError("cannot sample: every point has zero weight")
        return int(K.st_sample(self.st.tree, self.st.size, u))


def init_state(mt: MultiTree) -> SeederState:
    return SeederState(mt)


def multitree_open(state: SeederState, x: int) -> None:
    state.open(x)


def multitree_sample(state: SeederState, rng: np.random.Generator) -> int:
    return state.sample(rng)


def _fill_degenerate(state: SeederState, centers: list[int], k: int) -> None:
    """Top up with the lowest-index unopened points once all weight is gone."""
    taken = np.zeros(state.n, dtype=bool)
    taken[centers] = True
    for x in np.flatnonzero(~taken)[:k - len(centers)]:
        state.open(int(x))
        centers.append(int(x))


def fast_kmeanspp(ds: Dataset, k: int, rng_seed=None, mt: MultiTree | None = None,
                  state: SeederState | None = None) -> list[int]:
    """Seed ``k`` centers by D^2 sampling w.r.t. the multi-tree distance.

    The returned order is the opening order, so every prefix is the
    solution for the corresponding smaller ``k``.
    """
    if not 1 <= k <= ds.n:
        raise ValueError(f"k={k} must lie in [1, n={ds.n}]")
    rng = np.random.default_rng(rng_seed)
    tree_seed, loop_seed = rng.integers(0, 2**63 - 1, size=2)
    if state is None:
        if mt is None:
            mt = multitree_init(ds, int(tree_seed))
        state = SeederState(mt)
    else:
        state.reset()
    pk = state.mt.packed
    uniforms = np.random.default_rng(int(loop_seed)).random(k)
    out = np.empty(k, dtype=np.int64)
    placed = K.fast_loop(k, uniforms, out, pk["leaf_of"], pk["parent"], pk["level"],
                         pk["start"], pk["end"], pk["perm"], state.marked, pk["ring_d2"],
                         state.st.weights, state.st.tree, state.st.size,
                         state.decreases, state.counters)
    centers = [int(c) for c in out[:placed]]
    state.opened = list(centers)
    if placed < k:
        _fill_degenerate(state, centers, k)
    return centers
