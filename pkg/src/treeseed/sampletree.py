"""Weighted balanced binary tree for O(log n) updates and proportional sampling."""

from __future__ import annotations

import numpy as np

from . import _kernels as K


class SampleTree:
    """Array-backed complete binary tree over ``n`` non-negative leaf weights.

    Internal nodes hold subtree sums. Padding leaves beyond ``n`` are
    permanently zero and therefore never sampled.
    """

    AUDIT_EVERY = 1 << 16

    def __init__(self, n: int, initial_weight: float = 0.0, debug: bool = False):
        if n < 1:
            raise ValueError("sample tree needs at least one leaf")
        if initial_weight < 0:
            raise ValueError("weights must be non-negative")
        self.n = int(n)
        self.size = 1 << (self.n - 1).bit_length()
        self.tree = np.zeros(2 * self.size, dtype=np.float64)
        self.tree[self.size:self.size + self.n] = initial_weight
        K.st_build(self.tree, self.size)
        self.debug = debug
        self._updates = 0

    @classmethod
    def from_weights(cls, weights, debug: bool = False) -> "SampleTree":
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        st = cls(len(w), 0.0, debug=debug)
        st.tree[st.size:st.size + st.n] = w
        K.st_build(st.tree, st.size)
        return st

    @property
    def total(self) -> float:
        return float(self.tree[1])

    @property
    def weights(self) -> np.ndarray:
        return self.tree[self.size:self.size + self.n]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, j: int) -> float:
        return float(self.tree[self.size + j])

    def update(self, j: int, w: float) -> None:
        if not 0 <= j < self.n:
            raise IndexError(f"leaf {j} out of range for n={self.n}")
        if w < 0:
            raise ValueError("weights must be non-negative")
        K.st_update(self.tree, self.size, j, float(w))
        self._updates += 1
        if self.debug:
            self.check()
        elif self._updates % self.AUDIT_EVERY == 0:
            self.audit()

    def sample(self, rng: np.random.Generator) -> int:
        if self.tree[1] <= 0.0:
            raise ValueError("cannot sample: total weight is zero")
        return int(K.st_sample(self.tree, self.size, rng.random()))

    def sample_many(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.tree[1] <= 0.0:
            raise ValueError("cannot sample: total weight is zero")
        out = np.empty(count, dtype=np.int64)
        K.st_sample_many(self.tree, self.size, rng.random(count), out)
        return out

    def audit(self) -> float:
        """Rebuild all sums; returns the relative change of the root weight."""
        before = self.tree[1]
        K.st_build(self.tree, self.size)
        after = self.tree[1]
        return 0.0 if after == 0 else abs(before - after) / after

    def check(self, rtol: float = 1e-9) -> None:
        """Assert every internal node equals the sum of its children."""
        t = self.tree
        idx = np.arange(1, self.size)
        expect = t[2 * idx] + t[2 * idx + 1]
        tol = rtol * max(t[1], 0.0)
        bad = np.abs(t[idx] - expect) > tol
        if np.any(bad):
            raise AssertionError(f"sample-tree sums inconsistent at nodes {idx[bad][:5]}")


def init(n: int, initial_weight: float) -> SampleTree:
    return SampleTree(n, initial_weight)


def update_weight(t: SampleTree, j: int, w: float) -> None:
    t.update(j, w)


def sample(t: SampleTree, rng: np.random.Generator) -> int:
    return t.sample(rng)
