"""Randomly shifted hierarchical grid embedding (one quadtree-style tree).

Only non-empty cells are materialized. A cell whose points all sit at one
location becomes a leaf immediately; conceptually it continues as a unary
chain down to the common leaf level ``H``, which is what the distance
formula accounts for.

Node storage is a flat set of arrays. Points are kept in a single
permutation ``perm`` ordered by root-to-leaf path, so every node's point
set is the contiguous slice ``perm[start:end]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._kernels import GRID_BITS, MAX_LEVELS
from .dataset import Dataset


@dataclass(frozen=True)
class CellId:
    level: int
    index: tuple[int, ...]

    def parent(self) -> "CellId":
        if self.level == 0:
            raise ValueError("root cell has no parent")
        return CellId(self.level - 1, tuple(i >> 1 for i in self.index))


@dataclass
class QuadTree:
    height: int
    max_dist: float
    d: int
    shift: np.ndarray          # scalar shift broadcast to (d,), or per-coordinate
    unit: np.ndarray           # (n, d) shifted coordinates scaled into [0, 1)
    perm: np.ndarray           # (n,) points in path order
    leaf_of: np.ndarray        # (n,) leaf node per point
    parent: np.ndarray         # per node, -1 for the root
    level: np.ndarray
    start: np.ndarray
    end: np.ndarray
    marked: np.ndarray

    @property
    def n(self) -> int:
        return self.perm.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.parent.shape[0]

    @property
    def root_side(self) -> float:
        return 2.0 * self.max_dist

    def cell_side(self, h: int) -> float:
        return self.root_side / 2.0 ** h

    def points_of(self, node: int) -> np.ndarray:
        """P_T(v): indices of the points in the subtree of ``node``."""
        return self.perm[self.start[node]:self.end[node]]

    def cell_of(self, p: int, h: int) -> CellId:
        idx = np.floor(self.unit[p] * 2.0 ** h).astype(np.int64)
        return CellId(h, tuple(int(i) for i in idx))

    def nodes_at(self, h: int) -> np.ndarray:
        return np.flatnonzero(self.level == h)

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for v, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(v)
        return kids

    def level_dist(self, i: int) -> float:
        """Tree distance between two points whose lowest common ancestor is at level ``i``."""
        return _level_dists(self.d, self.max_dist, self.height)[i]

    def ring_d2(self) -> np.ndarray:
        return _level_dists(self.d, self.max_dist, self.height) ** 2

    def lca_level(self, p: int, q: int) -> int:
        H = self.height
        if H == 0:
            return 0
        scale = 2.0 ** H
        a = np.floor(self.unit[p] * scale).astype(np.int64)
        b = np.floor(self.unit[q] * scale).astype(np.int64)
        diff = int(np.bitwise_or.reduce(a ^ b))
        return H - diff.bit_length()

    def clear_marks(self) -> None:
        self.marked[:] = False


def edge_weight(j: int, d: int, max_dist: float, height: int | None = None) -> float:
    """Length of an edge between level ``j`` and level ``j + 1``."""
    if j < 0 or (height is not None and j >= height):
        raise ValueError(f"edge level {j} outside [0, {height})")
    return math.sqrt(d) * max_dist / 2.0 ** j


def _level_dists(d: int, max_dist: float, height: int) -> np.ndarray:
    out = np.zeros(height + 1)
    w = np.array([math.sqrt(d) * max_dist / 2.0 ** j for j in range(height)])
    for i in range(height):
        out[i] = 2.0 * w[i:].sum()
    return out


def _sorted_groups(key: np.ndarray):
    order = np.argsort(key, kind="stable")
    sk = key[order]
    new = np.empty(sk.size, dtype=bool)
    new[0] = True
    np.not_equal(sk[1:], sk[:-1], out=new[1:])
    return order, new


def _group_keys(cells: np.ndarray, nid: np.ndarray):
    """Sort order grouping points by (node, child cell) and a flag array marking group starts."""
    bits = (cells & 1).astype(np.uint8)
    d = bits.shape[1]
    top = int(nid.max()).bit_length() if nid.size else 0
    if d + top <= 62:
        key = bits.astype(np.int64) @ (np.int64(1) << np.arange(d, dtype=np.int64))
        key |= nid.astype(np.int64) << d
        return _sorted_groups(key)
    packed = np.packbits(bits, axis=1)
    order = np.lexsort(tuple(packed[:, j] for j in range(packed.shape[1] - 1, -1, -1)) + (nid,))
    sp = packed[order]
    sn = nid[order]
    new = np.empty(sp.shape[0], dtype=bool)
    new[0] = True
    new[1:] = (sn[1:] != sn[:-1]) | np.any(sp[1:] != sp[:-1], axis=1)
    return order, new


def build(ds: Dataset, rng_seed=None, independent_shifts: bool = False,
          max_levels: int = MAX_LEVELS) -> QuadTree:
    """Embed ``ds`` into one randomly shifted grid tree.

    The grid is anchored at the bounding-box minimum; shifted points
    ``x - min + s`` with ``0 <= s <= MaxDist`` all fall inside the root
    cube of side ``2 * MaxDist``.
    """
    rng = np.random.default_rng(rng_seed)
    X = ds.points
    n, d = X.shape
    maxd = ds.max_dist_bound
    if independent_shifts:
        shift = rng.uniform(0.0, maxd, size=d) if maxd > 0 else np.zeros(d)
    else:
        shift = np.full(d, rng.uniform(0.0, maxd) if maxd > 0 else 0.0)

    perm = np.arange(n, dtype=np.int64)
    leaf_of = np.zeros(n, dtype=np.int64)
    parent = [np.array([-1], dtype=np.int64)]
    level = [np.array([0], dtype=np.int64)]
    start = [np.array([0], dtype=np.int64)]
    end = [np.array([n], dtype=np.int64)]

    if maxd <= 0 or ds.n_locations == 1:
        unit = np.zeros((n, d))
        return _assemble(0, maxd, d, shift, unit, perm, leaf_of, parent, level, start, end)

    unit = (X - X.min(axis=0) + shift) / (2.0 * maxd)
    np.clip(unit, 0.0, np.nextafter(1.0, 0.0), out=unit)
    loc = ds.location_ids
    # floor(unit * 2^h) == grid >> (GRID_BITS - h) exactly, since scaling by 2^h is exact
    grid = np.floor(unit * 2.0 ** GRID_BITS).astype(np.int64)

    active_pos = np.arange(n, dtype=np.int64)
    active_nid = np.zeros(n, dtype=np.int64)
    next_id = 1
    h = 0
    while active_pos.size and h < max_levels:
        h += 1
        pts = perm[active_pos]
        if h <= GRID_BITS and d + int(active_nid.max()).bit_length() <= 62:
            order, new = _sorted_groups(K.child_keys(grid, pts, active_nid, h, d))
        else:
            cells = np.floor(unit[pts] * 2.0 ** h).astype(np.int64)
            order, new = _group_keys(cells, active_nid)
        sp = pts[order]
        snid = active_nid[order]
        perm[active_pos] = sp
        first = np.flatnonzero(new)
        n_child = first.size
        last = np.empty(n_child, dtype=np.int64)
        last[:-1] = first[1:] - 1
        last[-1] = sp.size - 1
        ids = np.arange(next_id, next_id + n_child, dtype=np.int64)
        next_id += n_child
        parent.append(snid[first])
        level.append(np.full(n_child, h, dtype=np.int64))
        start.append(active_pos[first])
        end.append(active_pos[last] + 1)

        sloc = loc[sp]
        single = np.minimum.reduceat(sloc, first) == np.maximum.reduceat(sloc, first)
        if h == max_levels:
            single[:] = True
        gid = np.cumsum(new) - 1
        point_final = single[gid]
        leaf_of[sp[point_final]] = ids[gid[point_final]]
        keep = ~point_final
        active_pos = active_pos[keep]
        active_nid = ids[gid[keep]]
    return _assemble(h, maxd, d, shift, unit, perm, leaf_of, parent, level, start, end)


def _assemble(h, maxd, d, shift, unit, perm, leaf_of, parent, level, start, end) -> QuadTree:
    par = np.concatenate(parent)
    return QuadTree(
        height=h, max_dist=float(maxd), d=d, shift=shift, unit=unit, perm=perm,
        leaf_of=leaf_of, parent=par, level=np.concatenate(level),
        start=np.concatenate(start), end=np.concatenate(end),
        marked=np.zeros(par.shape[0], dtype=np.bool_),
    )


def tree_dist(tree: QuadTree, p: int, q: int) -> float:
    """Twice the weighted path length from ``p`` to its lowest common ancestor with ``q``."""
    n = tree.n
    if not (0 <= p < n and 0 <= q < n):
        raise IndexError(f"point index out of range for n={n}")
    if p == q:
        return 0.0
    return float(_level_dists(tree.d, tree.max_dist, tree.height)[tree.lca_level(p, q)])
