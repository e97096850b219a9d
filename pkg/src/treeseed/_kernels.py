"""Compiled inner loops shared by the seeders.

Sample-tree layout: a flat float64 array of length ``2 * size`` where
``size`` is a power of two, node ``i`` has children ``2i`` and ``2i + 1``,
the root is node 1 and leaf ``j`` is node ``size + j``.
"""

import numpy as np
from numba import njit

# Upper bound on embedding depth; also caps the open-path buffer.
MAX_LEVELS = 60


@njit(cache=True)
def st_build(tree, size):
    i = size - 1
    while i >= 1:
        tree[i] = tree[2 * i] + tree[2 * i + 1]
        i -= 1


@njit(cache=True)
def st_update(tree, size, j, w):
    i = size + j
    tree[i] = w
    i >>= 1
    while i >= 1:
        # recomputed from the children, so sums never drift
        tree[i] = tree[2 * i] + tree[2 * i + 1]
        i >>= 1


@njit(cache=True)
def st_sample(tree, size, u):
    """Descend from the root using one uniform ``u`` in [0, 1).

    Zero-weight children are never entered.
    """
    i = 1
    t = u * tree[1]
    while i < size:
        left = tree[2 * i]
        if t < left or tree[2 * i + 1] <= 0.0:
            i = 2 * i
        else:
            t -= left
            i = 2 * i + 1
    return i - size


@njit(cache=True)
def _lower(x, d2, w, tree, size, decreases, counters):
    if d2 < w[x]:
        w[x] = d2
        st_update(tree, size, x, d2)
        decreases[x] += 1
        counters[1] += 1


@njit(cache=True)
def open_point(x, leaf_of, parent, level, start, end, perm, marked, ring_d2,
               w, tree, size, decreases, counters):
    """Open point ``x`` in every tree and lower the weights it affects.

    counters[0] counts unmarked->marked transitions, counters[1] weight
    decreases, counters[2] points scanned.
    """
    path = np.empty(MAX_LEVELS + 2, dtype=np.int64)
    n_trees = leaf_of.shape[0]
    for t in range(n_trees):
        v = leaf_of[t, x]
        plen = 0
        while True:
            path[plen] = v
            plen += 1
            p = parent[v]
            if p < 0 or marked[p]:
                break
            v = p
        for i in range(plen):
            node = path[i]
            if not marked[node]:
                marked[node] = True
                counters[0] += 1
        node = path[0]
        lo = start[node]
        hi = end[node]
        for pos in range(lo, hi):
            _lower(perm[t, pos], 0.0, w, tree, size, decreases, counters)
        counters[2] += hi - lo
        for i in range(1, plen):
            node = path[i]
            d2 = ring_d2[t, level[node]]
            s = start[node]
            e = end[node]
            for pos in range(s, lo):
                _lower(perm[t, pos], d2, w, tree, size, decreases, counters)
            for pos in range(hi, e):
                _lower(perm[t, pos], d2, w, tree, size, decreases, counters)
            counters[2] += (lo - s) + (e - hi)
            lo = s
            hi = e


@njit(cache=True)
def fast_loop(k, uniforms, centers, leaf_of, parent, level, start, end, perm,
              marked, ring_d2, w, tree, size, decreases, counters):
    """Sample-then-open ``k`` times. Returns how many centers were placed
    before the total weight hit zero."""
    for i in range(k):
        if tree[1] <= 0.0:
            return i
        x = st_sample(tree, size, uniforms[i])
        centers[i] = x
        open_point(x, leaf_of, parent, level, start, end, perm, marked, ring_d2,
                   w, tree, size, decreases, counters)
    return k


@njit(cache=True)
def kmeanspp_loop(X, k, uniforms, centers, dist2):
    """Exact D^2 seeding with a maintained nearest-center distance array.

    ``uniforms[0]`` picks the first center. When every residual distance is
    zero the lowest-index unopened point is taken.
    """
    n, d = X.shape
    opened = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        dist2[i] = np.inf
    c = min(int(uniforms[0] * n), n - 1)
    for r in range(k):
        if r > 0:
            total = 0.0
            for i in range(n):
                total += dist2[i]
            if total <= 0.0:
                c = -1
                for i in range(n):
                    if not opened[i]:
                        c = i
                        break
            else:
                target = uniforms[r] * total
                acc = 0.0
                c = -1
                last_pos = -1
                for i in range(n):
                    di = dist2[i]
                    if di > 0.0:
                        last_pos = i
                        acc += di
                        if target < acc:
                            c = i
                            break
                if c < 0:
                    c = last_pos
        centers[r] = c
        opened[c] = True
        for i in range(n):
            s = 0.0
            for j in range(d):
                diff = X[i, j] - X[c, j]
                s += diff * diff
            if s < dist2[i]:
                dist2[i] = s


@njit(cache=True)
def st_sample_many(tree, size, uniforms, out):
    for i in range(uniforms.shape[0]):
        out[i] = st_sample(tree, size, uniforms[i])


GRID_BITS = 52


@njit(cache=True)
def child_keys(grid, pts, nid, h, d):
    """Pack the level-``h`` cell parity bits of each point below its node id."""
    sh = GRID_BITS - h
    out = np.empty(pts.shape[0], dtype=np.int64)
    for i in range(pts.shape[0]):
        p = pts[i]
        key = 0
        for j in range(d):
            key |= ((grid[p, j] >> sh) & 1) << j
        out[i] = key | (nid[i] << d)
    return out
