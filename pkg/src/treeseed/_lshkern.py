"""Compiled LSH tables and the rejection-sampling loop.

Every table maps an m-tuple of hash values to an append-only bucket.
Tuples are reduced to a 64-bit fingerprint for open addressing; on a
fingerprint match the tuple of the bucket's first point is recomputed
and compared, so distinct tuples never share a bucket. Each insert adds
one entry to every table, so entry ``e`` is the ``e``-th inserted point
in all tables and only the per-table ``nxt`` links differ.
"""

import numpy as np
from numba import njit

from ._kernels import open_point, st_sample

M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
GOLD = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True)
def _splitmix(z):
    z = (z ^ (z >> np.uint64(30))) * M1
    z = (z ^ (z >> np.uint64(27))) * M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def hash_tuple(A, B, t, x, g):
    """Fill ``g`` with the m bucket indices of point ``x`` in table ``t``; return its fingerprint."""
    m = A.shape[1]
    d = A.shape[2]
    h = GOLD
    for j in range(m):
        s = B[t, j]
        for a in range(d):
            s += A[t, j, a] * x[a]
        v = np.int64(np.floor(s))
        g[j] = v
        h = _splitmix(h ^ (np.uint64(v) + GOLD))
    if h == np.uint64(0):
        h = np.uint64(1)
    return h


@njit(cache=True)
def _find_slot(slot_key, slot_head, t, h, g, A, B, X, ins_pts, g2):
    """Slot holding tuple ``g`` in table ``t``, or the empty slot where it belongs."""
    mask = slot_key.shape[1] - 1
    i = np.int64(h & np.uint64(mask))
    m = g.shape[0]
    while True:
        k = slot_key[t, i]
        if k == np.uint64(0):
            return i
        if k == h:
            hash_tuple(A, B, t, X[ins_pts[slot_head[t, i]]], g2)
            same = True
            for j in range(m):
                if g2[j] != g[j]:
                    same = False
                    break
            if same:
                return i
        i = (i + 1) & mask


@njit(cache=True)
def lsh_insert(p, X, A, B, slot_key, slot_head, slot_tail, nxt, ins_pts,
               counts, loc, loc_first):
    """Append point ``p`` to its bucket in every table. ``counts[0]`` is the entry count."""
    e = counts[0]
    ins_pts[e] = p
    if loc_first[loc[p]] < 0:
        loc_first[loc[p]] = p
    x = X[p]
    g = np.empty(A.shape[1], dtype=np.int64)
    g2 = np.empty(A.shape[1], dtype=np.int64)
    for t in range(A.shape[0]):
        h = hash_tuple(A, B, t, x, g)
        i = _find_slot(slot_key, slot_head, t, h, g, A, B, X, ins_pts, g2)
        nxt[t, e] = -1
        if slot_key[t, i] == np.uint64(0):
            slot_key[t, i] = h
            slot_head[t, i] = e
            counts[1 + t] += 1
        else:
            nxt[t, slot_tail[t, i]] = e
        slot_tail[t, i] = e
    counts[0] = e + 1


@njit(cache=True)
def lsh_query(q, X, A, B, radius2, slot_key, slot_head, nxt, ins_pts, counts,
              loc, loc_first, out):
    """Closest of the per-table first hits within the table radius.

    Writes (point, squared distance) into ``out``; point -1 when no table answers.
    """
    out[0] = -1.0
    out[1] = np.inf
    if counts[0] == 0:
        return
    f = loc_first[loc[q]]
    if f >= 0:
        out[0] = f
        out[1] = 0.0
        return
    x = X[q]
    d = X.shape[1]
    g = np.empty(A.shape[1], dtype=np.int64)
    g2 = np.empty(A.shape[1], dtype=np.int64)
    best = -1
    best_d2 = np.inf
    for t in range(A.shape[0]):
        h = hash_tuple(A, B, t, x, g)
        i = _find_slot(slot_key, slot_head, t, h, g, A, B, X, ins_pts, g2)
        if slot_key[t, i] == np.uint64(0):
            continue
        r2 = radius2[t]
        e = slot_head[t, i]
        while e >= 0:
            p = ins_pts[e]
            s = 0.0
            for a in range(d):
                diff = X[p, a] - x[a]
                s += diff * diff
            if s <= r2:
                if s < best_d2:
                    best_d2 = s
                    best = p
                break
            e = nxt[t, e]
    if best >= 0:
        out[0] = best
        out[1] = best_d2


@njit(cache=True)
def exact_query(q, X, ins_pts, counts, out):
    out[0] = -1.0
    out[1] = np.inf
    x = X[q]
    d = X.shape[1]
    for e in range(counts[0]):
        p = ins_pts[e]
        s = 0.0
        for a in range(d):
            diff = X[p, a] - x[a]
            s += diff * diff
        if s < out[1]:
            out[1] = s
            out[0] = p


@njit(cache=True)
def rehash(slot_key, slot_head, slot_tail, new_key, new_head, new_tail):
    mask = new_key.shape[1] - 1
    for t in range(slot_key.shape[0]):
        for i in range(slot_key.shape[1]):
            h = slot_key[t, i]
            if h == np.uint64(0):
                continue
            j = np.int64(h & np.uint64(mask))
            while new_key[t, j] != np.uint64(0):
                j = (j + 1) & mask
            new_key[t, j] = h
            new_head[t, j] = slot_head[t, i]
            new_tail[t, j] = slot_tail[t, i]


# loop state slots
ST_PLACED = 0
ST_PROPOSALS = 1
ST_TRIES = 2
ST_UPOS = 3
ST_CLAMPED = 4
ST_UNANSWERED = 5

DONE = 0
NEED_UNIFORMS = 1
BUDGET = 2
RATIO_ABOVE_ONE = 3
NOT_MONOTONE = 4
NO_WEIGHT = 5
ZERO_DIST = 6


@njit(cache=True)
def rejection_loop(k, c2, budget, exact, check_ratio, debug, uniforms, state, fstate,
                   centers, per_round, last_d2,
                   leaf_of, parent, level, start, end, perm, marked, ring_d2,
                   w, tree, size, decreases, counters,
                   X, A, B, radius2, slot_key, slot_head, slot_tail, nxt,
                   ins_pts, lcounts, loc, loc_first):
    """Propose, accept or reject, open. Resumable: all progress lives in ``state``/``fstate``."""
    out = np.empty(2)
    while state[ST_PLACED] < k:
        if tree[1] <= 0.0:
            return NO_WEIGHT
        if state[ST_PROPOSALS] >= budget:
            return BUDGET
        if state[ST_UPOS] + 2 > uniforms.shape[0]:
            return NEED_UNIFORMS
        u = uniforms[state[ST_UPOS]]
        v = uniforms[state[ST_UPOS] + 1]
        state[ST_UPOS] += 2
        x = st_sample(tree, size, u)
        state[ST_PROPOSALS] += 1
        state[ST_TRIES] += 1
        wx = w[x]
        if exact:
            exact_query(x, X, ins_pts, lcounts, out)
        else:
            lsh_query(x, X, A, B, radius2, slot_key, slot_head, nxt, ins_pts,
                      lcounts, loc, loc_first, out)
        if out[0] < 0:
            state[ST_UNANSWERED] += 1
            p = 1.0
        else:
            dq2 = out[1]
            if dq2 == 0.0:
                # a zero distance means x sits on an opened location, whose tree weight is zero
                return ZERO_DIST
            if debug:
                if dq2 > last_d2[x]:
                    return NOT_MONOTONE
                last_d2[x] = dq2
            ratio = dq2 / (c2 * wx)
            if ratio > fstate[0]:
                fstate[0] = ratio
            if ratio > 1.0:
                state[ST_CLAMPED] += 1
                if check_ratio:
                    return RATIO_ABOVE_ONE
            p = min(1.0, ratio)
        if p >= 1.0 or v < p:
            j = state[ST_PLACED]
            centers[j] = x
            per_round[j] = state[ST_TRIES]
            state[ST_TRIES] = 0
            open_point(x, leaf_of, parent, level, start, end, perm, marked, ring_d2,
                       w, tree, size, decreases, counters)
            lsh_insert(x, X, A, B, slot_key, slot_head, slot_tail, nxt, ins_pts,
                       lcounts, loc, loc_first)
            state[ST_PLACED] = j + 1
    return DONE


@njit(cache=True)
def acceptance_all(c2, exact, w, X, A, B, radius2, slot_key, slot_head, nxt,
                   ins_pts, lcounts, loc, loc_first, acc):
    """Acceptance probability of every positive-weight point against the current centers."""
    out = np.empty(2)
    for x in range(w.shape[0]):
        if w[x] <= 0.0:
            acc[x] = 0.0
            continue
        if exact:
            exact_query(x, X, ins_pts, lcounts, out)
        else:
            lsh_query(x, X, A, B, radius2, slot_key, slot_head, nxt, ins_pts,
                      lcounts, loc, loc_first, out)
        if out[0] < 0:
            acc[x] = 1.0
        else:
            acc[x] = min(1.0, out[1] / (c2 * w[x]))
