"""Monotone approximate nearest-neighbor index built from p-stable LSH tables.

Buckets are append-only and queries take the first bucket entry within the
acceptance radius, so the reported distance for a fixed query point can only
shrink as more points are inserted.

Three modes:

``exact``
    brute-force nearest inserted point.
``theoretical``
    one gap structure per geometric scale between MaxDist/(2*Delta) and
    MaxDist, with table counts from the closed-form parameter choice.
``practical``
    a single scale, 15 concatenated hashes, bucket width 10.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, Decimal

import numpy as np
from scipy.special import ndtr

from . import _lshkern as LK
from .dataset import Dataset

log = logging.getLogger(__name__)

MODES = ("exact", "theoretical", "practical")

PRACTICAL_M = 15
PRACTICAL_R = 10.0
PRACTICAL_TABLES = 20
THEORY_R = 4.0
TABLE_BUDGET = 64

_WARNED: set = set()


def collision_prob(u: float, r: float) -> float:
    """Probability that two points at distance ``u`` share a bucket of width ``r``."""
    if u <= 0 or r <= 0:
        raise ValueError("distance and bucket width must be positive")
    t = r / u
    return float(1.0 - 2.0 * ndtr(-t) - 2.0 / (math.sqrt(2.0 * math.pi) * t) * (1.0 - math.exp(-t * t / 2.0)))


@dataclass(frozen=True)
class PStableHash:
    a: np.ndarray
    b: float
    r: float

    @classmethod
    def draw(cls, d: int, r: float, rng: np.random.Generator) -> "PStableHash":
        return cls(rng.standard_normal(d), float(rng.uniform(0.0, r)), float(r))

    def __call__(self, p) -> int:
        return int(math.floor((float(np.dot(self.a, p)) + self.b) / self.r))


@dataclass(frozen=True)
class LshParams:
    c: float
    delta: float
    n: int
    p1: float
    p2: float
    rho: float
    eta: float
    log_inv_eta: float
    m: int
    ell: int          # closed-form table count, may be astronomically large
    r: float | None = None

    def tables(self, cap: int) -> tuple[int, int]:
        """(m, tables) actually instantiated under a table budget.

        Over budget, the table count is clamped and ``m`` lowered until a
        pair at distance R still collides somewhere with probability at
        least ``1 - delta``.
        """
        if self.ell <= cap:
            return self.m, int(self.ell)
        ell = int(cap)
        miss = self.delta ** (1.0 / ell)           # allowed per-table miss rate
        hit = -math.expm1(math.log(miss))          # 1 - miss
        m = int(math.floor(math.log(hit) / math.log(self.p1)))
        return max(1, min(m, self.m)), ell


def params_from_probs(n: int, p1: float, p2: float, delta: float, c: float = float("nan"),
                      r: float | None = None) -> LshParams:
    if not (0.0 < p2 < p1 < 1.0):
        raise ValueError(f"degenerate hash family: p1={p1}, p2={p2}")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    rho = math.log(1.0 / p1) / math.log(1.0 / p2)
    log_inv_eta = 3.0 / (1.0 - rho) * math.log(n / delta)
    eta = math.exp(-log_inv_eta)
    m = max(1, math.ceil(log_inv_eta / math.log(1.0 / p2)))
    ell_dec = Decimal(100.0 * log_inv_eta) * Decimal(rho * log_inv_eta).exp()
    ell = max(1, int(ell_dec.to_integral_value(rounding=ROUND_CEILING)))
    return LshParams(c, delta, n, p1, p2, rho, eta, log_inv_eta, m, ell, r)


def derive_params(n: int, c: float, delta: float, r: float = THEORY_R) -> LshParams:
    """Closed-form table parameters for a (1, c) gap structure in units of R."""
    if c <= 1:
        raise ValueError("approximation factor must exceed 1")
    p1 = collision_prob(1.0, r)
    p2 = collision_prob(c, r)
    return params_from_probs(n, p1, p2, delta, c=c, r=r)


@dataclass(frozen=True)
class GapScale:
    """One fixed-scale gap structure: reports points within ``c_eff * R`` of the query."""
    R: float
    c_eff: float
    m: int
    ell: int
    r: float

    @property
    def radius(self) -> float:
        return self.c_eff * self.R


class LshIndex:
    """Monotone c-approximate nearest-inserted-point index over a dataset.

    All tables of all scales share one flat layout so that the compiled
    query can scan them in a single pass; table ``t`` belongs to scale
    ``table_scale[t]``. Hashes act on ``p / R``, i.e. a raw bucket width
    of ``r * R``.
    """

    def __init__(self, ds: Dataset, mode: str = "practical", c: float = 2.0, rng_seed=None,
                 m: int | None = None, r: float | None = None, ell: int | None = None,
                 R: float | None = None, table_budget: int = TABLE_BUDGET, capacity: int = 64):
        if mode not in MODES:
            raise ValueError(f"unknown LSH mode {mode!r}; expected one of {MODES}")
        if c < 1:
            raise ValueError("c must be at least 1")
        self.ds = ds
        self.mode = mode
        self.c = float(c)
        self.exact = mode == "exact"
        self.params: LshParams | None = None
        self.scales: list[GapScale] = []
        self.X = np.ascontiguousarray(ds.points, dtype=np.float64)
        self.loc = np.ascontiguousarray(ds.location_ids, dtype=np.int64)
        self.loc_first = np.full(ds.n_locations, -1, dtype=np.int64)
        rng = np.random.default_rng(rng_seed)
        if not self.exact and ds.max_dist_bound > 0:
            self.scales = self._plan(ds, mode, m, r, ell, R, table_budget)
        m_all = self.scales[0].m if self.scales else 1
        blocks_A, blocks_B, rad, owner = [], [], [], []
        for i, sc in enumerate(self.scales):
            blocks_A.append(rng.standard_normal((sc.ell, sc.m, ds.d)) / (sc.r * sc.R))
            blocks_B.append(rng.uniform(0.0, 1.0, (sc.ell, sc.m)))
            rad.append(np.full(sc.ell, sc.radius ** 2))
            owner.append(np.full(sc.ell, i, dtype=np.int64))
        if blocks_A:
            self.A = np.ascontiguousarray(np.concatenate(blocks_A))
            self.B = np.ascontiguousarray(np.concatenate(blocks_B))
            self.radius2 = np.concatenate(rad)
            self.table_scale = np.concatenate(owner)
        else:
            self.A = np.zeros((0, m_all, ds.d))
            self.B = np.zeros((0, m_all))
            self.radius2 = np.zeros(0)
            self.table_scale = np.zeros(0, dtype=np.int64)
        T = self.A.shape[0]
        cap = max(1, int(capacity))
        n_slots = 1 << max(4, (2 * cap - 1).bit_length())
        self.slot_key = np.zeros((T, n_slots), dtype=np.uint64)
        self.slot_head = np.zeros((T, n_slots), dtype=np.int64)
        self.slot_tail = np.zeros((T, n_slots), dtype=np.int64)
        self.nxt = np.full((T, cap), -1, dtype=np.int64)
        self.ins_pts = np.zeros(cap, dtype=np.int64)
        # entry count, then occupied buckets per table
        self.counts = np.zeros(1 + T, dtype=np.int64)
        self._out = np.empty(2)

    def _plan(self, ds, mode, m, r, ell, R, table_budget) -> list[GapScale]:
        if mode == "practical":
            width = PRACTICAL_R if r is None else float(r)
            Rp = ds.max_dist_bound / (2.0 * self.c) if R is None else float(R)
            return [GapScale(Rp, self.c, m or PRACTICAL_M, ell or PRACTICAL_TABLES, width)]
        # geometric scales with ratio gamma; each answers within c / gamma of its radius
        if self.c <= 1:
            raise ValueError("theoretical mode needs c > 1")
        gamma = min(2.0, math.sqrt(self.c))
        c_i = self.c / gamma
        width = THEORY_R if r is None else float(r)
        aspect = ds.aspect_ratio
        n_scales = math.ceil(math.log(2.0 * aspect) / math.log(gamma)) + 1
        delta = 1.0 / (max(ds.n, 2) * n_scales)
        self.params = derive_params(max(ds.n, 2), c_i, delta, width)
        cap = min(table_budget, 4 * ds.n * n_scales)
        m_used, ell_used = self.params.tables(cap)
        if self.params.ell > cap and (self.params.ell, cap) not in _WARNED:
            _WARNED.add((self.params.ell, cap))
            log.warning("LSH table count %s exceeds budget %d; using %d tables of %d hashes",
                        self.params.ell, cap, ell_used, m_used)
        m_used = m or m_used
        ell_used = ell or ell_used
        base = ds.max_dist_bound / (2.0 * aspect)
        return [GapScale(base * gamma ** i, c_i, m_used, ell_used, width) for i in range(n_scales)]

    @property
    def n_scales(self) -> int:
        return len(self.scales)

    @property
    def n_tables(self) -> int:
        return self.A.shape[0]

    @property
    def inserted(self) -> list[int]:
        return [int(p) for p in self.ins_pts[:self.counts[0]]]

    def __len__(self) -> int:
        return int(self.counts[0])

    def reserve(self, extra: int) -> None:
        """Make room for ``extra`` more inserts without reallocating."""
        need = int(self.counts[0]) + int(extra)
        cap = self.ins_pts.shape[0]
        if need > cap:
            new_cap = max(2 * cap, need)
            nxt = np.full((self.n_tables, new_cap), -1, dtype=np.int64)
            nxt[:, :cap] = self.nxt
            self.nxt = nxt
            self.ins_pts = np.concatenate([self.ins_pts, np.zeros(new_cap - cap, dtype=np.int64)])
        if 2 * need > self.slot_key.shape[1]:
            n_slots = 1 << (2 * need - 1).bit_length()
            T = self.n_tables
            key = np.zeros((T, n_slots), dtype=np.uint64)
            head = np.zeros((T, n_slots), dtype=np.int64)
            tail = np.zeros((T, n_slots), dtype=np.int64)
            LK.rehash(self.slot_key, self.slot_head, self.slot_tail, key, head, tail)
            self.slot_key, self.slot_head, self.slot_tail = key, head, tail

    def insert(self, p: int) -> None:
        p = int(p)
        if not 0 <= p < self.ds.n:
            raise IndexError(f"point {p} out of range for n={self.ds.n}")
        self.reserve(1)
        LK.lsh_insert(p, self.X, self.A, self.B, self.slot_key, self.slot_head, self.slot_tail,
                      self.nxt, self.ins_pts, self.counts, self.loc, self.loc_first)

    def query(self, p: int) -> tuple[int, float] | None:
        """Closest reported inserted point as ``(index, distance)``, or None."""
        p = int(p)
        if not 0 <= p < self.ds.n:
            raise IndexError(f"point {p} out of range for n={self.ds.n}")
        out = self._out
        if self.exact:
            LK.exact_query(p, self.X, self.ins_pts, self.counts, out)
        else:
            LK.lsh_query(p, self.X, self.A, self.B, self.radius2, self.slot_key, self.slot_head,
                         self.nxt, self.ins_pts, self.counts, self.loc, self.loc_first, out)
        if out[0] < 0:
            return None
        return int(out[0]), math.sqrt(out[1])

    def hash_function(self, t: int, j: int) -> PStableHash:
        """The j-th hash of table ``t`` in raw coordinates."""
        sc = self.scales[self.table_scale[t]]
        w = sc.r * sc.R
        return PStableHash(self.A[t, j] * w, float(self.B[t, j] * w), w)

    def tuple_of(self, t: int, p: int) -> tuple[int, ...]:
        g = np.empty(self.A.shape[1], dtype=np.int64)
        LK.hash_tuple(self.A, self.B, t, self.X[p], g)
        return tuple(int(v) for v in g)

    def bucket_chain(self, t: int, p: int) -> list[int]:
        """The stored bucket list for point ``p``'s tuple in table ``t``."""
        g = np.empty(self.A.shape[1], dtype=np.int64)
        g2 = np.empty_like(g)
        h = LK.hash_tuple(self.A, self.B, t, self.X[p], g)
        i = LK._find_slot(self.slot_key, self.slot_head, t, np.uint64(h), g, self.A, self.B, self.X,
                          self.ins_pts, g2)
        if self.slot_key[t, i] == 0:
            return []
        out = []
        e = self.slot_head[t, i]
        while e >= 0:
            out.append(int(self.ins_pts[e]))
            e = self.nxt[t, e]
        return out


def insert(idx: LshIndex, p: int) -> None:
    idx.insert(p)


def query(idx: LshIndex, p: int):
    res = idx.query(p)
    return None if res is None else res[0]
