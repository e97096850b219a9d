"""D^2 seeding by rejection: multi-tree proposals thinned with an LSH distance estimate.

A proposal ``x`` drawn proportionally to its squared multi-tree distance is
kept with probability ``min(1, Dist(x, Query(x))^2 / (c^2 MultiTreeDist(x, S)^2))``.
Because the tree distance dominates the Euclidean one, accepted points
follow the D^2 law up to a factor ``c^2`` whenever the LSH answers well.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from ._seeding import seed_sequence
from .baselines import d2_probabilities
from .dataset import Dataset, cost_of_indices
from .fast import SeederState
from . import _lshkern as LK
from .lsh import LshIndex
from .multitree import MultiTree, multitree_init

MIN_BIAS_TRIALS = 1000
UNIFORM_BLOCK = 1 << 15


@dataclass
class RejectionRunStats:
    proposals: int = 0
    accepted: int = 0
    per_round: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    # ratio above 1, i.e. the LSH answer was worse than the c-approximation
    clamped: int = 0
    # proposals for which the LSH returned nothing (accepted with probability 1)
    unanswered: int = 0
    max_ratio: float = 0.0
    restarts: int = 1

    @property
    def proposals_per_center(self) -> float:
        return self.proposals / max(self.accepted, 1)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["proposals_per_center"] = self.proposals_per_center
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class ProposalBudgetExceeded(RuntimeError):
    def __init__(self, msg: str, stats: RejectionRunStats):
        super().__init__(msg)
        self.stats = stats


def proposal_budget(c: float, d: int, k: int) -> int:
    return int(1e6 * c * c * d * d * k)


class RejectionSeeder:
    """Holds one multi-tree and one LSH index; ``run`` seeds from scratch each call."""

    def __init__(self, ds: Dataset, c: float = 2.0, lsh_mode: str = "practical",
                 rng_seed=None, mt: MultiTree | None = None, lsh_options: dict | None = None,
                 debug: bool = False):
        if c < 1:
            raise ValueError("c must be at least 1")
        self.ds = ds
        self.c = float(c)
        self.lsh_mode = lsh_mode
        self.lsh_options = dict(lsh_options or {})
        self.debug = debug
        ss = seed_sequence(rng_seed)
        tree_ss, lsh_ss, self._loop_ss = ss.spawn(3)
        self.mt = mt if mt is not None else multitree_init(ds, tree_ss)
        self._lsh_ss = lsh_ss
        self.state = SeederState(self.mt)
        self.index: LshIndex | None = None

    def _fresh_index(self, capacity: int = 64) -> LshIndex:
        seed = self._lsh_ss.spawn(1)[0]
        return LshIndex(self.ds, self.lsh_mode, self.c, seed, capacity=capacity,
                        **self.lsh_options)

    def _open(self, x: int, centers: list[int]) -> None:
        self.state.open(x)
        self.index.insert(x)
        centers.append(x)

    def acceptance(self, x: int) -> float:
        """Acceptance probability of proposal ``x`` against the current center set."""
        w = float(self.state.weights[x])
        res = self.index.query(x)
        if res is None:
            return 1.0
        if res[1] == 0.0:
            assert w == 0.0, f"point {x} has zero LSH distance but tree weight {w}"
            return 0.0
        return min(1.0, res[1] ** 2 / (self.c ** 2 * w))

    def acceptance_all(self) -> np.ndarray:
        idx = self.index
        acc = np.empty(self.ds.n)
        LK.acceptance_all(self.c ** 2, idx.exact, self.state.weights, idx.X, idx.A, idx.B,
                          idx.radius2, idx.slot_key, idx.slot_head, idx.nxt, idx.ins_pts,
                          idx.counts, idx.loc, idx.loc_first, acc)
        return acc

    def run(self, k: int, rng_seed=None, initial=None, check_ratio: bool = False):
        ds = self.ds
        if not 1 <= k <= ds.n:
            raise ValueError(f"k={k} must lie in [1, n={ds.n}]")
        rng = np.random.default_rng(rng_seed if rng_seed is not None else self._loop_ss.spawn(1)[0])
        t0 = time.perf_counter()
        if self.index is not None or self.state.opened:
            self.state.reset()
        self.index = idx = self._fresh_index(capacity=k)
        stats = RejectionRunStats()
        budget = proposal_budget(self.c, ds.d, k)
        centers: list[int] = []
        for x in list(initial or [])[:k]:
            stats.proposals += 1
            stats.per_round.append(1)
            self._open(int(x), centers)
        if not centers:
            # the first proposal is accepted outright, giving a uniform first center
            stats.proposals += 1
            stats.per_round.append(1)
            self._open(int(rng.integers(ds.n)), centers)
        placed0 = len(centers)
        out = np.zeros(k, dtype=np.int64)
        out[:placed0] = centers
        per_round = np.zeros(k, dtype=np.int64)
        per_round[:placed0] = 1
        loop = np.zeros(6, dtype=np.int64)
        loop[LK.ST_PLACED] = placed0
        loop[LK.ST_PROPOSALS] = stats.proposals
        fstate = np.zeros(1)
        last_d2 = np.full(ds.n, np.inf) if self.debug else np.zeros(1)
        uniforms = np.zeros(0)
        loop[LK.ST_UPOS] = 0
        st, pk = self.state, self.mt.packed
        while True:
            code = LK.rejection_loop(
                k, self.c ** 2, budget, idx.exact, check_ratio, self.debug, uniforms, loop,
                fstate, out, per_round, last_d2,
                pk["leaf_of"], pk["parent"], pk["level"], pk["start"], pk["end"], pk["perm"],
                st.marked, pk["ring_d2"], st.st.weights, st.st.tree, st.st.size,
                st.decreases, st.counters,
                idx.X, idx.A, idx.B, idx.radius2, idx.slot_key, idx.slot_head, idx.slot_tail,
                idx.nxt, idx.ins_pts, idx.counts, idx.loc, idx.loc_first)
            if code == LK.NEED_UNIFORMS:
                uniforms = rng.random(UNIFORM_BLOCK)
                loop[LK.ST_UPOS] = 0
                continue
            break
        placed = int(loop[LK.ST_PLACED])
        centers = [int(c) for c in out[:placed]]
        st.opened = list(centers)
        stats.proposals = int(loop[LK.ST_PROPOSALS])
        stats.per_round = [int(r) for r in per_round[:placed]]
        stats.clamped = int(loop[LK.ST_CLAMPED])
        stats.unanswered = int(loop[LK.ST_UNANSWERED])
        stats.max_ratio = float(fstate[0])
        stats.accepted = placed
        if code == LK.NO_WEIGHT:
            # every remaining point sits on an opened location
            taken = set(centers)
            for x in range(ds.n):
                if len(centers) == k:
                    break
                if x not in taken:
                    stats.per_round.append(0)
                    self._open(x, centers)
            stats.accepted = len(centers)
        stats.wall_time = time.perf_counter() - t0
        if code == LK.BUDGET:
            raise ProposalBudgetExceeded(
                f"proposal budget {budget} exhausted after {placed} centers", stats)
        if code == LK.RATIO_ABOVE_ONE:
            raise AssertionError(f"acceptance ratio {stats.max_ratio} exceeds 1")
        if code == LK.NOT_MONOTONE:
            raise AssertionError("LSH distance of a proposal increased after an insert")
        if code == LK.ZERO_DIST:
            raise AssertionError("proposal with positive tree weight has LSH distance zero")
        return centers, stats


def rejection_sampling(ds: Dataset, k: int, c: float = 2.0, lsh_mode: str = "practical",
                       rng_seed=None, mt: MultiTree | None = None, initial=None,
                       lsh_options: dict | None = None, paranoid: bool = False,
                       check_ratio: bool = False, debug: bool = False):
    """Seed ``k`` centers; returns ``(centers, stats)``.

    With ``paranoid`` the whole procedure is repeated ``ceil(log_n(4 n Delta^2))``
    times on fresh structures and the cheapest solution is kept.
    """
    if not paranoid:
        seeder = RejectionSeeder(ds, c, lsh_mode, rng_seed, mt, lsh_options, debug)
        return seeder.run(k, initial=initial, check_ratio=check_ratio)
    n = max(ds.n, 2)
    reps = max(1, math.ceil(math.log(4 * n * ds.aspect_ratio ** 2) / math.log(n)))
    best = None
    total = 0.0
    for child in seed_sequence(rng_seed).spawn(reps):
        seeder = RejectionSeeder(ds, c, lsh_mode, child, None, lsh_options, debug)
        centers, stats = seeder.run(k, initial=initial, check_ratio=check_ratio)
        total += stats.wall_time
        cost = cost_of_indices(ds, centers)
        if best is None or cost < best[0]:
            best = (cost, centers, stats)
    _, centers, stats = best
    stats.restarts = reps
    stats.wall_time = total
    return centers, stats


@dataclass
class BiasReport:
    centers: list[int]
    c: float
    trials: int
    exact: np.ndarray          # D^2 probabilities
    freq: np.ndarray           # empirical frequencies of accepted samples
    eps: np.ndarray            # per-point binomial margin
    proposals: int

    @property
    def lower(self) -> np.ndarray:
        return self.exact / self.c ** 2 - self.eps

    @property
    def upper(self) -> np.ndarray:
        return self.c ** 2 * self.exact + self.eps

    def violations(self) -> np.ndarray:
        return np.flatnonzero((self.freq < self.lower) | (self.freq > self.upper))

    def total_variation(self) -> float:
        return 0.5 * float(np.abs(self.freq - self.exact).sum())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point", "exact", "empirical", "lower", "upper", "ok"])
            lo, hi = self.lower, self.upper
            for i in range(self.exact.size):
                ok = lo[i] <= self.freq[i] <= hi[i]
                w.writerow([i, repr(float(self.exact[i])), repr(float(self.freq[i])),
                            repr(float(lo[i])), repr(float(hi[i])), int(ok)])


def sampling_bias_report(ds: Dataset, S, c: float = 2.0, trials: int = 100_000,
                         lsh_mode: str = "practical", rng_seed=None, n_structures: int = 100,
                         alpha: float = 1e-3, lsh_options: dict | None = None) -> BiasReport:
    """Empirical law of one rejection round against a fixed center set ``S``.

    Samples are spread over ``n_structures`` independent (multi-tree, LSH)
    pairs. For a fixed structure and fixed ``S`` the LSH answers are
    deterministic, so each point's acceptance probability is computed once
    and proposals are then simulated in batches from the sample tree.
    The margin is a Bonferroni-corrected normal bound at level ``alpha``.
    """
    S = [int(s) for s in S]
    if not S:
        raise ValueError("center set must be nonempty")
    if trials < MIN_BIAS_TRIALS:
        raise ValueError(f"need at least {MIN_BIAS_TRIALS} trials, got {trials}")
    q = d2_probabilities(ds, S)
    n_structures = max(1, min(n_structures, trials))
    root = seed_sequence(rng_seed)
    counts = np.zeros(ds.n, dtype=np.int64)
    proposals = 0
    per = np.full(n_structures, trials // n_structures)
    per[:trials % n_structures] += 1
    for child, want in zip(root.spawn(n_structures), per):
        seeder = RejectionSeeder(ds, c, lsh_mode, child, lsh_options=lsh_options)
        seeder.index = seeder._fresh_index()
        rng = np.random.default_rng(child.spawn(1)[0])
        for s in dict.fromkeys(S):
            seeder.state.open(s)
            seeder.index.insert(s)
        if seeder.state.total_weight <= 0:
            raise ValueError("every point coincides with a center")
        acc = seeder.acceptance_all()
        got = 0
        batch = max(64, 4 * int(want))
        while got < want:
            prop = seeder.state.st.sample_many(rng, batch)
            proposals += batch
            keep = prop[rng.random(batch) < acc[prop]][:want - got]
            np.add.at(counts, keep, 1)
            got += keep.size
    freq = counts / trials
    z = norm.ppf(1.0 - alpha / (2 * ds.n))
    p_hi = np.minimum(1.0, c * c * q)
    eps = z * np.sqrt(np.maximum(p_hi * (1 - p_hi), 1.0 / trials) / trials)
    return BiasReport(S, float(c), int(trials), q, freq, eps, proposals)
