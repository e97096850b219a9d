import math
from fractions import Fraction

import numpy as np
import pytest

from treeseed import lsh
from treeseed.dataset import Dataset
from treeseed.lsh import (LshIndex, PStableHash, collision_prob, derive_params,
                          params_from_probs)

from conftest import random_dataset


def mc_collision(u, r, trials, rng):
    proj = rng.standard_normal(trials) * u
    b = rng.uniform(0, r, trials)
    return float(np.mean(np.floor((proj + b) / r) == np.floor(b / r)))


class TestCollisionProb:
    @pytest.mark.parametrize("u", [5.0, 20.0])
    def test_monte_carlo(self, u, rng):
        assert collision_prob(u, 10.0) == pytest.approx(mc_collision(u, 10.0, 1_000_000, rng), abs=0.01)

    def test_limits(self):
        assert collision_prob(1e-6, 1.0) == pytest.approx(1.0, abs=1e-5)
        assert collision_prob(1e6, 1.0) < 1e-5

    def test_decreasing(self):
        ps = [collision_prob(u, 4.0) for u in np.linspace(0.1, 30, 50)]
        assert all(a > b for a, b in zip(ps, ps[1:]))

    def test_invalid(self):
        with pytest.raises(ValueError):
            collision_prob(0.0, 1.0)

    def test_hash_function_matches_formula(self, rng):
        h = PStableHash.draw(3, 2.5, rng)
        p = rng.normal(size=3)
        assert h(p) == math.floor((h.a @ p + h.b) / h.r)


class TestParams:
    def test_rho_half(self):
        assert params_from_probs(100, 0.5, 0.25, 0.1).rho == pytest.approx(0.5)

    def test_inequalities(self):
        prm = derive_params(1000, 2.0, 1e-3)
        # exact rational check of p2^m <= eta < p2^(m-1) on the log scale
        lp2 = math.log(prm.p2)
        assert prm.m * lp2 <= -prm.log_inv_eta + 1e-12
        assert prm.m == 1 or (prm.m - 1) * lp2 > -prm.log_inv_eta

    def test_table_bound_log_space(self):
        prm = params_from_probs(500, 0.6, 0.3, 0.01)
        eta_rho = math.exp(-prm.rho * prm.log_inv_eta)
        assert prm.ell * math.log1p(-eta_rho) <= -prm.log_inv_eta

    def test_degenerate(self):
        with pytest.raises(ValueError):
            params_from_probs(10, 0.3, 0.3, 0.1)
        with pytest.raises(ValueError):
            derive_params(10, 1.0, 0.1)

    def test_budget_keeps_success_probability(self):
        prm = derive_params(1000, 2.0, 1e-4)
        m, ell = prm.tables(64)
        assert ell <= 64
        assert (1 - prm.p1 ** m) ** ell <= 1e-4 * (1 + 1e-9)


def brute_nn(P, inserted, q):
    d = np.linalg.norm(P[inserted] - P[q], axis=1)
    return inserted[int(np.argmin(d))], float(d.min())


class TestIndex:
    def test_exact_mode_is_nearest(self, rng):
        ds = random_dataset(rng, 300, 5)
        idx = LshIndex(ds, "exact")
        ins = []
        for p in rng.permutation(300)[:40]:
            idx.insert(int(p))
            ins.append(int(p))
            q = int(rng.integers(300))
            got = idx.query(q)
            want = brute_nn(ds.points, ins, q)
            assert got[1] == pytest.approx(want[1], abs=1e-12)

    @pytest.mark.parametrize("mode", ["practical", "theoretical", "exact"])
    def test_self_query(self, mode, rng):
        ds = random_dataset(rng, 200, 4)
        idx = LshIndex(ds, mode, rng_seed=3)
        for p in range(0, 200, 7):
            idx.insert(p)
            assert idx.query(p)[1] == 0.0

    def test_empty_query(self, rng):
        idx = LshIndex(random_dataset(rng, 20, 2), rng_seed=0)
        assert idx.query(3) is None
        assert lsh.query(idx, 3) is None

    def test_double_insert_and_order(self, rng):
        ds = random_dataset(rng, 100, 3)
        idx = LshIndex(ds, "practical", rng_seed=1, capacity=2)
        order = [int(p) for p in rng.integers(0, 100, 150)]
        for p in order:
            lsh.insert(idx, p)
        assert idx.inserted == order
        for t in range(idx.n_tables):
            shadow: dict = {}
            for p in order:
                shadow.setdefault(idx.tuple_of(t, p), []).append(p)
            for key, chain in shadow.items():
                assert idx.bucket_chain(t, chain[0]) == chain

    def test_monotone(self, rng):
        ds = random_dataset(rng, 400, 6, dup=10)
        for mode in ("practical", "theoretical"):
            idx = LshIndex(ds, mode, rng_seed=2)
            queries = rng.integers(0, 400, 30)
            last = np.full(30, np.inf)
            for p in rng.permutation(400)[:100]:
                idx.insert(int(p))
                for j, q in enumerate(queries):
                    res = idx.query(int(q))
                    d = np.inf if res is None else res[1]
                    assert d <= last[j]
                    last[j] = d

    def test_reported_within_radius(self, rng):
        ds = random_dataset(rng, 300, 4)
        idx = LshIndex(ds, "practical", rng_seed=4)
        for p in range(0, 300, 3):
            idx.insert(p)
        for q in range(300):
            res = idx.query(q)
            if res is not None:
                p, dist = res
                assert dist == pytest.approx(np.linalg.norm(ds.points[p] - ds.points[q]))
                assert dist ** 2 <= idx.radius2.max() * (1 + 1e-12)

    def test_theoretical_c_approximation(self, rng):
        ds = random_dataset(rng, 500, 8)
        idx = LshIndex(ds, "theoretical", c=2.0, rng_seed=5)
        ins = [int(p) for p in rng.permutation(500)[:50]]
        for p in ins:
            idx.insert(p)
        good = 0
        for q in range(500):
            res = idx.query(q)
            best = brute_nn(ds.points, ins, q)[1]
            if res is not None and res[1] <= 2.0 * best + 1e-12:
                good += 1
        assert good / 500 >= 0.95

    def test_practical_profile(self, rng):
        idx = LshIndex(random_dataset(rng, 50, 3), "practical")
        assert idx.n_scales == 1
        sc = idx.scales[0]
        assert (sc.m, sc.r, sc.ell) == (15, 10.0, 20)
        assert idx.hash_function(0, 0).r == pytest.approx(10.0 * sc.R)

    def test_duplicate_locations(self):
        ds = Dataset(np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]]))
        idx = LshIndex(ds, "practical", rng_seed=0)
        idx.insert(0)
        assert idx.query(1) == (0, 0.0)

    def test_single_location(self):
        ds = Dataset(np.zeros((5, 2)))
        idx = LshIndex(ds, "theoretical", rng_seed=0)
        idx.insert(2)
        assert idx.query(4) == (2, 0.0)

    def test_errors(self, rng):
        ds = random_dataset(rng, 10, 2)
        with pytest.raises(ValueError):
            LshIndex(ds, "nope")
        idx = LshIndex(ds)
        with pytest.raises(IndexError):
            idx.insert(10)
