import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from treeseed.dataset import (DataError, Dataset, clustering_cost, compute_aspect_ratio, dist,
                              estimate_maxdist, load_csv, nearest_center, prefix_costs, quantize)


def write(tmp_path, text, name="p.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_three_rows(self, tmp_path):
        ds = load_csv(write(tmp_path, "0,0\n3,4\n0,4\n"))
        assert (ds.n, ds.d) == (3, 2)
        np.testing.assert_array_equal(ds.points, [[0, 0], [3, 4], [0, 4]])

    def test_single_value(self, tmp_path):
        ds = load_csv(write(tmp_path, "5"))
        assert (ds.n, ds.d) == (1, 1)

    def test_bad_field_location(self, tmp_path):
        with pytest.raises(DataError) as exc:
            load_csv(write(tmp_path, "1,x\n"))
        assert (exc.value.row, exc.value.col) == (1, 2)

    def test_bad_field_later_row(self, tmp_path):
        with pytest.raises(DataError) as exc:
            load_csv(write(tmp_path, "1,2\n3,4\n5,nan?\n"))
        assert (exc.value.row, exc.value.col) == (3, 2)

    def test_empty(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(write(tmp_path, ""))

    def test_ragged(self, tmp_path):
        with pytest.raises(DataError) as exc:
            load_csv(write(tmp_path, "1,2\n3\n"))
        assert exc.value.row == 2

    def test_header_and_delimiter(self, tmp_path):
        ds = load_csv(write(tmp_path, "a;b\n1;2\n3;4\n"), delimiter=";", header=True)
        np.testing.assert_array_equal(ds.points, [[1, 2], [3, 4]])

    def test_metadata_is_lazy(self, tmp_path):
        ds = load_csv(write(tmp_path, "0\n10\n"))
        assert "max_dist_bound" not in ds.__dict__
        assert ds.max_dist_bound == 20.0


class TestDist:
    def test_345(self):
        assert dist([0, 0], [3, 4]) == 5.0

    def test_identity(self, rng):
        p = rng.normal(size=7)
        assert dist(p, p) == 0.0

    def test_naive_oracle(self, rng):
        for _ in range(20):
            p, q = rng.normal(size=(2, 7))
            s = 0.0
            for a, b in zip(p, q):
                s += (a - b) * (a - b)
            assert dist(p, q) == pytest.approx(math.sqrt(s), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dist([0, 0], [1, 2, 3])

    @given(arrays(np.float64, (3, 4), elements=st.floats(-1e6, 1e6)))
    def test_triangle_and_symmetry(self, P):
        a, b, c = P
        assert dist(a, b) == dist(b, a)
        assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-9 * (1 + dist(a, c))


class TestMaxDist:
    def test_pair(self):
        assert estimate_maxdist(Dataset([[0.0], [10.0]])) == 20.0

    def test_collinear_first_point(self):
        ds = Dataset([[4.0], [0.0], [10.0]])
        est = estimate_maxdist(ds)
        assert est == 12.0
        assert 10.0 <= est <= 20.0

    def test_single_point(self):
        assert estimate_maxdist(Dataset([[3.0, 1.0]])) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 40), st.integers(1, 5)),
                  elements=st.floats(-1e3, 1e3)))
    def test_two_approximation(self, X):
        ds = Dataset(X)
        true = max((np.linalg.norm(a - b) for a, b in itertools.combinations(X, 2)), default=0.0)
        est = ds.max_dist_bound
        assert true <= est * (1 + 1e-12) + 1e-12
        assert est <= 2 * true * (1 + 1e-12) + 1e-12

    def test_brute_force_2000(self, rng):
        X = rng.standard_cauchy(size=(2000, 3))
        ds = Dataset(X)
        from scipy.spatial.distance import pdist
        true = pdist(X).max()
        assert true <= ds.max_dist_bound <= 2 * true


class TestAspectRatio:
    def test_exact_small(self):
        ds = Dataset([[0.0], [1.0], [3.0], [3.0]])
        assert ds.aspect_ratio == pytest.approx(3.0)

    def test_at_least_one(self, rng):
        assert Dataset(rng.normal(size=(50, 3))).aspect_ratio >= 1.0
        assert Dataset([[1.0, 1.0]]).aspect_ratio == 1.0

    def test_estimate_upper_bounds_large(self, rng):
        X = np.floor(rng.uniform(0, 1000, size=(6000, 2)))
        ds = Dataset(X)
        est = compute_aspect_ratio(ds)
        # the estimate divides a bound on the diameter by a lower bound on the closest pair
        assert est >= 1.0
        assert est >= np.ptp(X, axis=0).max() / math.sqrt(2)


class TestQuantize:
    def test_grid_formula(self):
        # scaling 0.01 turns 1.2345 into 123
        assert math.floor(1.2345 / 0.01) == 123

    def test_scaling_matches_formula(self, rng):
        ds = Dataset(rng.normal(size=(100, 2)))
        q, rep = quantize(ds, rng_seed=3)
        sample = np.random.default_rng(3).choice(100, size=20, replace=False)
        opt = clustering_cost(ds, ds.points[sample])
        assert rep.estimated_opt == pytest.approx(opt, rel=1e-12)
        assert rep.scaling_factor == pytest.approx(opt / (100 * 2 * 200), rel=1e-12)
        np.testing.assert_array_equal(q.points, np.floor(ds.points / rep.scaling_factor))
        assert rep.scaling_factor > 0

    def test_identical_points_degenerate(self):
        ds = Dataset(np.ones((10, 3)))
        q, rep = quantize(ds)
        assert rep.degenerate
        assert q is ds

    def test_cost_preserved(self, rng):
        for seed in range(5):
            X = rng.normal(size=(100, 2))
            ds = Dataset(X)
            q, rep = quantize(ds, rng_seed=seed)
            C = rng.choice(100, size=5, replace=False)
            before = clustering_cost(ds, X[C])
            after = clustering_cost(q, q.points[C]) * rep.scaling_factor ** 2
            assert after == pytest.approx(before, rel=5e-3)

    def test_duplicates_counted(self):
        X = np.array([[0.0, 0.0], [0.001, 0.0], [5.0, 5.0], [10.0, 10.0]])
        q, rep = quantize(Dataset(X), sample_size=1, error_divisor=0.5, rng_seed=0)
        assert rep.clamped_duplicates == Dataset(X).n_locations - q.n_locations


class TestCost:
    def test_all_points_centers(self, rng):
        X = rng.normal(size=(30, 4))
        assert clustering_cost(Dataset(X), X) == 0.0

    def test_pair(self):
        assert clustering_cost(Dataset([[0.0], [10.0]]), [[0.0]]) == 100.0

    def test_naive_oracle(self, rng):
        X = rng.normal(size=(50, 6))
        C = rng.normal(size=(5, 6))
        naive = 0.0
        for x in X:
            naive += min(sum((a - b) ** 2 for a, b in zip(x, c)) for c in C)
        assert clustering_cost(Dataset(X), C) == pytest.approx(naive, rel=1e-9)

    def test_far_from_origin(self, rng):
        # mean-centering in the nearest-center search must not lose precision
        X = rng.normal(size=(200, 3)) + 1e7
        C = X[:4]
        idx, d2 = nearest_center(X, C)
        brute = ((X[:, None, :] - C[None]) ** 2).sum(-1)
        np.testing.assert_allclose(d2, brute.min(1), rtol=1e-9, atol=1e-6)

    def test_empty_centers(self):
        with pytest.raises(ValueError):
            clustering_cost(Dataset([[0.0]]), np.zeros((0, 1)))

    def test_monotone_in_centers(self, rng):
        ds = Dataset(rng.normal(size=(80, 3)))
        costs = prefix_costs(ds, rng.permutation(80)[:15])
        assert np.all(np.diff(costs) <= 1e-12)
