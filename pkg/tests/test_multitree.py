import math

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from treeseed.dataset import Dataset
from treeseed.multitree import N_TREES, multitree_dist, multitree_dist_to_set, multitree_init
from treeseed.quadtree import tree_dist

from conftest import random_dataset


def test_single_point():
    mt = multitree_init(Dataset([[3.0, 4.0]]), 0)
    assert mt.M == 0.0
    assert len(mt.trees) == N_TREES
    assert all(t.height == 0 for t in mt.trees)


def test_cap_formula():
    ds = Dataset([[0.0, 0.0], [1.0, 1.0]], max_dist_bound=10.0)
    assert multitree_init(ds, 0).M == 3200.0


def test_deterministic(rng):
    ds = random_dataset(rng, 100, 3)
    a, b = multitree_init(ds, 5), multitree_init(ds, 5)
    for ta, tb in zip(a.trees, b.trees):
        assert ta.shift[0] == tb.shift[0]
        np.testing.assert_array_equal(ta.perm, tb.perm)
    c = multitree_init(ds, 6)
    assert any(ta.shift[0] != tc.shift[0] for ta, tc in zip(a.trees, c.trees))


def test_independent_shifts_per_tree(rng):
    mt = multitree_init(random_dataset(rng, 30, 2), 1)
    assert len({t.shift[0] for t in mt.trees}) == 3


def test_min_of_trees(rng):
    ds = random_dataset(rng, 80, 4)
    mt = multitree_init(ds, 2)
    for p, q in rng.integers(0, 80, size=(200, 2)):
        assert multitree_dist(mt, p, q) == min(tree_dist(t, p, q) for t in mt.trees)
    assert multitree_dist(mt, 3, 3) == 0.0


def test_lower_bound_and_cap(rng):
    ds = random_dataset(rng, 200, 5)
    mt = multitree_init(ds, 3)
    D = squareform(pdist(ds.points))
    for p in range(200):
        md = np.array([multitree_dist(mt, p, q) for q in range(200)])
        assert np.all(D[p] <= md)
        assert np.all(md ** 2 <= mt.M)


def test_empty_set_and_set_distance(rng):
    ds = random_dataset(rng, 40, 2)
    mt = multitree_init(ds, 0)
    assert multitree_dist_to_set(mt, 0, []) == math.sqrt(mt.M)
    S = [1, 5, 9]
    assert multitree_dist_to_set(mt, 0, S) == min(multitree_dist(mt, 0, s) for s in S)


def test_ablation_tree_count(rng):
    ds = random_dataset(rng, 30, 2)
    one = multitree_init(ds, 0, n_trees=1)
    assert len(one.trees) == 1 and one.M == multitree_init(ds, 0).M
    with pytest.raises(ValueError):
        multitree_init(ds, 0, n_trees=0)


def test_invalid_index(rng):
    mt = multitree_init(random_dataset(rng, 10, 2), 0)
    with pytest.raises(IndexError):
        multitree_dist(mt, 0, 10)
