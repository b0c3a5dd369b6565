import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from roadsev.errors import DimensionError
from roadsev.tree import (DecisionTree, TreeParams, best_split, entropy, fit_tree, gini,
                          predict_tree)

from oracles import brute_force_split


def test_gini_values():
    assert gini([4, 0, 0, 0]) == 0.0
    assert gini([1, 1]) == 0.5
    assert gini([2, 1]) == pytest.approx(4 / 9, abs=1e-15)
    with pytest.raises(ValueError):
        gini([0, 0])


@given(st.lists(st.integers(0, 50), min_size=2, max_size=5).filter(lambda c: sum(c) > 0))
def test_gini_range(counts):
    k = len(counts)
    assert -1e-15 <= gini(counts) <= 1 - 1 / k + 1e-12


def test_entropy_binary_even_split():
    assert entropy([3, 3]) == pytest.approx(1.0)


def test_best_split_four_rows():
    s = best_split(np.array([[1.0], [2.0], [3.0], [4.0]]), [0, 0, 1, 1], [0])
    assert (s.feature_index, s.threshold) == (0, 2.5)
    assert s.impurity_decrease == pytest.approx(0.5, abs=1e-12)
    assert (s.left_count, s.right_count) == (2, 2)


def test_best_split_pure_node_is_none():
    X = np.array([[1.0], [2.0], [3.0]])
    assert best_split(X, [1, 1, 1], [0]) is None


def test_best_split_tie_goes_to_lower_feature():
    col = np.array([1.0, 2.0, 3.0, 4.0])
    X = np.column_stack([col, col])
    s = best_split(X, [0, 0, 1, 1], [1, 0])
    assert s.feature_index == 0


def test_best_split_respects_min_leaf():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    s = best_split(X, [0, 1, 1, 1], [0], min_leaf=2)
    assert (s.left_count, s.right_count) == (2, 2)
    assert best_split(X, [0, 1, 1, 1], [0], min_leaf=3) is None


small_matrix = st.integers(1, 6).flatmap(lambda n: st.tuples(
    arrays(np.float64, (n, 3), elements=st.sampled_from([0.0, 0.5, 1.0, 2.0, -1.5, 3.25])),
    arrays(np.int64, n, elements=st.integers(0, 2)),
    st.lists(st.integers(0, 2), min_size=1, max_size=3, unique=True),
    st.integers(1, 2),
))


@given(small_matrix)
def test_best_split_matches_brute_force(case):
    X, y, feats, min_leaf = case
    got = best_split(X, y, feats, min_leaf=min_leaf, n_classes=3)
    want = brute_force_split(X, y, feats, 3, min_leaf)
    if want is None:
        assert got is None
    else:
        assert (got.feature_index, got.threshold) == (want[0], want[1])
        assert abs(got.impurity_decrease - want[2]) <= 1e-12


def test_fit_separable_four_rows_depth_two():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 2, 2])
    t = fit_tree(X, y, TreeParams(max_depth=2))
    assert np.array_equal(t.predict(X), y)
    assert t.depth <= 2


def test_depth_zero_is_majority_leaf():
    X = np.arange(6.0)[:, None]
    t = fit_tree(X, [1, 1, 1, 0, 2, 1], TreeParams(max_depth=0))
    assert t.n_nodes == 1
    assert np.all(t.predict(X) == 1)


def _same_tree(a: DecisionTree, b: DecisionTree):
    return all(np.array_equal(getattr(a, f), getattr(b, f)) for f in
               ("feature", "threshold", "left", "right", "value", "impurity_decrease"))


def test_fit_is_deterministic(rng):
    X = rng.normal(size=(80, 5))
    y = rng.integers(0, 3, 80)
    for rule in ("best", "random"):
        a = fit_tree(X, y, max_features=2, cut_rule=rule, seed=4)
        b = fit_tree(X, y, max_features=2, cut_rule=rule, seed=4)
        assert _same_tree(a, b)


def test_single_leaf_returns_its_distribution():
    t = DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                     np.array([[0.25, 0.75]]), np.array([0.0]), 3, TreeParams(), 0)
    assert predict_tree(t, [9.0, -1.0, 0.0]).tolist() == [0.25, 0.75]


def test_pure_leaves_reproduce_training_labels():
    X = np.array([[0.1], [0.4], [0.5], [0.9], [1.3], [2.0]])
    y = np.array([0, 0, 1, 1, 0, 2])
    t = fit_tree(X, y, TreeParams(max_depth=None))
    assert np.array_equal(t.predict(X), y)


def test_wrong_dimension_raises():
    t = fit_tree(np.eye(3), [0, 1, 1])
    with pytest.raises(DimensionError):
        predict_tree(t, [1.0, 2.0])


@given(st.integers(0, 10_000), st.sampled_from(["best", "random"]),
       st.sampled_from([None, 1, 2]))
def test_tree_structure_invariants(seed, rule, max_features):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 40))
    X = rng.integers(0, 5, size=(n, 3)).astype(float)
    y = rng.integers(0, 3, n)
    params = TreeParams(max_depth=int(rng.integers(0, 6)))
    t = fit_tree(X, y, params, 3, max_features, rule, seed)
    leaves = t.feature < 0
    assert np.allclose(t.value[leaves].sum(axis=1), 1.0, atol=1e-9)
    assert np.all(t.impurity_decrease[~leaves] > 0)
    assert t.depth <= params.max_depth
    # left iff value <= threshold along the path of every row
    for i in range(n):
        node = 0
        while t.feature[node] >= 0:
            go_left = X[i, t.feature[node]] <= t.threshold[node]
            node = t.left[node] if go_left else t.right[node]
        assert node == t.apply(X[i:i + 1])[0]


@given(st.integers(0, 10_000))
def test_full_tree_fits_consistent_data(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 3)).round(2)
    _, first = np.unique(X, axis=0, return_index=True)
    X = X[np.sort(first)]
    y = rng.integers(0, 4, len(X))
    t = fit_tree(X, y, TreeParams(max_depth=None), 4)
    assert np.array_equal(t.predict(X), y)


@given(st.integers(0, 10_000))
def test_perturbation_within_cell_keeps_prediction(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 2))
    y = (X[:, 0] > 0).astype(int)
    t = fit_tree(X, y, TreeParams(max_depth=3))
    x = rng.normal(size=2)
    leaf = t.apply(x[None, :])[0]
    # random move of x clipped to the box of thresholds on its path
    lo, hi = np.full(2, -np.inf), np.full(2, np.inf)
    node = 0
    while t.feature[node] >= 0:
        f, thr = t.feature[node], t.threshold[node]
        if x[f] <= thr:
            hi[f] = min(hi[f], thr)
            node = t.left[node]
        else:
            lo[f] = max(lo[f], thr)
            node = t.right[node]
    target = np.clip(x + rng.normal(size=2), np.nextafter(lo, np.inf), hi)
    assert t.apply(target[None, :])[0] == leaf
