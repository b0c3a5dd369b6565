"""Binary CART classification trees.

Nodes are stored in flat arrays in preorder. ``feature[i] == -1`` marks a
leaf. Rows go left when ``x[feature] <= threshold``. Every node carries a
``value`` row: the weighted class distribution of the training rows that
reached it (a single regression value for residual trees).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import check_dimension

# Decreases closer than this are treated as equal (tie) and a decrease must
# exceed it to count as positive.
TIE_EPS = 1e-12


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = 16
    min_samples_split: int = 2
    min_leaf: int = 1
    criterion: str = "gini"

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.criterion not in ("gini", "entropy"):
            raise ValueError(f"unknown criterion {self.criterion!r}")


@dataclass(frozen=True)
class SplitCandidate:
    feature_index: int
    threshold: float
    impurity_decrease: float
    left_count: int
    right_count: int


@dataclass(frozen=True, eq=False)
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity_decrease: np.ndarray
    n_features: int
    params: TreeParams
    depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    @property
    def n_classes(self) -> int:
        return self.value.shape[1]

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=float)
        check_dimension(self.n_features, X.shape[1])
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while rows.size:
            f = self.feature[node[rows]]
            rows = rows[f >= 0]
            if not rows.size:
                break
            nd = node[rows]
            go_left = X[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
        return node

    def predict_proba(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def predict_tree(tree: DecisionTree, x) -> np.ndarray:
    """Class distribution of the leaf ``x`` lands in (rowwise for a matrix)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        check_dimension(tree.n_features, x.shape[0])
        return tree.predict_proba(x[None, :])[0]
    return tree.predict_proba(x)


# -- impurity -----------------------------------------------------------------


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("gini of an empty node is undefined")
    p = counts / total
    return float(1.0 - np.sum(p * p))


def entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("entropy of an empty node is undefined")
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p)))


def _impurity(counts, totals, criterion):
    # counts: (m, K) weighted class totals, totals: (m,)
    p = counts / totals[:, None]
    if criterion == "gini":
        return 1.0 - np.sum(p * p, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -np.sum(p * logs, axis=1)


def _midpoints(lo, hi):
    mid = (lo + hi) / 2.0
    # adjacent floats: the midpoint can round up onto hi
    return np.where(mid < hi, mid, lo)


# cap on n_rows * n_features * n_classes handled in one vectorized block
_BLOCK = 1 << 22


def _scan_block(V, Yw, w, min_leaf, parent_impurity, criterion):
    """Every valid midpoint cut on the columns of ``V``.

    Returns (column, threshold, decrease, n_left) arrays ordered by column,
    then by threshold.
    """
    n, f = V.shape
    order = np.argsort(V, axis=0, kind="stable")
    Vs = np.take_along_axis(V, order, axis=0)
    left_counts = np.cumsum(Yw[order], axis=0)
    left_weight = np.cumsum(w[order], axis=0)
    n_left = np.arange(1, n)[:, None]
    valid = (Vs[:-1] < Vs[1:]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    col, pos = np.nonzero(valid.T)
    if not pos.size:
        return None
    lc = left_counts[pos, col]
    rc = left_counts[-1, col] - lc
    lw = left_weight[pos, col]
    total_weight = left_weight[-1, col]
    rw = total_weight - lw
    dec = (parent_impurity
           - lw / total_weight * _impurity(lc, lw, criterion)
           - rw / total_weight * _impurity(rc, rw, criterion))
    thr = _midpoints(Vs[pos, col], Vs[pos + 1, col])
    return col, thr, dec, pos + 1


def _random_block(V, Yw, w, rng, min_leaf, parent_impurity, criterion):
    """One uniform cut per column of ``V`` (columns must be non-constant)."""
    lo, hi = V.min(axis=0), V.max(axis=0)
    thr = rng.uniform(lo, hi)
    go_left = V <= thr
    n_left = go_left.sum(axis=0)
    n_right = len(V) - n_left
    keep = (n_left >= min_leaf) & (n_right >= min_leaf)
    col = np.flatnonzero(keep)
    if not col.size:
        return None
    gl = go_left[:, col].astype(float)
    lc = gl.T @ Yw
    rc = Yw.sum(axis=0) - lc
    lw = gl.T @ w
    total = w.sum()
    rw = total - lw
    dec = (parent_impurity
           - lw / total * _impurity(lc, lw, criterion)
           - rw / total * _impurity(rc, rw, criterion))
    return col, thr[col], dec, n_left[col]


def _search(X, rows, feats, Yw, w, min_leaf, criterion, rng=None):
    """Best cut among ``feats`` at the node holding ``rows``.

    ``rng`` switches from exhaustive midpoints to one random cut per feature.
    Ties go to the lower feature index, then the lower threshold.
    """
    parent = _impurity(Yw.sum(axis=0)[None, :], np.array([w.sum()]), criterion)[0]
    n, k = len(rows), Yw.shape[1]
    step = max(1, _BLOCK // max(1, n * k))
    found = []
    for start in range(0, len(feats), step):
        chunk = feats[start:start + step]
        V = X[np.ix_(rows, chunk)]
        if rng is None:
            got = _scan_block(V, Yw, w, min_leaf, parent, criterion)
        else:
            got = _random_block(V, Yw, w, rng, min_leaf, parent, criterion)
        if got is not None:
            col, thr, dec, n_left = got
            found.append((chunk[col], thr, dec, n_left))
    if not found:
        return None
    feat = np.concatenate([g[0] for g in found])
    thr = np.concatenate([g[1] for g in found])
    dec = np.concatenate([g[2] for g in found])
    n_left = np.concatenate([g[3] for g in found])
    best = dec.max()
    if best <= TIE_EPS:
        return None
    i = int(np.flatnonzero(dec >= best - TIE_EPS)[0])
    return SplitCandidate(int(feat[i]), float(thr[i]), float(dec[i]),
                          int(n_left[i]), n - int(n_left[i]))


def _weighted_onehot(y, w, n_classes):
    Yw = np.zeros((len(y), n_classes))
    Yw[np.arange(len(y)), y] = w
    return Yw


def best_split(X, y, feature_subset, min_leaf: int = 1, n_classes: int | None = None,
               sample_weight=None, criterion: str = "gini") -> SplitCandidate | None:
    """Exhaustive midpoint search over ``feature_subset``.

    Returns the cut with the largest impurity decrease, ties going to the
    lower feature index and then the lower threshold, or None when no cut
    has a strictly positive decrease while leaving ``min_leaf`` rows per side.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("best_split needs at least one row")
    feats = sorted(int(f) for f in feature_subset)
    if not feats:
        raise ValueError("feature_subset must not be empty")
    k = int(y.max()) + 1 if n_classes is None else n_classes
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    Yw = _weighted_onehot(y, w, k)
    return _search(X, np.arange(len(y)), np.array(feats), Yw, w, min_leaf, criterion)


# -- growth ---------------------------------------------------------------------


def candidate_features(X_node, max_features, rng):
    """Non-constant columns at a node, subsampled to ``max_features``."""
    nonconst = np.flatnonzero(X_node.max(axis=0) > X_node.min(axis=0))
    if max_features is None or max_features >= len(nonconst):
        return nonconst
    return np.sort(rng.choice(nonconst, size=max_features, replace=False))


def grow_tree(X, rows, params: TreeParams, leaf_value, find_split, is_pure,
              max_features, rng) -> DecisionTree:
    """Depth-first growth shared by classification and residual trees.

    ``find_split(rows, features)`` returns a SplitCandidate or None,
    ``leaf_value(rows)`` the node's value vector.
    """
    feature, threshold, left, right, value, decrease = [], [], [], [], [], []
    max_depth = params.max_depth
    deepest = 0
    stack = [(rows, 0, -1, False)]
    while stack:
        node_rows, depth, parent, is_left = stack.pop()
        node = len(feature)
        deepest = max(deepest, depth)
        if parent >= 0:
            (left if is_left else right)[parent] = node
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        decrease.append(0.0)
        value.append(leaf_value(node_rows))

        n = len(node_rows)
        if (max_depth is not None and depth >= max_depth) or n < params.min_samples_split \
                or n < 2 * params.min_leaf or is_pure(node_rows):
            continue
        feats = candidate_features(X[node_rows], max_features, rng)
        if not feats.size:
            continue
        split = find_split(node_rows, feats)
        if split is None:
            continue
        feature[node] = split.feature_index
        threshold[node] = split.threshold
        decrease[node] = split.impurity_decrease
        go_left = X[node_rows, split.feature_index] <= split.threshold
        stack.append((node_rows[~go_left], depth + 1, node, False))
        stack.append((node_rows[go_left], depth + 1, node, True))

    return DecisionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=float),
        impurity_decrease=np.array(decrease, dtype=float),
        n_features=X.shape[1],
        params=params,
        depth=deepest,
    )


def fit_tree(X, y, params: TreeParams = TreeParams(), n_classes: int | None = None,
             max_features: int | None = None, cut_rule: str = "best", seed=0,
             sample_weight=None) -> DecisionTree:
    """Grow a classification tree.

    Parameters
    ----------
    X, y : training matrix and zero-based class labels.
    max_features : size of the random feature subset drawn at every node
        (None uses every non-constant feature).
    cut_rule : "best" searches all midpoints; "random" draws one uniform
        threshold per candidate feature and keeps the best of those.
    seed : int or sequence of ints fed to ``numpy.random.default_rng``.
    sample_weight : optional non-negative row weights; zero-weight rows are
        left out entirely.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("cannot fit a tree on zero rows")
    if cut_rule not in ("best", "random"):
        raise ValueError(f"unknown cut_rule {cut_rule!r}")
    k = int(y.max()) + 1 if n_classes is None else n_classes
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    rows = np.flatnonzero(w > 0)
    if not rows.size:
        raise ValueError("all sample weights are zero")
    rng = np.random.default_rng(seed)
    Yw = _weighted_onehot(y, w, k)
    criterion = params.criterion

    def leaf_value(r):
        counts = Yw[r].sum(axis=0)
        return counts / counts.sum()

    def is_pure(r):
        labels = y[r]
        return labels.min() == labels.max()

    def find_split(r, feats):
        return _search(X, r, feats, Yw[r], w[r], params.min_leaf, criterion,
                       rng if cut_rule == "random" else None)

    return grow_tree(X, rows, params, leaf_value, find_split, is_pure, max_features, rng)
