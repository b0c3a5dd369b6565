"""Permutation feature importance from a fitted forest, and top-k selection.

For tree ``t`` and feature ``j`` the raw importance is the tree's error on
its out-of-bag rows with column ``j`` shuffled, minus its unshuffled error.
A feature's score is the mean raw importance over trees divided by the
standard deviation over trees.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import FeatureMatrix
from .ensembles import Forest, _map
from .errors import check_dimension

SIGMA_FLOOR = 1e-12


@dataclass(eq=False)
class ImportanceReport:
    feature_names: tuple
    raw_mean: np.ndarray
    raw_std: np.ndarray
    scores: np.ndarray
    ranks: np.ndarray  # 1 = most important
    n_trees_used: int
    selected: tuple = ()
    k: int = 0

    def ranked(self) -> list[tuple[str, float]]:
        order = np.argsort(self.ranks, kind="stable")
        return [(self.feature_names[j], float(self.scores[j])) for j in order]


def _rank(scores) -> np.ndarray:
    order = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
    ranks = np.empty(len(scores), dtype=np.int64)
    ranks[order] = np.arange(1, len(scores) + 1)
    return ranks


def permutation_importance(forest: Forest, X, y, seed: int = 0, feature_names=None,
                           holdout=None, n_jobs: int = 1) -> ImportanceReport:
    """Score every feature by the error increase its shuffling causes.

    Parameters
    ----------
    forest : fitted forest. Bootstrap forests use each tree's out-of-bag rows
        of ``X``, which must be the forest's training matrix.
    X, y : training matrix and labels.
    seed : shuffles for (tree t, feature j) come from ``default_rng([seed, t, j])``,
        so results do not depend on evaluation order.
    holdout : optional ``(X_val, y_val)`` used for every tree instead of the
        out-of-bag rows; required for forests without bootstrap masks.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    check_dimension(forest.n_features, X.shape[1])
    n_features = X.shape[1]
    names = tuple(feature_names) if feature_names is not None else tuple(
        f"f{j}" for j in range(n_features))
    if holdout is None and forest.oob_masks is None:
        raise ValueError("this forest has no out-of-bag rows; pass a holdout slice")
    if holdout is None and forest.oob_masks.shape[1] != len(X):
        raise ValueError("X is not the matrix the forest was trained on")
    if holdout is not None:
        hx, hy = np.asarray(holdout[0], dtype=float), np.asarray(holdout[1], dtype=np.int64)

    def per_tree(t):
        tree = forest.trees[t]
        if holdout is None:
            rows = np.flatnonzero(forest.oob_masks[t])
            Xo, yo = X[rows], y[rows]
        else:
            Xo, yo = hx, hy
        if not len(yo):
            return None
        base = np.mean(tree.predict(Xo) != yo)
        raw = np.zeros(n_features)
        # shuffling a column the tree never tests cannot change its output
        for j in np.unique(tree.feature[tree.feature >= 0]):
            Xp = Xo.copy()
            Xp[:, j] = np.random.default_rng([seed, t, int(j)]).permutation(Xo[:, j])
            raw[j] = np.mean(tree.predict(Xp) != yo) - base
        return raw

    results = _map(per_tree, range(len(forest.trees)), n_jobs)
    skipped = [t for t, r in enumerate(results) if r is None]
    if skipped:
        warnings.warn(f"skipped {len(skipped)} trees with no out-of-bag rows", RuntimeWarning)
    used = [r for r in results if r is not None]
    if not used:
        raise ValueError("every tree lacks out-of-bag rows; importance is undefined")
    raw = np.vstack(used)
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    scores = mean / np.maximum(std, SIGMA_FLOOR)
    return ImportanceReport(names, mean, std, scores, _rank(scores), len(used))


def select_top_k(report: ImportanceReport, k: int) -> list[str]:
    """Names of the ``k`` best-ranked features, best first; recorded on the report."""
    n = len(report.feature_names)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    chosen = [name for name, _ in report.ranked()[:k]]
    report.selected = tuple(chosen)
    report.k = k
    return chosen


def project(m: FeatureMatrix, features) -> FeatureMatrix:
    """Restrict ``m`` to ``features`` in the given order."""
    features = list(features)
    unknown = [f for f in features if f not in m.feature_names]
    if unknown:
        raise ValueError("unknown feature name(s): " + ", ".join(unknown))
    idx = [m.feature_names.index(f) for f in features]
    sources = tuple(m.source_columns[i] for i in idx)
    vocab = {c: v for c, v in m.vocab.items() if c in sources}
    return replace(m, values=m.values[:, idx], feature_names=tuple(features),
                   source_columns=sources, vocab=vocab)


def write_importance(report: ImportanceReport, path) -> None:
    lines = ["feature,score"]
    lines += [f"{name},{score!r}" for name, score in report.ranked()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
