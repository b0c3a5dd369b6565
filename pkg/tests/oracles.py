"""Slow, obviously-correct reference implementations used by the tests."""

from collections import Counter
from fractions import Fraction

import numpy as np


def gini_of(labels, n_classes):
    n = len(labels)
    c = Counter(labels)
    return 1.0 - sum((c[k] / n) ** 2 for k in range(n_classes))


def brute_force_split(X, y, features, n_classes, min_leaf=1):
    """Every (feature, midpoint) pair, scored one at a time.

    Returns ``(feature, threshold, decrease)`` or None, with ties going to
    the lower feature and then the lower threshold.
    """
    n = len(y)
    parent = gini_of(list(y), n_classes)
    candidates = []
    for f in sorted(features):
        values = sorted(set(X[:, f].tolist()))
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2.0
            left = [y[i] for i in range(n) if X[i, f] <= thr]
            right = [y[i] for i in range(n) if X[i, f] > thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            dec = parent - (len(left) * gini_of(left, n_classes)
                            + len(right) * gini_of(right, n_classes)) / n
            candidates.append((f, thr, dec))
    if not candidates:
        return None
    top = max(c[2] for c in candidates)
    if top <= 1e-12:
        return None
    return next(c for c in candidates if c[2] >= top - 1e-12)


def count_metrics(y_true, y_pred, n_classes, averaging):
    """Accuracy / precision / recall / F from explicit pair counting.

    Everything is kept as an exact fraction and rounded to float at the end.
    Classes absent from both the truth and the predictions take no part in
    the macro average; 0/0 counts as 0.
    """
    pairs = list(zip(y_true, y_pred))
    acc = Fraction(sum(1 for t, p in pairs if t == p), len(pairs))
    present = sorted(set(y_true) | set(y_pred))
    per = {}
    for k in range(n_classes):
        tp = sum(1 for t, p in pairs if t == k and p == k)
        fp = sum(1 for t, p in pairs if t != k and p == k)
        fn = sum(1 for t, p in pairs if t == k and p != k)
        prec = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        rec = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        f = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
        per[k] = (prec, rec, f, tp + fn)
    if averaging == "macro":
        w = {k: Fraction(int(k in present), len(present)) for k in range(n_classes)}
    else:
        w = {k: Fraction(per[k][3], len(pairs)) for k in range(n_classes)}
    avg = [sum(w[k] * per[k][i] for k in range(n_classes)) for i in range(3)]
    return float(acc), float(avg[0]), float(avg[1]), float(avg[2])


def vote_mode(votes, n_classes):
    """Most common class in ``votes``, lowest class on ties."""
    c = Counter(votes)
    top = max(c[k] for k in range(n_classes))
    return min(k for k in range(n_classes) if c[k] == top)


def central_difference(fn, w, h=1e-5):
    g = np.zeros_like(w)
    for i in range(len(w)):
        up, down = w.copy(), w.copy()
        up[i] += h
        down[i] -= h
        g[i] = (fn(up) - fn(down)) / (2 * h)
    return g


def chi_square(x_codes, y, n_classes):
    """Pearson chi-square statistic of a contingency table."""
    cats = sorted(set(x_codes))
    table = np.zeros((len(cats), n_classes))
    index = {c: i for i, c in enumerate(cats)}
    for a, b in zip(x_codes, y):
        table[index[a], b] += 1
    expected = table.sum(1, keepdims=True) * table.sum(0, keepdims=True) / table.sum()
    mask = expected > 0
    return float((((table - expected) ** 2)[mask] / expected[mask]).sum())
