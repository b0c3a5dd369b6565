"""The five ensemble classifiers behind one ``predict`` entry point.

* Random Forest: bootstrap samples, best cuts over a random feature subset.
* Extra Trees: every tree sees all rows, one random cut per candidate feature.
* AdaBoost (SAMME) over depth-1 stumps.
* Gradient boosting with softmax loss, K residual trees per round.
* Hard voting over a logistic-regression and a hinge-loss SGD classifier.

All fitted models are frozen dataclasses. Member seeds come from the master
seed and the member index, so ``n_jobs`` never changes a fitted model.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import singledispatch

import numpy as np

from .errors import DivergenceError, check_dimension
from .linear import LinearModel, SgdConfig, predict_linear, sgd_fit
from .seeding import derive_seed
from .tree import TIE_EPS, DecisionTree, SplitCandidate, TreeParams, _midpoints, fit_tree, grow_tree

MODEL_ORDER = ("voting", "rf", "adaboost", "extratrees", "gbm")
DISPLAY_NAMES = {
    "voting": "Voting Classifier",
    "rf": "Random Forest",
    "adaboost": "AdaBoost Classifier",
    "extratrees": "Extra Tree Classifier",
    "gbm": "Gradient Boosting Machine",
}


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: int | str | None = "sqrt"
    tree: TreeParams = TreeParams()

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")


@dataclass(frozen=True)
class AdaBoostParams:
    rounds: int = 50

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")


@dataclass(frozen=True)
class GbmParams:
    rounds: int = 100
    shrinkage: float = 0.1
    tree: TreeParams = TreeParams(max_depth=3)
    max_features: int | str | None = None

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must lie in (0, 1]")


@dataclass(frozen=True)
class ModelParams:
    rf: ForestParams = ForestParams()
    extratrees: ForestParams = ForestParams()
    adaboost: AdaBoostParams = AdaBoostParams()
    gbm: GbmParams = GbmParams()
    lr: SgdConfig = SgdConfig()
    sgd: SgdConfig = SgdConfig()


def resolve_max_features(spec, n_features: int) -> int | None:
    """Turn "sqrt" / "all" / None / an int into a subset size."""
    if spec is None or spec == "all":
        return None
    if spec == "sqrt":
        return max(1, int(math.isqrt(n_features)))
    k = int(spec)
    if not 1 <= k <= n_features:
        raise ValueError(f"max_features must lie in [1, {n_features}], got {k}")
    return k


def _labels(y, n_classes):
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("cannot fit on zero rows")
    return y, (int(y.max()) + 1 if n_classes is None else n_classes)


def _map(fn, items, n_jobs):
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _vote(predictions, n_classes, weights=None):
    """Column-wise weighted vote count; argmax picks the lowest class on ties."""
    n = predictions.shape[1]
    scores = np.zeros((n, n_classes))
    w = np.ones(len(predictions)) if weights is None else weights
    cols = np.arange(n)
    for wi, pred in zip(w, predictions):
        scores[cols, pred] += wi
    return scores


def _single(x):
    x = np.asarray(x, dtype=float)
    return (x[None, :], True) if x.ndim == 1 else (x, False)


# -- forests ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple
    oob_masks: np.ndarray | None  # (n_trees, n_train) True where a row is out of bag
    variant: str  # "bootstrap_rf" or "full_sample_extra"
    n_classes: int
    n_features: int

    def tree_predictions(self, X) -> np.ndarray:
        return np.vstack([t.predict(X) for t in self.trees])


def fit_random_forest(X, y, n_trees: int = 100, max_features="sqrt",
                      tree_params: TreeParams = TreeParams(), seed: int = 0,
                      n_classes: int | None = None, bootstrap: bool = True,
                      n_jobs: int = 1) -> Forest:
    """Bagged CART trees with a fresh random feature subset at every node.

    Tree ``i`` draws its bootstrap sample and feature subsets from seeds
    derived from ``(seed, i)``. ``bootstrap=False`` trains every tree on
    all rows (useful for checking that a one-tree forest is a plain tree).
    """
    X = np.asarray(X, dtype=float)
    y, k = _labels(y, n_classes)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    n, f = X.shape
    mf = resolve_max_features(max_features, f)

    def grow(i):
        rows = np.random.default_rng(derive_seed(seed, i, 0)).integers(0, n, n) \
            if bootstrap else np.arange(n)
        tree = fit_tree(X[rows], y[rows], tree_params, k, mf, "best", derive_seed(seed, i, 1))
        oob = np.ones(n, dtype=bool)
        oob[rows] = False
        return tree, oob

    grown = _map(grow, range(n_trees), n_jobs)
    masks = np.vstack([g[1] for g in grown]) if bootstrap else None
    return Forest(tuple(g[0] for g in grown), masks, "bootstrap_rf", k, f)


def fit_extra_trees(X, y, n_trees: int = 100, max_features="sqrt",
                    tree_params: TreeParams = TreeParams(), seed: int = 0,
                    n_classes: int | None = None, n_jobs: int = 1) -> Forest:
    """Randomized trees on the complete sample; no out-of-bag rows exist."""
    X = np.asarray(X, dtype=float)
    y, k = _labels(y, n_classes)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    mf = resolve_max_features(max_features, X.shape[1])

    def grow(i):
        return fit_tree(X, y, tree_params, k, mf, "random", derive_seed(seed, i, 1))

    trees = _map(grow, range(n_trees), n_jobs)
    return Forest(tuple(trees), None, "full_sample_extra", k, X.shape[1])


def predict_majority(forest: Forest, x):
    """Mode of the per-tree argmax classes; ties go to the lower class."""
    X, single = _single(x)
    check_dimension(forest.n_features, X.shape[1])
    votes = _vote(forest.tree_predictions(X), forest.n_classes)
    pred = np.argmax(votes, axis=1)
    return int(pred[0]) if single else pred


# -- AdaBoost -----------------------------------------------------------------------

# error floor used for the stage weight of a perfect weak learner
_ERR_FLOOR = 1e-10


def samme_alpha(error: float, n_classes: int) -> float:
    return math.log((1.0 - error) / error) + math.log(n_classes - 1)


def samme_reweight(weights, missed, alpha):
    """Boost misclassified rows by ``exp(alpha)`` and renormalize to sum 1."""
    w = np.where(missed, weights * math.exp(alpha), weights)
    return w / w.sum()


@dataclass(frozen=True, eq=False)
class BoostedStumps:
    stumps: tuple
    alphas: tuple
    errors: tuple
    n_classes: int
    n_features: int


def fit_adaboost(X, y, rounds: int = 50, seed: int = 0, n_classes: int | None = None,
                 max_depth: int = 1) -> BoostedStumps:
    """Multiclass SAMME over weighted-Gini stumps.

    Stops after a perfect round (error 0, kept with a large finite weight)
    or at the first round no better than chance (error >= 1 - 1/K, dropped).
    """
    X = np.asarray(X, dtype=float)
    y, k = _labels(y, n_classes)
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    n = len(y)
    w = np.full(n, 1.0 / n)
    params = TreeParams(max_depth=max_depth)
    stumps, alphas, errors = [], [], []
    for m in range(rounds):
        stump = fit_tree(X, y, params, k, None, "best", derive_seed(seed, m), sample_weight=w)
        missed = stump.predict(X) != y
        err = float(w[missed].sum())
        if err >= 1.0 - 1.0 / k:
            if not stumps:
                raise ValueError(
                    f"first AdaBoost round has weighted error {err:.4f}, no better than chance")
            break
        alpha = samme_alpha(max(err, _ERR_FLOOR), k)
        stumps.append(stump)
        alphas.append(alpha)
        errors.append(err)
        if err <= 0.0:
            break
        w = samme_reweight(w, missed, alpha)
    return BoostedStumps(tuple(stumps), tuple(alphas), tuple(errors), k, X.shape[1])


def adaboost_scores(model: BoostedStumps, X) -> np.ndarray:
    preds = np.vstack([s.predict(X) for s in model.stumps])
    return _vote(preds, model.n_classes, np.asarray(model.alphas))


# -- gradient boosting ----------------------------------------------------------------

# floor for empty-class priors and Newton-step denominators
_PROB_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class GradientBoosting:
    init: np.ndarray  # per-class log-prior scores
    trees: tuple  # rounds x n_classes residual trees
    shrinkage: float
    n_classes: int
    n_features: int
    train_loss: tuple = field(default=())  # loss before round 1, then after each round


def _mse_search(X, rows, feats, r, min_leaf):
    n = len(rows)
    V = X[np.ix_(rows, feats)]
    order = np.argsort(V, axis=0, kind="stable")
    Vs = np.take_along_axis(V, order, axis=0)
    rs = r[order]
    s1 = np.cumsum(rs, axis=0)
    s2 = np.cumsum(rs * rs, axis=0)
    tot1, tot2 = s1[-1], s2[-1]
    n_left = np.arange(1, n)[:, None]
    valid = (Vs[:-1] < Vs[1:]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    col, pos = np.nonzero(valid.T)
    if not pos.size:
        return None
    nl = (pos + 1).astype(float)
    left = s2[pos, col] - s1[pos, col] ** 2 / nl
    right = (tot2[col] - s2[pos, col]) - (tot1[col] - s1[pos, col]) ** 2 / (n - nl)
    parent = tot2[col] - tot1[col] ** 2 / n
    dec = (parent - left - right) / n
    best = dec.max()
    if best <= TIE_EPS:
        return None
    i = int(np.flatnonzero(dec >= best - TIE_EPS)[0])
    thr = _midpoints(Vs[pos[i], col[i]], Vs[pos[i] + 1, col[i]])
    return SplitCandidate(int(feats[col[i]]), float(thr), float(dec[i]),
                          int(pos[i] + 1), n - int(pos[i] + 1))


def _fit_residual_tree(X, residual, params: TreeParams, n_classes, max_features, seed):
    """Least-squares tree on the residuals, leaves set to the softmax Newton step."""
    rows = np.arange(len(residual))
    tree = grow_tree(
        X, rows, params,
        leaf_value=lambda r: np.array([residual[r].mean()]),
        find_split=lambda r, feats: _mse_search(X, r, feats, residual[r], params.min_leaf),
        is_pure=lambda r: np.ptp(residual[r]) <= TIE_EPS,
        max_features=max_features,
        rng=np.random.default_rng(seed),
    )
    leaves = tree.apply(X)
    value = tree.value.copy()
    a = np.abs(residual)
    num = np.bincount(leaves, weights=residual, minlength=tree.n_nodes)
    den = np.bincount(leaves, weights=a * (1.0 - a), minlength=tree.n_nodes)
    hit = np.bincount(leaves, minlength=tree.n_nodes) > 0
    step = (n_classes - 1) / n_classes * num / np.maximum(den, _PROB_FLOOR)
    value[hit, 0] = step[hit]
    return replace(tree, value=value)


def softmax(F):
    z = F - F.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_loss(F, y) -> float:
    """Mean multiclass cross-entropy of raw scores ``F`` against labels ``y``."""
    z = F - F.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(log_norm - z[np.arange(len(y)), y]))


def fit_gbm(X, y, rounds: int = 100, shrinkage: float = 0.1,
            tree_params: TreeParams = TreeParams(max_depth=3), seed: int = 0,
            n_classes: int | None = None, max_features=None) -> GradientBoosting:
    """Softmax gradient boosting.

    Scores start at the per-class log-prior. Each round fits one
    least-squares tree per class to ``onehot - softmax`` and adds the
    shrunken Newton leaf values.
    """
    X = np.asarray(X, dtype=float)
    y, k = _labels(y, n_classes)
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not 0.0 < shrinkage <= 1.0:
        raise ValueError("shrinkage must lie in (0, 1]")
    n, f = X.shape
    mf = resolve_max_features(max_features, f)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0
    prior = np.bincount(y, minlength=k) / n
    init = np.log(np.maximum(prior, _PROB_FLOOR))
    F = np.tile(init, (n, 1))
    losses = [softmax_loss(F, y)]
    trees = []
    for m in range(rounds):
        P = softmax(F)
        stage = []
        for c in range(k):
            tree = _fit_residual_tree(X, onehot[:, c] - P[:, c], tree_params, k, mf,
                                      derive_seed(seed, m, c))
            F[:, c] += shrinkage * tree.value[tree.apply(X), 0]
            stage.append(tree)
        trees.append(tuple(stage))
        losses.append(softmax_loss(F, y))
        if not (np.all(np.isfinite(F)) and np.isfinite(losses[-1])):
            raise DivergenceError(f"gradient boosting scores became non-finite in round {m + 1}")
    return GradientBoosting(init, tuple(trees), shrinkage, k, f, tuple(losses))


def gbm_decision_function(model: GradientBoosting, X, n_rounds: int | None = None) -> np.ndarray:
    """Raw class scores after ``n_rounds`` rounds (all rounds by default)."""
    X = np.asarray(X, dtype=float)
    check_dimension(model.n_features, X.shape[1])
    F = np.tile(model.init, (len(X), 1))
    for stage in model.trees[:n_rounds]:
        for c, tree in enumerate(stage):
            F[:, c] += model.shrinkage * tree.value[tree.apply(X), 0]
    return F


# -- voting -------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VotingPair:
    lr: LinearModel
    sgd: LinearModel

    @property
    def n_classes(self) -> int:
        return self.lr.n_classes

    @property
    def n_features(self) -> int:
        return self.lr.n_features


def fit_voting(X, y, lr_cfg: SgdConfig = SgdConfig(), sgd_cfg: SgdConfig = SgdConfig(),
               n_classes: int | None = None, n_jobs: int = 1) -> VotingPair:
    y, k = _labels(y, n_classes)
    return VotingPair(sgd_fit(X, y, "log", lr_cfg, k, n_jobs),
                      sgd_fit(X, y, "hinge", sgd_cfg, k, n_jobs))


def predict_voting(v: VotingPair, x):
    """Shared class when the two members agree, else the logistic member's class.

    A two-voter hard vote either agrees or ties, and ties go to the logistic
    member, so the result is always the logistic member's class.
    """
    return predict_linear(v.lr, x)


def voting_agreement(v: VotingPair, X) -> np.ndarray:
    """True where both members predict the same class."""
    return np.asarray(predict_linear(v.lr, X) == predict_linear(v.sgd, X))


# -- uniform dispatch ----------------------------------------------------------------------


@singledispatch
def predict(model, x):
    """Class index (1-D input) or index array (2-D input) for any fitted model."""
    raise TypeError(f"cannot predict with {type(model).__name__}")


@predict.register
def _(model: Forest, x):
    return predict_majority(model, x)


@predict.register
def _(model: BoostedStumps, x):
    X, single = _single(x)
    check_dimension(model.n_features, X.shape[1])
    pred = np.argmax(adaboost_scores(model, X), axis=1)
    return int(pred[0]) if single else pred


@predict.register
def _(model: GradientBoosting, x):
    X, single = _single(x)
    pred = np.argmax(gbm_decision_function(model, X), axis=1)
    return int(pred[0]) if single else pred


@predict.register
def _(model: VotingPair, x):
    return predict_voting(model, x)


@predict.register
def _(model: LinearModel, x):
    return predict_linear(model, x)


@predict.register
def _(model: DecisionTree, x):
    X, single = _single(x)
    pred = model.predict(X)
    return int(pred[0]) if single else pred


def fit_named(name: str, X, y, n_classes: int, params: ModelParams = ModelParams(),
              seed: int = 0, n_jobs: int = 1):
    """Fit one of ``MODEL_ORDER`` with its parameter block and a derived seed."""
    if name not in MODEL_ORDER:
        raise ValueError(f"unknown model {name!r}; choose from {', '.join(MODEL_ORDER)}")
    member_seed = derive_seed(seed, MODEL_ORDER.index(name))
    if name == "rf":
        p = params.rf
        return fit_random_forest(X, y, p.n_trees, p.max_features, p.tree, member_seed,
                                 n_classes, n_jobs=n_jobs)
    if name == "extratrees":
        p = params.extratrees
        return fit_extra_trees(X, y, p.n_trees, p.max_features, p.tree, member_seed,
                               n_classes, n_jobs=n_jobs)
    if name == "adaboost":
        return fit_adaboost(X, y, params.adaboost.rounds, member_seed, n_classes)
    if name == "gbm":
        p = params.gbm
        return fit_gbm(X, y, p.rounds, p.shrinkage, p.tree, member_seed, n_classes,
                       p.max_features)
    lr = replace(params.lr, seed=derive_seed(member_seed, 0))
    sgd = replace(params.sgd, seed=derive_seed(member_seed, 1))
    return fit_voting(X, y, lr, sgd, n_classes, n_jobs)
