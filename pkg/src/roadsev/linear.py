"""One-vs-rest linear classifiers trained by mini-batch SGD.

Two losses are supported: ``"log"`` (logistic regression) and ``"hinge"``
(linear SVM-style classifier). Each weight row ends with its intercept.
With two classes a single binary problem (class 1 vs class 0) is trained.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, check_dimension

# logistic exponent clamp; keeps exp() finite for any input
EXP_CLAMP = 500.0

LOSSES = ("log", "hinge")


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.01
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    l2: float = 1e-4

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray  # (n_problems, n_features + 1)
    loss_kind: str
    n_classes: int
    loss_history: np.ndarray | None = None  # (n_problems, epochs), not persisted

    def __post_init__(self):
        if self.loss_kind not in LOSSES:
            raise ValueError(f"unknown loss {self.loss_kind!r}")
        if not np.all(np.isfinite(self.weights)):
            raise DivergenceError("linear model has non-finite weights")
        expected = 1 if self.n_classes == 2 else self.n_classes
        if self.weights.shape[0] != expected:
            raise ValueError(f"expected {expected} weight rows, got {self.weights.shape[0]}")

    @property
    def n_features(self) -> int:
        return self.weights.shape[1] - 1

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        check_dimension(self.n_features, X.shape[1])
        return X @ self.weights[:, :-1].T + self.weights[:, -1]


def sigmoid(s):
    return 1.0 / (1.0 + np.exp(-np.clip(s, -EXP_CLAMP, EXP_CLAMP)))


def logit_probability(model: LinearModel, x) -> np.ndarray:
    """Class probabilities from the logistic link.

    Binary models return ``[1 - p, p]``; one-vs-rest models return the
    per-class sigmoid scores rescaled to sum to one.
    """
    if model.loss_kind != "log":
        raise ValueError("probabilities need a log-loss model")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    p = sigmoid(model.decision_function(X))
    if model.n_classes == 2:
        out = np.column_stack([1.0 - p[:, 0], p[:, 0]])
    else:
        out = p / p.sum(axis=1, keepdims=True)
    return out[0] if single else out


def predict_linear(model: LinearModel, x):
    """Argmax of the raw scores, ties to the lower class index."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    scores = model.decision_function(x[None, :] if single else x)
    if model.n_classes == 2:
        pred = (scores[:, 0] > 0).astype(np.int64)
    else:
        pred = np.argmax(scores, axis=1)
    return int(pred[0]) if single else pred


def loss_and_gradient(weights, X, targets, loss_kind: str = "log", l2: float = 0.0):
    """Mean loss of one binary problem and its gradient.

    ``weights`` has the intercept last; ``targets`` are 0/1. The L2 term
    ``l2 / 2 * |beta|^2`` leaves the intercept unpenalized.
    """
    weights = np.asarray(weights, dtype=float)
    X = np.asarray(X, dtype=float)
    t = np.asarray(targets, dtype=float)
    n = len(t)
    if n == 0:
        raise ValueError("empty batch")
    s = X @ weights[:-1] + weights[-1]
    if loss_kind == "log":
        losses = np.logaddexp(0.0, s) - t * s
        coef = sigmoid(s) - t
    elif loss_kind == "hinge":
        z = 2.0 * t - 1.0
        margin = z * s
        losses = np.maximum(0.0, 1.0 - margin)
        coef = np.where(margin < 1.0, -z, 0.0)
    else:
        raise ValueError(f"unknown loss {loss_kind!r}")
    beta = weights[:-1]
    loss = losses.mean() + 0.5 * l2 * float(beta @ beta)
    grad = np.empty_like(weights)
    grad[:-1] = X.T @ coef / n + l2 * beta
    grad[-1] = coef.mean()
    return float(loss), grad


def _train_binary(X, t, loss_kind, cfg: SgdConfig, rng):
    n, f = X.shape
    w = np.zeros(f + 1)
    history = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        # overflow surfaces as a non-finite loss, checked below
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, cfg.batch_size):
                batch = order[start:start + cfg.batch_size]
                loss, grad = loss_and_gradient(w, X[batch], t[batch], loss_kind, cfg.l2)
                total += loss * len(batch)
                w -= cfg.learning_rate * grad
        history[epoch] = total / n
        if not (np.isfinite(history[epoch]) and np.all(np.isfinite(w))):
            raise DivergenceError(
                f"SGD ({loss_kind} loss) diverged in epoch {epoch + 1}; "
                f"try a smaller learning_rate than {cfg.learning_rate}")
    return w, history


def sgd_fit(X, y, loss_kind: str = "log", cfg: SgdConfig = SgdConfig(),
            n_classes: int | None = None, n_jobs: int = 1) -> LinearModel:
    """Fit one binary problem per class by shuffled mini-batch SGD.

    Each problem draws its shuffles from a generator seeded by
    ``(cfg.seed, problem index)``, so ``n_jobs > 1`` gives the same weights
    as a sequential run.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("cannot fit on zero rows")
    if loss_kind not in LOSSES:
        raise ValueError(f"unknown loss {loss_kind!r}")
    k = int(y.max()) + 1 if n_classes is None else n_classes
    if k < 2:
        raise ValueError("need at least two classes")
    problems = [1] if k == 2 else list(range(k))

    def solve(i):
        target = (y == problems[i]).astype(float)
        return _train_binary(X, target, loss_kind, cfg, np.random.default_rng([cfg.seed, i]))

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            results = list(pool.map(solve, range(len(problems))))
    else:
        results = [solve(i) for i in range(len(problems))]
    weights = np.vstack([r[0] for r in results])
    history = np.vstack([r[1] for r in results])
    return LinearModel(weights, loss_kind, k, history)
