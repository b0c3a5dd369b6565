"""Confusion matrices and accuracy / precision / recall / F-score.

Multiclass precision, recall and F are computed per class and then averaged
over the classes that occur in either the truth or the predictions:
``macro`` takes the plain mean, ``weighted`` weights by true-class support.
The averaged F-score is the mean of per-class F-scores, not the harmonic
mean of the averaged precision and recall. 0/0 is scored as 0 and flagged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np

AVERAGINGS = ("macro", "weighted")
PHASES = ("all_features", "significant_features")
TABLE_COLUMNS = ("Models", "Accuracy", "Precision", "Recall", "F-Score")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    counts: np.ndarray  # counts[i, j]: rows of true class i predicted as j

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]


def confusion(y_true, y_pred, n_classes: int | None = None) -> ConfusionMatrix:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D and of equal length")
    if len(y_true) == 0:
        raise ValueError("cannot build a confusion matrix from zero rows")
    k = int(max(y_true.max(), y_pred.max())) + 1 if n_classes is None else n_classes
    for arr in (y_true, y_pred):
        if arr.min() < 0 or arr.max() >= k or not np.all(arr == np.round(arr)):
            raise ValueError(f"class indices must be integers in [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (y_true.astype(np.int64), y_pred.astype(np.int64)), 1)
    return ConfusionMatrix(counts)


def _check(cm: ConfusionMatrix):
    if cm.total <= 0:
        raise ValueError("empty confusion matrix")


def accuracy(cm: ConfusionMatrix) -> float:
    _check(cm)
    return float(np.trace(cm.counts) / cm.total)


def _ratio(a: int, b: int) -> Fraction:
    return Fraction(a, b) if b else Fraction(0)


def _harmonic(p: Fraction, r: Fraction) -> Fraction:
    return 2 * p * r / (p + r) if p + r else Fraction(0)


def _exact_per_class(cm: ConfusionMatrix):
    _check(cm)
    c = cm.counts
    tp = [int(v) for v in np.diag(c)]
    predicted = [int(v) for v in c.sum(axis=0)]
    actual = [int(v) for v in c.sum(axis=1)]
    precision = [_ratio(t, p) for t, p in zip(tp, predicted)]
    recall = [_ratio(t, a) for t, a in zip(tp, actual)]
    f = [_harmonic(p, r) for p, r in zip(precision, recall)]
    undefined = 0 in predicted or 0 in actual
    return precision, recall, f, actual, predicted, undefined


def per_class(cm: ConfusionMatrix):
    """Per-class precision, recall, F and whether any 0/0 occurred."""
    precision, recall, f, _, _, undefined = _exact_per_class(cm)
    arrays = tuple(np.array([float(x) for x in xs]) for xs in (precision, recall, f))
    return (*arrays, undefined)


def precision_recall_f(cm: ConfusionMatrix, averaging: str = "macro"):
    """Averaged (precision, recall, F-score).

    Averages are formed in exact rational arithmetic from the integer counts
    and rounded to float once, so the result does not depend on summation order.
    """
    if averaging not in AVERAGINGS:
        raise ValueError(f"averaging must be one of {AVERAGINGS}")
    precision, recall, f, actual, predicted, _ = _exact_per_class(cm)
    if averaging == "macro":
        present = [a + p > 0 for a, p in zip(actual, predicted)]
        w = [Fraction(int(x), sum(present)) for x in present]
    else:
        w = [Fraction(a, sum(actual)) for a in actual]
    return tuple(float(sum(wi * v for wi, v in zip(w, col))) for col in (precision, recall, f))


def f_from_pr(precision: float, recall: float) -> float:
    s = precision + recall
    return 0.0 if s == 0 else 2.0 * precision * recall / s


def f_consistent(precision: float, recall: float, f_score: float, tol: float = 0.001) -> bool:
    """Whether a published F-score matches the harmonic mean of P and R."""
    return abs(f_from_pr(precision, recall) - f_score) <= tol + 1e-12


def round_half_up(x: float, places: int = 3) -> float:
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True, eq=False)
class EvaluationRow:
    model: str
    phase: str
    averaging: str
    accuracy: float
    precision: float
    recall: float
    f_score: float
    confusion: ConfusionMatrix
    undefined: bool = False

    def scores(self) -> tuple:
        return (self.accuracy, self.precision, self.recall, self.f_score)

    def rounded(self, places: int = 3) -> tuple:
        return tuple(round_half_up(v, places) for v in self.scores())


def report(model_name: str, cm: ConfusionMatrix, averaging: str = "macro",
           phase: str = "all_features") -> EvaluationRow:
    if phase not in PHASES:
        raise ValueError(f"phase must be one of {PHASES}")
    p, r, f = precision_recall_f(cm, averaging)
    undefined = per_class(cm)[3]
    return EvaluationRow(model_name, phase, averaging, accuracy(cm), p, r, f, cm, undefined)


def format_table(rows, title: str | None = None) -> str:
    """Aligned plain-text table with 3-decimal scores."""
    body = [TABLE_COLUMNS] + [
        (row.model, *(f"{v:.3f}" for v in row.rounded())) for row in rows]
    widths = [max(len(r[i]) for r in body) for i in range(len(TABLE_COLUMNS))]
    lines = [title] if title else []
    for r in body:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


RESULT_FIELDS = ("model", "phase", "averaging", "accuracy", "precision", "recall", "f_score",
                 "accuracy_full", "precision_full", "recall_full", "f_score_full",
                 "zero_division")


def write_results_csv(rows, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(RESULT_FIELDS)
        for row in rows:
            out.writerow([row.model, row.phase, row.averaging,
                          *(f"{v:.3f}" for v in row.rounded()),
                          *(repr(float(v)) for v in row.scores()),
                          int(row.undefined)])
