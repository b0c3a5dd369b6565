import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roadsev.metrics import (AVERAGINGS, accuracy, confusion, f_consistent, f_from_pr,
                             format_table, per_class, precision_recall_f, report,
                             round_half_up, write_results_csv)

from oracles import count_metrics

pairs = st.integers(2, 4).flatmap(lambda k: st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.just(k),
    st.lists(st.integers(0, k - 1), min_size=n, max_size=n),
    st.lists(st.integers(0, k - 1), min_size=n, max_size=n),
)))


def test_confusion_examples():
    cm = confusion([0, 1, 2, 3], [0, 1, 2, 3])
    assert np.array_equal(cm.counts, np.eye(4, dtype=int))
    cm = confusion([0, 0, 1], [0, 1, 1], 2)
    assert cm.counts.tolist() == [[1, 1], [0, 1]]


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion([0, 1], [0])
    with pytest.raises(ValueError):
        confusion([0, 3], [0, 1], 3)
    with pytest.raises(ValueError):
        confusion([], [])


def test_accuracy_examples():
    assert accuracy(confusion([0, 1, 2], [0, 1, 2])) == 1.0
    assert accuracy(confusion([0, 1, 1, 0], [0, 1, 0, 0])) == 0.75


def test_perfect_predictions_score_one():
    for avg in AVERAGINGS:
        assert precision_recall_f(confusion([0, 1, 2, 1], [0, 1, 2, 1]), avg) == (1.0, 1.0, 1.0)


def test_binary_positive_class():
    # TP=1, FP=1, FN=0, TN=0 for class 1
    p, r, f, undefined = per_class(confusion([1, 0], [1, 1], 2))
    assert (p[1], r[1]) == (0.5, 1.0)
    assert f[1] == pytest.approx(2 / 3)
    assert undefined  # class 0 is never predicted


def test_published_f_score_consistency():
    assert round_half_up(f_from_pr(0.954, 0.930)) == 0.942
    assert f_consistent(0.954, 0.930, 0.942)
    assert not f_consistent(0.784, 0.790, 0.722)


def test_half_up_rounding():
    assert round_half_up(0.1235) == 0.124
    assert round_half_up(0.1225) == 0.123
    assert round_half_up(0.9995) == 1.0
    assert round_half_up(0.12349) == 0.123


@given(pairs)
def test_metrics_match_counting_oracle(case):
    k, yt, yp = case
    cm = confusion(yt, yp, k)
    assert cm.total == len(yt)
    for avg in AVERAGINGS:
        want = count_metrics(yt, yp, k, avg)
        got = (accuracy(cm), *precision_recall_f(cm, avg))
        assert got == pytest.approx(want, abs=1e-15, rel=1e-15)


@given(pairs)
def test_accuracy_range_and_diagonal(case):
    k, yt, yp = case
    cm = confusion(yt, yp, k)
    a = accuracy(cm)
    assert 0.0 <= a <= 1.0
    off_diag = cm.counts - np.diag(np.diag(cm.counts))
    assert (a == 1.0) == (off_diag.sum() == 0)


@given(pairs)
def test_macro_f_between_extremes(case):
    k, yt, yp = case
    cm = confusion(yt, yp, k)
    f = per_class(cm)[2]
    present = (cm.counts.sum(0) + cm.counts.sum(1)) > 0
    macro = precision_recall_f(cm, "macro")[2]
    assert f[present].min() - 1e-12 <= macro <= f[present].max() + 1e-12


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=30))
def test_binary_accuracy_equals_tp_tn_formula(rows):
    yt, yp = zip(*rows)
    cm = confusion(yt, yp, 2)
    tp, tn = cm.counts[1, 1], cm.counts[0, 0]
    fp, fn = cm.counts[0, 1], cm.counts[1, 0]
    assert accuracy(cm) == (tp + tn) / (tp + tn + fp + fn)


def test_report_keeps_full_precision():
    row = report("Random Forest", confusion([0, 1, 1], [0, 1, 0], 2), "macro", "significant_features")
    assert row.accuracy == 2 / 3
    assert row.rounded()[0] == 0.667
    with pytest.raises(ValueError):
        report("x", confusion([0], [0], 1), phase="phase-3")


def test_table_and_csv(tmp_path):
    rows = [report("Voting Classifier", confusion([0, 1, 1], [0, 1, 0], 2)),
            report("Random Forest", confusion([0, 1, 1], [0, 1, 1], 2))]
    text = format_table(rows, "title")
    lines = text.splitlines()
    assert lines[0] == "title"
    assert lines[1].split() == ["Models", "Accuracy", "Precision", "Recall", "F-Score"]
    assert lines[3].startswith("Random Forest") and lines[3].endswith("1.000")
    write_results_csv(rows, tmp_path / "r.csv")
    out = (tmp_path / "r.csv").read_text().splitlines()
    assert out[1].startswith("Voting Classifier,all_features,macro,0.667,")
