"""Acceptance criteria 1-10, one test each.

Every test records a PASS/FAIL line (shown in the terminal summary and on
stdout) before asserting, so a failing criterion is reported, not hidden.
Criterion 10 reads a real US Accidents export from ``ROADSEV_ACCIDENTS_CSV``
when set, and otherwise an accident-shaped sample generated in place.
"""

import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import brute_force_split, central_difference, count_metrics, vote_mode
from roadsev.config import ExperimentConfig
from roadsev.data import encode
from roadsev.ensembles import (DISPLAY_NAMES, MODEL_ORDER, ModelParams, fit_adaboost, fit_gbm,
                               fit_random_forest, gbm_decision_function, predict_majority,
                               samme_alpha, softmax_loss)
from roadsev.harness import PHASE_TITLES, TIMING_FILE, cmd_experiment
from roadsev.importance import permutation_importance, select_top_k
from roadsev.linear import loss_and_gradient
from roadsev.metrics import (TABLE_COLUMNS, accuracy, confusion, f_consistent, f_from_pr,
                             precision_recall_f, round_half_up)
from roadsev.synth import SynthSpec, accidents_like_frame, generate
from roadsev.tree import TreeParams, best_split

ACCEPTANCE_SPEC = SynthSpec(2000, 20, 28, 4, seed=7)
NOISY_SPEC = replace(ACCEPTANCE_SPEC, noisy_row_fraction=0.3)

# published (accuracy, precision, recall, F-score) rows
TABLE_1 = {
    "Voting Classifier": (0.722, 0.692, 0.789, 0.740),
    "Random Forest": (0.744, 0.784, 0.790, 0.722),
    "AdaBoost Classifier": (0.704, 0.682, 0.711, 0.696),
    "Extra Tree Classifier": (0.728, 0.698, 0.754, 0.726),
    "Gradient Boosting Machine": (0.714, 0.672, 0.741, 0.706),
}
TABLE_2 = {
    "Voting Classifier": (0.962, 0.912, 0.919, 0.915),
    "Random Forest": (0.974, 0.954, 0.930, 0.942),
    "AdaBoost Classifier": (0.944, 0.922, 0.901, 0.911),
    "Extra Tree Classifier": (0.917, 0.928, 0.904, 0.916),
    "Gradient Boosting Machine": (0.921, 0.902, 0.921, 0.911),
}


def record(n, ok, detail, elapsed=None, limit=None):
    if limit is not None:
        detail += f" ({elapsed:.1f}s, limit {limit}s)"
        ok = ok and elapsed < limit
    ACCEPTANCE_LINES.append((n, ok, detail))
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="session")
def noisy_run(tmp_path_factory):
    """The two-phase experiment on the noisy acceptance fixture, serial training."""
    out = tmp_path_factory.mktemp("c8") / "serial"
    cfg = ExperimentConfig(synth=NOISY_SPEC, seed=7, out=str(out))
    t0 = time.perf_counter()
    rep = cmd_experiment(cfg)
    return rep, out, time.perf_counter() - t0


def test_criterion_1_published_f_scores():
    t0 = time.perf_counter()
    bad_2 = [m for m, (_, p, r, f) in TABLE_2.items() if not f_consistent(p, r, f)]
    _, p, r, f = TABLE_1["Random Forest"]
    rf_computed = round_half_up(f_from_pr(p, r))
    rf_flagged = not f_consistent(p, r, f) and rf_computed == 0.787
    others = [m for m, (_, p, r, f) in TABLE_1.items()
              if m != "Random Forest" and not f_consistent(p, r, f)]
    detail = (f"Table 2 rows off by >0.001: {bad_2 or 'none'}; Table 1 RF erratum flagged: "
              f"computed {rf_computed:.3f} vs printed {f:.3f}; other Table 1 rows also "
              f"inconsistent: {others}")
    record(1, not bad_2 and rf_flagged, detail, time.perf_counter() - t0, 1)


def test_criterion_2_split_search_oracle():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        f = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        # few distinct values so equal gains and repeated values are common
        X = rng.integers(0, 4, size=(n, f)).astype(float) * rng.choice([0.5, 1.0, 1.3])
        y = rng.integers(0, k, n)
        feats = sorted(rng.choice(f, int(rng.integers(1, f + 1)), replace=False).tolist())
        min_leaf = int(rng.choice([1, 1, 2]))
        got = best_split(X, y, feats, min_leaf, n_classes=k)
        want = brute_force_split(X, y, feats, k, min_leaf)
        if (got is None) != (want is None):
            failures += 1
        elif got is not None and not (got.feature_index == want[0]
                                      and got.threshold == want[1]
                                      and abs(got.impurity_decrease - want[2]) <= 1e-12):
            failures += 1
    record(2, failures == 0, f"{failures}/200 mismatches", time.perf_counter() - t0, 10)


def test_criterion_3_metrics_oracle():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(500):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(1, 13))
        t, p = rng.integers(0, k, n), rng.integers(0, k, n)
        cm = confusion(t, p, k)
        for averaging in ("macro", "weighted"):
            got = (accuracy(cm), *precision_recall_f(cm, averaging))
            if got != count_metrics(t.tolist(), p.tolist(), k, averaging):
                failures += 1
    record(3, failures == 0, f"{failures}/1000 (pair, averaging) mismatches, exact equality",
           time.perf_counter() - t0, 5)


def _relative_error(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


def test_criterion_4_gradient_check():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = {"log": 0.0, "hinge": 0.0}
    for loss_kind in ("log", "hinge"):
        done = 0
        while done < 50:
            n, d = int(rng.integers(1, 9)), int(rng.integers(1, 5))
            X = rng.normal(size=(n, d))
            t = rng.integers(0, 2, n)
            w = rng.normal(size=d + 1)
            l2 = float(rng.choice([0.0, 0.01, 0.3]))
            if loss_kind == "hinge":
                margin = (2 * t - 1) * (X @ w[:-1] + w[-1])
                if np.min(np.abs(1 - margin)) < 1e-3:
                    continue  # too close to the kink for a finite difference
            _, g = loss_and_gradient(w, X, t, loss_kind, l2)
            fd = central_difference(lambda v: loss_and_gradient(v, X, t, loss_kind, l2)[0], w)
            worst[loss_kind] = max(worst[loss_kind], _relative_error(g, fd))
            done += 1
    ok = max(worst.values()) <= 1e-6
    record(4, ok, f"worst relative error log {worst['log']:.1e}, hinge {worst['hinge']:.1e} "
           "over 50 instances each", time.perf_counter() - t0, 5)


def test_criterion_5_majority_vote_oracle():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    failures = 0
    for i in range(20):
        k = int(rng.integers(2, 5))
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, k, 60)
        # even tree counts make tied votes likely
        forest = fit_random_forest(X, y, n_trees=int(rng.integers(1, 9)), seed=i,
                                   tree_params=TreeParams(max_depth=3), n_classes=k)
        Xq = rng.normal(size=(50, 3))
        per_tree = forest.tree_predictions(Xq)
        want = [vote_mode(per_tree[:, j].tolist(), k) for j in range(50)]
        failures += int(np.sum(predict_majority(forest, Xq) != np.array(want)))
    record(5, failures == 0, f"{failures}/1000 inputs differ from the brute-force mode",
           time.perf_counter() - t0, 30)


def test_criterion_6_boosting_invariants():
    t0 = time.perf_counter()
    alpha_err = abs(samme_alpha(0.25, 2) - math.log(3))
    m = encode(generate(ACCEPTANCE_SPEC))
    ada = fit_adaboost(m.values, m.labels, rounds=50, seed=7, n_classes=4)
    chance = 1 - 1 / 4
    below_chance = all(e < chance for e in ada.errors)
    alphas_match = all(abs(a - samme_alpha(max(e, 1e-10), 4)) <= 1e-12
                       for a, e in zip(ada.alphas, ada.errors))
    gbm = fit_gbm(m.values, m.labels, rounds=10, shrinkage=0.1, seed=7, n_classes=4)
    loss = list(gbm.train_loss)
    monotone = len(loss) == 11 and all(b <= a for a, b in zip(loss, loss[1:]))
    # the recorded history is the loss of the fitted scores
    history_true = math.isclose(loss[-1], softmax_loss(gbm_decision_function(gbm, m.values),
                                                       m.labels), rel_tol=1e-12)
    ok = alpha_err <= 1e-9 and below_chance and alphas_match and monotone and history_true
    record(6, ok, f"|alpha(0.25, 2) - ln 3| = {alpha_err:.1e}; {len(ada.errors)} AdaBoost rounds, "
           f"max error {max(ada.errors):.3f} < {chance:.2f}; GBM loss "
           f"{loss[0]:.4f} -> {loss[-1]:.4f} non-increasing: {monotone}",
           time.perf_counter() - t0, 60)


def _recovers(m, planted, seed):
    forest = fit_random_forest(m.values, m.labels, n_trees=100, seed=seed, n_classes=4)
    rep = permutation_importance(forest, m.values, m.labels, seed=seed,
                                 feature_names=m.feature_names)
    score = dict(zip(rep.feature_names, rep.scores))
    noise = [c for c in m.feature_names if c not in planted]
    margin = min(score[c] for c in planted) - max(score[c] for c in noise)
    return margin > 0 and set(select_top_k(rep, 20)) == planted, margin


def test_criterion_7_importance_recovery():
    t0 = time.perf_counter()
    d = generate(ACCEPTANCE_SPEC)
    m = encode(d)
    planted = set(d.meta["informative"])
    attempts = []
    for seed in (7, 8):  # one retry permitted
        ok, margin = _recovers(m, planted, seed)
        attempts.append(f"seed {seed}: margin {margin:+.3f}")
        if ok:
            break
    record(7, ok, "; ".join(attempts), time.perf_counter() - t0, 120)


def test_criterion_8_phase_two_directionality(noisy_run):
    rep, _, elapsed = noisy_run
    deltas = {r1.model: r2.accuracy - r1.accuracy for r1, r2 in zip(rep.phase1, rep.phase2)}
    no_drop = all(v >= -0.005 - 1e-12 for v in deltas.values())
    improved = sum(v > 0 for v in deltas.values())
    detail = ", ".join(f"{m} {v:+.4f}" for m, v in deltas.items())
    record(8, no_drop and improved >= 3, f"accuracy deltas {detail}; {improved} improved",
           elapsed, 300)


def _report_bytes(out, skip=(TIMING_FILE,)):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name not in skip}


def test_criterion_9_determinism(noisy_run, tmp_path):
    _, serial_out, _ = noisy_run
    t0 = time.perf_counter()
    cfg = ExperimentConfig(synth=NOISY_SPEC, seed=7, n_jobs=2, out=str(tmp_path / "run"))
    snapshots = []
    for _ in range(2):  # same out path both times: config.ini records it
        cmd_experiment(cfg)
        snapshots.append(_report_bytes(tmp_path / "run"))
    a, b = snapshots
    parallel_same = a == b and len(a) == 6
    # config.ini records n_jobs and out, so it may differ from the serial run's
    skip = (TIMING_FILE, "config.ini")
    serial_same = _report_bytes(tmp_path / "run", skip) == _report_bytes(serial_out, skip)
    record(9, parallel_same and serial_same,
           f"two n_jobs=2 runs identical: {parallel_same}; same as the serial run: "
           f"{serial_same}", (time.perf_counter() - t0) / 2, 300)


FAST = replace(ModelParams(), rf=replace(ModelParams().rf, n_trees=30),
               extratrees=replace(ModelParams().extratrees, n_trees=30),
               gbm=replace(ModelParams().gbm, rounds=20),
               adaboost=replace(ModelParams().adaboost, rounds=20))


def test_criterion_10_accident_shaped_csv(tmp_path):
    t0 = time.perf_counter()
    real = os.environ.get("ROADSEV_ACCIDENTS_CSV")
    if real:
        data, models, source = real, ModelParams(), "real export"
    else:
        data = tmp_path / "accidents.csv"
        accidents_like_frame(1500, seed=10, export_spelling=True).to_csv(data, index=False)
        models, source = FAST, "generated accident-shaped sample"
    cfg = ExperimentConfig(data=str(data), seed=0, out=str(tmp_path / "out"), models=models)
    rep = cmd_experiment(cfg)
    lines = (tmp_path / "out" / "tables.txt").read_text().splitlines()
    names = [DISPLAY_NAMES[n] for n in MODEL_ORDER]
    shaped = True
    for phase, rows in (("all_features", rep.phase1), ("significant_features", rep.phase2)):
        start = lines.index(PHASE_TITLES[phase])
        header, body = lines[start + 1], lines[start + 2:start + 7]
        shaped &= header.split() == ["Models", "Accuracy", "Precision", "Recall", "F-Score"]
        shaped &= [r.model for r in rows] == names == list(TABLE_1)
        for line, name in zip(body, names):
            cells = line[len(name):].split()
            shaped &= line.startswith(name) and len(cells) == len(TABLE_COLUMNS) - 1
            shaped &= all(len(c) == 5 and 0 <= float(c) <= 1 for c in cells)
    record(10, shaped, f"{source}: {rep.n_rows} clean rows, {len(rep.importance.scores)} "
           f"features, two 5-row tables", time.perf_counter() - t0)
