"""Workflow commands: stats, the two-phase experiment, train/predict, importance, synth.

Every command writes into an output directory. Files are staged in a
scratch directory next to it and moved into place only when the command
succeeds, so a failed run leaves nothing half-written behind.
"""

from __future__ import annotations

import logging
import shutil
import tempfile
import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .config import ConfigError, ExperimentConfig, dump_config
from .data import (Dataset, align_header, FeatureMatrix, class_counts, encode, load_csv, parse_frame,
                   preprocess, train_test_split, write_csv)
from .ensembles import DISPLAY_NAMES, MODEL_ORDER, fit_named, predict
from .errors import FeatureMismatchError, StageError
from .importance import (ImportanceReport, permutation_importance, project, select_top_k,
                         write_importance)
from .metrics import confusion, format_table, report, write_results_csv
from .persist import load_model, save_model
from .schema import load_schema, parse_schema, save_schema, us_accidents_schema
from .synth import SynthSpec, generate

log = logging.getLogger(__name__)

PHASE_TITLES = {
    "all_features": "Classification results using all features",
    "significant_features": "Classification results using significant features",
}
# files whose bytes depend on wall-clock time rather than on (config, seed)
TIMING_FILE = "timing.csv"


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@contextmanager
def staged_output(out):
    """Yield a scratch directory whose files land in ``out`` on success."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=f".{out.name}.partial-", dir=out.parent))
    try:
        yield scratch
    except BaseException:
        shutil.rmtree(scratch, ignore_errors=True)
        raise
    out.mkdir(parents=True, exist_ok=True)
    for item in sorted(scratch.iterdir()):
        target = out / item.name
        if target.exists():
            target.unlink()
        shutil.move(str(item), str(target))
    scratch.rmdir()


# -- ingestion -------------------------------------------------------------------------


def resolve_schema(path):
    return us_accidents_schema() if path is None else load_schema(path)


def ingest(cfg: ExperimentConfig) -> Dataset:
    if cfg.data is not None:
        return load_csv(cfg.data, resolve_schema(cfg.schema))
    if cfg.synth is not None:
        return generate(cfg.synth)
    raise ConfigError("no data source: give a CSV path or a [synth] section")


def prepare(cfg: ExperimentConfig) -> tuple[Dataset, FeatureMatrix]:
    with stage("ingest"):
        raw = ingest(cfg)
    with stage("preprocess"):
        clean = preprocess(raw, cfg.missing_threshold)
    with stage("encode"):
        matrix = encode(clean)
    return clean, matrix


# -- stats ------------------------------------------------------------------------------


def top_values(d: Dataset, column: str, n: int = 5) -> list[tuple[str, int]]:
    """Most frequent non-missing values, ties broken by value text."""
    counts = d.frame[column].dropna().astype(str).value_counts()
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(v, int(c)) for v, c in ranked[:n]]


def cmd_stats(data, schema=None, out="stats", column: str = "Weather Condition") -> dict:
    """Class counts, per-column missing ratios and top-5 values of ``column``."""
    with stage("ingest"):
        d = load_csv(data, resolve_schema(schema))
    counts = class_counts(d)
    ratios = d.missing_ratios()
    top = top_values(d, column) if column in d.frame.columns else []
    with stage("write"), staged_output(out) as tmp:
        lines = ["class,count"] + [f"{c},{k}" for c, k in counts.items()]
        (tmp / "class_counts.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        lines = ["column,missing_ratio"] + [f"{c},{r!r}" for c, r in ratios.items()]
        (tmp / "missing_ratios.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        if column in d.frame.columns:
            lines = ["value,count"] + [f"{v},{k}" for v, k in top]
            (tmp / "top_values.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {"class_counts": counts, "missing_ratios": ratios, "top_values": top}


# -- experiment -----------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    phase1: list
    phase2: list
    importance: ImportanceReport
    selected: list
    timings: list = field(default_factory=list)  # (model, phase, fit_ms, eval_ms)
    config: ExperimentConfig | None = None
    seed: int = 0
    n_rows: int = 0
    n_train: int = 0
    n_test: int = 0
    preprocess: dict = field(default_factory=dict)

    def tables(self) -> str:
        return (format_table(self.phase1, PHASE_TITLES["all_features"]) + "\n"
                + format_table(self.phase2, PHASE_TITLES["significant_features"]))


def _run_phase(phase, train, test, cfg, timings):
    rows, fitted = [], {}
    for name in MODEL_ORDER:
        with stage(f"{phase}:{name}"):
            t0 = time.perf_counter()
            model = fit_named(name, train.values, train.labels, train.n_classes,
                              cfg.models, cfg.seed, cfg.n_jobs)
            t1 = time.perf_counter()
            pred = predict(model, test.values)
            cm = confusion(test.labels, pred, test.n_classes)
            t2 = time.perf_counter()
        rows.append(report(DISPLAY_NAMES[name], cm, cfg.averaging, phase))
        timings.append((name, phase, (t1 - t0) * 1e3, (t2 - t1) * 1e3))
        fitted[name] = model
        log.info("%s %s: accuracy %.4f", phase, name, rows[-1].accuracy)
    return rows, fitted


def compute_importance(cfg: ExperimentConfig, matrix: FeatureMatrix, train: FeatureMatrix,
                       forest=None) -> ImportanceReport:
    """Importance from the training split, or from every row with ``paper_faithful``."""
    if cfg.paper_faithful:
        warnings.warn("paper-faithful importance uses the test rows too; "
                      "phase-2 scores are optimistic", UserWarning)
        source = matrix
        forest = None
    else:
        source = train
    if forest is None:
        forest = fit_named("rf", source.values, source.labels, source.n_classes, cfg.models,
                           cfg.seed, cfg.n_jobs)
    return permutation_importance(forest, source.values, source.labels, cfg.seed,
                                  source.feature_names, n_jobs=cfg.n_jobs)


def cmd_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Two-phase protocol on one fixed split.

    Phase 1 fits all five models on every feature. Random-forest permutation
    importance then picks the top ``k`` features, and phase 2 refits all five
    models on those columns only, using the same train and test rows.
    """
    clean, matrix = prepare(cfg)
    with stage("split"):
        train, test = train_test_split(matrix, cfg.train_fraction, cfg.seed, cfg.stratify)
        if cfg.k_significant > matrix.n_features:
            raise ConfigError(f"k = {cfg.k_significant} exceeds the {matrix.n_features} "
                              "encoded features")
    timings = []
    phase1, fitted = _run_phase("all_features", train, test, cfg, timings)
    with stage("importance"):
        imp = compute_importance(cfg, matrix, train, fitted["rf"])
        selected = select_top_k(imp, cfg.k_significant)
    with stage("project"):
        train2, test2 = project(train, selected), project(test, selected)
    phase2, _ = _run_phase("significant_features", train2, test2, cfg, timings)
    rep = ExperimentReport(phase1, phase2, imp, selected, timings, cfg, cfg.seed,
                           matrix.n_rows, train.n_rows, test.n_rows,
                           clean.meta.get("preprocess", {}))
    if write:
        with stage("write"):
            write_experiment(rep, cfg.out)
    return rep


def write_experiment(rep: ExperimentReport, out) -> None:
    with staged_output(out) as tmp:
        (tmp / "tables.txt").write_text(rep.tables(), encoding="utf-8")
        write_results_csv(rep.phase1 + rep.phase2, tmp / "results.csv")
        write_importance(rep.importance, tmp / "importance.csv")
        (tmp / "selected_features.txt").write_text("\n".join(rep.selected) + "\n",
                                                   encoding="utf-8")
        summary = [
            f"seed = {rep.seed}",
            f"rows = {rep.n_rows}",
            f"train_rows = {rep.n_train}",
            f"test_rows = {rep.n_test}",
            f"k = {len(rep.selected)}",
            "dropped_columns = " + ", ".join(rep.preprocess.get("dropped_columns", [])),
            f"dropped_rows = {rep.preprocess.get('dropped_rows', 0)}",
        ]
        (tmp / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
        if rep.config is not None:
            (tmp / "config.ini").write_text(dump_config(rep.config), encoding="utf-8")
        lines = ["model,phase,fit_ms,eval_ms"]
        lines += [f"{m},{p},{f:.1f},{e:.1f}" for m, p, f, e in rep.timings]
        (tmp / TIMING_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- train / predict ---------------------------------------------------------------------------


def cmd_train(cfg: ExperimentConfig, model_name: str, model_path, features=None):
    """Fit ``model_name`` on every clean row and save it with its encoding metadata."""
    if model_name not in MODEL_ORDER:
        raise StageError("train", ValueError(
            f"unknown model {model_name!r}; choose from {', '.join(MODEL_ORDER)}"))
    clean, matrix = prepare(cfg)
    if features:
        with stage("project"):
            matrix = project(matrix, features)
    with stage("train"):
        model = fit_named(model_name, matrix.values, matrix.labels, matrix.n_classes,
                          cfg.models, cfg.seed, cfg.n_jobs)
    meta = {
        "model": model_name,
        "feature_names": list(matrix.feature_names),
        "source_columns": list(matrix.source_columns),
        "vocab": {k: list(v) for k, v in matrix.vocab.items()},
        "classes": list(matrix.classes),
        "schema": clean.schema.to_text(),
        "seed": cfg.seed,
    }
    with stage("write"):
        path = Path(model_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_model(path, model, meta)
    return model, meta


def cmd_predict(model_path, data, out_path, schema=None) -> np.ndarray:
    """Write one predicted severity per input row.

    The data's encoded columns must be exactly the model's features.
    Rows with a missing cell in any needed column get an empty prediction.
    """
    with stage("load-model"):
        model, meta = load_model(model_path)
        model_schema = parse_schema(meta["schema"]) if schema is None else load_schema(schema)
    with stage("ingest"):
        raw = pd.read_csv(data, dtype=str, keep_default_na=False, na_values=[],
                          encoding="utf-8")
        raw = align_header(raw, model_schema)
        known = set(model_schema.names)
        unknown = [c for c in raw.columns if c not in known]
        if unknown:
            raise FeatureMismatchError([], unknown)
        target = model_schema.target.name
        sub = model_schema.without([c for c in model_schema.names
                                    if c not in raw.columns and c != target])
        d = parse_frame(raw, sub, tuple(meta["classes"]), require_target=False)
    with stage("encode"):
        present = [c.name for c in sub.features]
        encoded_names = []
        for c in sub.features:
            encoded_names += ([f"{c.name}:hour", f"{c.name}:weekday"]
                              if c.kind == "timestamp" else [c.name])
        wanted = meta["feature_names"]
        missing = [f for f in wanted if f not in encoded_names]
        extra = [f for f in encoded_names if f not in wanted]
        if missing or extra:
            raise FeatureMismatchError(missing, extra)
        complete = ~d.frame[present].isna().any(axis=1).to_numpy()
        frame = d.frame.loc[complete, present].reset_index(drop=True)
        clean = Dataset(sub, frame, tuple(meta["classes"]))
        vocab = {k: tuple(v) for k, v in meta["vocab"].items()}
        matrix = project(encode(clean, vocab), wanted)
    with stage("predict"):
        idx = predict(model, matrix.values) if matrix.n_rows else np.empty(0, dtype=np.int64)
        classes = np.asarray(meta["classes"])
    with stage("write"):
        values = [""] * len(complete)
        for row, k in zip(np.flatnonzero(complete), idx):
            values[row] = str(classes[k])
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join([target] + values) + "\n", encoding="utf-8")
    return classes[idx] if len(idx) else np.empty(0, dtype=classes.dtype)


# -- importance / synth ------------------------------------------------------------------------------


def cmd_importance(cfg: ExperimentConfig) -> ImportanceReport:
    """Rank features with RF permutation importance and write the plot-ready file."""
    _, matrix = prepare(cfg)
    with stage("split"):
        train, _ = train_test_split(matrix, cfg.train_fraction, cfg.seed, cfg.stratify)
    with stage("importance"):
        imp = compute_importance(cfg, matrix, train)
        select_top_k(imp, min(cfg.k_significant, matrix.n_features))
    with stage("write"), staged_output(cfg.out) as tmp:
        write_importance(imp, tmp / "importance.csv")
        (tmp / "selected_features.txt").write_text("\n".join(imp.selected) + "\n",
                                                   encoding="utf-8")
    return imp


def cmd_synth(spec: SynthSpec, out) -> Dataset:
    """Write a synthetic table, its schema and the planted column names."""
    d = generate(spec)
    with stage("write"), staged_output(out) as tmp:
        write_csv(d, tmp / "data.csv")
        save_schema(d.schema, tmp / "schema.txt")
        (tmp / "informative.txt").write_text("\n".join(d.meta["informative"]) + "\n",
                                             encoding="utf-8")
    return d


def with_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Replace only the overrides that were actually given."""
    given = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **given) if given else cfg
