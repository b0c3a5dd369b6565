"""Tabular ingestion, cleaning, numeric encoding and train/test splitting.

Pipeline order is ``load_csv -> preprocess -> encode -> train_test_split``.
Datasets keep one pandas column per non-ignored schema column; missing cells
are NaN / None / NA / NaT depending on the column kind.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import EmptyDatasetError, SchemaError
from .schema import FeatureSchema

log = logging.getLogger(__name__)

DEFAULT_CLASSES = (1, 2, 3, 4)

_TRUE = {"true", "t", "1", "yes", "y"}
_FALSE = {"false", "f", "0", "no", "n"}


@dataclass(frozen=True, eq=False)
class Dataset:
    """Typed table plus its severity labels.

    ``frame`` holds the non-ignored schema columns (target included) in
    schema order. ``meta`` carries provenance such as dropped columns or the
    planted informative features of a synthetic table.
    """

    schema: FeatureSchema
    frame: pd.DataFrame
    classes: tuple = DEFAULT_CLASSES
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.classes) < 2:
            raise SchemaError("need at least two classes")
        expected = [c.name for c in self.schema.kept]
        if self.schema.target.name not in self.frame.columns:
            expected.remove(self.schema.target.name)
        if list(self.frame.columns) != expected:
            raise SchemaError("frame columns do not follow the schema")

    @property
    def n_rows(self) -> int:
        return len(self.frame)

    @property
    def has_target(self) -> bool:
        return self.schema.target.name in self.frame.columns

    @property
    def labels(self) -> pd.Series:
        return self.frame[self.schema.target.name]

    def missing_ratios(self) -> dict[str, float]:
        if self.n_rows == 0:
            return {c: 0.0 for c in self.frame.columns}
        return {c: float(v) for c, v in self.frame.isna().mean().items()}

    def n_missing(self) -> int:
        return int(self.frame.isna().to_numpy().sum())

    def same_data(self, other: Dataset) -> bool:
        return (
            self.schema == other.schema
            and self.classes == other.classes
            and self.frame.equals(other.frame)
        )


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Dense float matrix ready for the learners.

    ``labels`` are zero-based indices into ``classes`` (the original severity
    values), or None when the source had no target column.
    """

    values: np.ndarray
    feature_names: tuple
    labels: np.ndarray | None
    classes: tuple
    source_columns: tuple
    vocab: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.feature_names):
            raise ValueError("values width must match feature_names")
        if len(self.source_columns) != len(self.feature_names):
            raise ValueError("every encoded column needs a source column")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains non-finite values")
        if self.labels is not None and len(self.labels) != len(self.values):
            raise ValueError("labels length must match row count")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def take(self, rows) -> FeatureMatrix:
        rows = np.asarray(rows)
        labels = None if self.labels is None else self.labels[rows]
        return replace(self, values=self.values[rows], labels=labels)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def class_values(self, indices) -> np.ndarray:
        return np.asarray(self.classes)[np.asarray(indices)]


# -- ingestion ---------------------------------------------------------------


def _parse_column(raw: pd.Series, kind: str) -> pd.Series:
    blank = raw == ""
    if kind == "numeric":
        out = pd.to_numeric(raw.where(~blank), errors="coerce").astype(float)
        ok = out.notna().to_numpy()
        # pandas' fast parser can be an ulp off; numpy's string cast is exact
        out[ok] = raw[ok].to_numpy().astype(float)
        return out.where(np.isfinite(out))
    if kind == "boolean":
        low = raw.str.strip().str.lower()
        out = pd.Series(pd.NA, index=raw.index, dtype="boolean")
        out[low.isin(_TRUE)] = True
        out[low.isin(_FALSE)] = False
        return out
    if kind == "timestamp":
        return pd.to_datetime(raw.where(~blank), errors="coerce", format="mixed")
    return raw.where(~blank, None).astype(object)


def _parse_target(raw: pd.Series, classes) -> pd.Series:
    num = pd.to_numeric(raw.where(raw != ""), errors="coerce")
    ok = num.isin([float(c) for c in classes])
    return num.where(ok).astype("Int64")


def header_key(name: str) -> str:
    """Spelling-insensitive column key: ``Start_Time`` and ``Start Time`` agree."""
    return re.sub(r"[^a-z0-9%()]", "", name.lower())


def align_header(raw: pd.DataFrame, schema: FeatureSchema) -> pd.DataFrame:
    """Rename header cells that differ from a schema name only in spelling."""
    names = set(schema.names)
    by_key = {}
    for n in schema.names:
        by_key.setdefault(header_key(n), []).append(n)
    taken = {h for h in raw.columns if h in names}
    rename = {}
    for h in raw.columns:
        if h in names:
            continue
        hits = [n for n in by_key.get(header_key(h), []) if n not in taken]
        if len(hits) == 1:
            rename[h] = hits[0]
            taken.add(hits[0])
    return raw.rename(columns=rename) if rename else raw


def parse_frame(raw: pd.DataFrame, schema: FeatureSchema, classes=DEFAULT_CLASSES,
                require_target: bool = True) -> Dataset:
    """Type a frame of raw strings against ``schema``.

    Header names are matched exactly first, then by ``header_key``.
    """
    raw = align_header(raw, schema)
    header = list(raw.columns)
    names = schema.names
    missing = [n for n in names if n not in header]
    if not require_target and schema.target.name in missing:
        missing.remove(schema.target.name)
    extra = [h for h in header if h not in names]
    if missing or extra:
        parts = []
        if missing:
            parts.append("missing: " + ", ".join(missing))
        if extra:
            parts.append("unexpected: " + ", ".join(extra))
        raise SchemaError("header does not match schema (" + "; ".join(parts) + ")")

    cols = {}
    for col in schema.kept:
        if col.name not in raw.columns:
            continue
        if col.role == "target":
            cols[col.name] = _parse_target(raw[col.name], classes)
        else:
            cols[col.name] = _parse_column(raw[col.name], col.kind)
    frame = pd.DataFrame(cols, index=pd.RangeIndex(len(raw)))
    return Dataset(schema, frame, tuple(classes))


def load_csv(path, schema: FeatureSchema, classes=DEFAULT_CLASSES,
             require_target: bool = True) -> Dataset:
    """Read a comma-separated file with a header row; empty cells are missing.

    Cells that fail to parse for their column kind are marked missing, as are
    labels outside ``classes``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[],
                      encoding="utf-8")
    if len(raw) == 0:
        raise EmptyDatasetError(f"{path} has no data rows")
    return parse_frame(raw, schema, classes, require_target)


def _format_cell(value, kind):
    if value is None or value is pd.NA or (isinstance(value, float) and np.isnan(value)):
        return ""
    if kind == "timestamp":
        return "" if pd.isna(value) else str(value)
    if kind == "boolean":
        return "True" if bool(value) else "False"
    if kind == "numeric" or isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(d: Dataset, path) -> None:
    """Write ``d`` in the format ``load_csv`` reads (floats round-trip exactly)."""
    out = {}
    for col in d.schema.kept:
        if col.name not in d.frame.columns:
            continue
        kind = "numeric" if col.role == "target" else col.kind
        series = d.frame[col.name]
        if col.role == "target":
            out[col.name] = ["" if pd.isna(v) else str(int(v)) for v in series]
        else:
            out[col.name] = [_format_cell(v, kind) for v in series]
    pd.DataFrame(out).to_csv(path, index=False, encoding="utf-8")


# -- cleaning ----------------------------------------------------------------


def preprocess(d: Dataset, missing_threshold: float = 0.5) -> Dataset:
    """Drop sparse feature columns, then every row that is still partial.

    A feature column is dropped when its missing ratio exceeds
    ``missing_threshold``; the target column is never dropped.
    """
    if d.n_rows == 0:
        raise EmptyDatasetError("cannot preprocess an empty dataset")
    ratios = d.missing_ratios()
    target = d.schema.target.name
    dropped_cols = [c.name for c in d.schema.features
                    if c.name in ratios and ratios[c.name] > missing_threshold]
    schema = d.schema.without(dropped_cols)
    frame = d.frame.drop(columns=dropped_cols)
    keep = ~frame.isna().any(axis=1).to_numpy()
    frame = frame.loc[keep].reset_index(drop=True)
    n_dropped = int((~keep).sum())
    if len(frame) == 0:
        raise EmptyDatasetError("no complete rows remain after preprocessing")
    if dropped_cols:
        log.info("dropped %d sparse columns: %s", len(dropped_cols), ", ".join(dropped_cols))
    if n_dropped:
        log.info("dropped %d partial rows", n_dropped)
    meta = dict(d.meta)
    meta["preprocess"] = {
        "dropped_columns": dropped_cols,
        "dropped_rows": n_dropped,
        "target": target,
    }
    return Dataset(schema, frame, d.classes, meta)


# -- encoding ----------------------------------------------------------------


def first_appearance_codes(values, categories=None):
    """Ordinal codes in order of first appearance.

    With ``categories`` given, values are coded against it and unseen values
    map to -1.
    """
    values = np.asarray(values, dtype=object)
    if categories is None:
        codes, uniques = pd.factorize(values, sort=False)
        return codes.astype(float), tuple(uniques.tolist())
    lookup = {c: i for i, c in enumerate(categories)}
    codes = np.array([lookup.get(v, -1) for v in values], dtype=float)
    return codes, tuple(categories)


def encode(d: Dataset, vocab: dict | None = None) -> FeatureMatrix:
    """Turn a clean dataset into a numeric matrix, one column per feature.

    Timestamps are the exception: they become an hour-of-day and a
    day-of-week column. Passing ``vocab`` (from a training matrix) reuses its
    category codes so new data is encoded consistently.
    """
    if d.n_missing():
        raise ValueError("encode needs a dataset without missing cells; run preprocess first")
    columns, names, sources = [], [], []
    new_vocab = {}
    for col in d.schema.features:
        if col.name not in d.frame.columns:
            continue
        s = d.frame[col.name]
        if col.kind == "numeric":
            columns.append(s.to_numpy(dtype=float))
            names.append(col.name)
        elif col.kind == "boolean":
            columns.append(s.to_numpy(dtype=bool).astype(float))
            names.append(col.name)
        elif col.kind == "categorical":
            known = None if vocab is None else vocab.get(col.name, ())
            codes, cats = first_appearance_codes(s.to_numpy(), known)
            new_vocab[col.name] = cats
            columns.append(codes)
            names.append(col.name)
        else:
            ts = pd.DatetimeIndex(s)
            columns.append(ts.hour.to_numpy(dtype=float))
            columns.append(ts.dayofweek.to_numpy(dtype=float))
            names.extend([f"{col.name}:hour", f"{col.name}:weekday"])
            sources.append(col.name)
        sources.append(col.name)

    n = d.n_rows
    values = np.column_stack(columns) if columns else np.empty((n, 0))
    labels = None
    if d.has_target:
        index = {c: i for i, c in enumerate(d.classes)}
        labels = np.array([index[int(v)] for v in d.labels], dtype=np.int64)
    return FeatureMatrix(values, tuple(names), labels, tuple(d.classes), tuple(sources),
                         new_vocab)


def decode_categorical(m: FeatureMatrix, name: str) -> list:
    cats = m.vocab[name]
    return [cats[int(code)] if code >= 0 else None for code in m.column(name)]


# -- splitting and counting ---------------------------------------------------


def train_test_split(m: FeatureMatrix, train_fraction: float = 0.7, seed: int = 0,
                     stratify: bool = False) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Seeded random partition; the first floor(n * fraction) shuffled rows train.

    With ``stratify`` the same rule is applied within each class and the
    pieces are concatenated, so class shares match up to rounding.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = m.n_rows
    if n < 2:
        raise ValueError("need at least two rows to split")
    rng = np.random.default_rng(seed)
    if stratify:
        if m.labels is None:
            raise ValueError("stratified split needs labels")
        train_parts, test_parts = [], []
        for k in range(m.n_classes):
            rows = rng.permutation(np.flatnonzero(m.labels == k))
            cut = int(np.floor(len(rows) * train_fraction))
            train_parts.append(rows[:cut])
            test_parts.append(rows[cut:])
        train_idx = rng.permutation(np.concatenate(train_parts))
        test_idx = rng.permutation(np.concatenate(test_parts))
    else:
        order = rng.permutation(n)
        cut = int(np.floor(n * train_fraction))
        train_idx, test_idx = order[:cut], order[cut:]
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise ValueError(f"split of {n} rows at {train_fraction} leaves an empty side")
    return m.take(train_idx), m.take(test_idx)


def class_counts(data) -> dict:
    """Rows per declared class (zero for absent classes), in class order."""
    if isinstance(data, FeatureMatrix):
        counts = np.bincount(data.labels, minlength=data.n_classes)
        return {c: int(k) for c, k in zip(data.classes, counts)}
    counts = data.labels.dropna().astype(int).value_counts()
    return {c: int(counts.get(c, 0)) for c in data.classes}
