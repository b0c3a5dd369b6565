"""Versioned plain-text model files.

Layout::

    roadsev-model 1
    meta {json}
    <model block>

A tree block is a header line followed by one line per node in preorder
(``split feature threshold decrease left right values...`` or
``leaf values...``). Floats are written with ``repr`` so they read back
bit-for-bit. Out-of-bag masks and training loss traces are not stored.
"""

from __future__ import annotations

import json
from functools import singledispatch
from pathlib import Path

import numpy as np

from .ensembles import BoostedStumps, Forest, GradientBoosting, VotingPair
from .linear import LinearModel
from .tree import DecisionTree, TreeParams

MAGIC = "roadsev-model"
VERSION = 1


def _f(x) -> str:
    return repr(float(x))


def _floats(values) -> str:
    return " ".join(_f(v) for v in values)


@singledispatch
def _write(model, out: list):
    raise TypeError(f"cannot serialize {type(model).__name__}")


@_write.register
def _(tree: DecisionTree, out: list):
    p = tree.params
    out.append(f"tree {tree.n_nodes} {tree.n_features} {tree.value.shape[1]} {tree.depth} "
               f"{p.max_depth} {p.min_samples_split} {p.min_leaf} {p.criterion}")
    for i in range(tree.n_nodes):
        if tree.feature[i] < 0:
            out.append("leaf " + _floats(tree.value[i]))
        else:
            out.append(f"split {tree.feature[i]} {_f(tree.threshold[i])} "
                       f"{_f(tree.impurity_decrease[i])} {tree.left[i]} {tree.right[i]} "
                       + _floats(tree.value[i]))


@_write.register
def _(forest: Forest, out: list):
    out.append(f"forest {forest.variant} {forest.n_classes} {forest.n_features} "
               f"{len(forest.trees)}")
    for t in forest.trees:
        _write(t, out)


@_write.register
def _(model: BoostedStumps, out: list):
    out.append(f"adaboost {model.n_classes} {model.n_features} {len(model.stumps)}")
    for stump, alpha, err in zip(model.stumps, model.alphas, model.errors):
        out.append(f"stage {_f(alpha)} {_f(err)}")
        _write(stump, out)


@_write.register
def _(model: GradientBoosting, out: list):
    out.append(f"gbm {model.n_classes} {model.n_features} {len(model.trees)} "
               f"{_f(model.shrinkage)}")
    out.append("init " + _floats(model.init))
    for stage in model.trees:
        for t in stage:
            _write(t, out)


@_write.register
def _(model: LinearModel, out: list):
    rows, cols = model.weights.shape
    out.append(f"linear {model.loss_kind} {model.n_classes} {rows} {cols}")
    for row in model.weights:
        out.append(_floats(row))


@_write.register
def _(model: VotingPair, out: list):
    out.append("voting")
    _write(model.lr, out)
    _write(model.sgd, out)


def dumps_model(model, meta: dict | None = None) -> str:
    out = [f"{MAGIC} {VERSION}", "meta " + json.dumps(meta or {}, sort_keys=True)]
    _write(model, out)
    return "\n".join(out) + "\n"


class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, expect: str | None = None) -> list[str]:
        if self.pos >= len(self.lines):
            raise ValueError("model file ends early")
        parts = self.lines[self.pos].split(" ")
        self.pos += 1
        if expect is not None and parts[0] != expect:
            raise ValueError(f"line {self.pos}: expected {expect!r}, found {parts[0]!r}")
        return parts


def _read_tree(lines: _Lines) -> DecisionTree:
    _, n_nodes, n_features, n_out, depth, max_depth, mss, min_leaf, criterion = lines.next("tree")
    n = int(n_nodes)
    feature = np.full(n, -1, dtype=np.int64)
    threshold = np.zeros(n)
    decrease = np.zeros(n)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    value = np.zeros((n, int(n_out)))
    for i in range(n):
        parts = lines.next()
        if parts[0] == "leaf":
            value[i] = [float(v) for v in parts[1:]]
        elif parts[0] == "split":
            feature[i] = int(parts[1])
            threshold[i] = float(parts[2])
            decrease[i] = float(parts[3])
            left[i], right[i] = int(parts[4]), int(parts[5])
            value[i] = [float(v) for v in parts[6:]]
        else:
            raise ValueError(f"line {lines.pos}: bad tree node {parts[0]!r}")
    params = TreeParams(None if max_depth == "None" else int(max_depth), int(mss),
                        int(min_leaf), criterion)
    return DecisionTree(feature, threshold, left, right, value, decrease, int(n_features),
                        params, int(depth))


def _read_linear(lines: _Lines) -> LinearModel:
    _, loss, n_classes, rows, _cols = lines.next("linear")
    weights = np.array([[float(v) for v in lines.next()] for _ in range(int(rows))])
    return LinearModel(weights, loss, int(n_classes))


def _read_model(lines: _Lines):
    head = lines.lines[lines.pos].split(" ")[0]
    if head == "tree":
        return _read_tree(lines)
    if head == "linear":
        return _read_linear(lines)
    parts = lines.next()
    if head == "forest":
        _, variant, k, f, n_trees = parts
        trees = tuple(_read_tree(lines) for _ in range(int(n_trees)))
        return Forest(trees, None, variant, int(k), int(f))
    if head == "adaboost":
        _, k, f, n_stages = parts
        stumps, alphas, errors = [], [], []
        for _ in range(int(n_stages)):
            _, alpha, err = lines.next("stage")
            alphas.append(float(alpha))
            errors.append(float(err))
            stumps.append(_read_tree(lines))
        return BoostedStumps(tuple(stumps), tuple(alphas), tuple(errors), int(k), int(f))
    if head == "gbm":
        _, k, f, rounds, shrinkage = parts
        init = np.array([float(v) for v in lines.next("init")[1:]])
        trees = tuple(tuple(_read_tree(lines) for _ in range(int(k))) for _ in range(int(rounds)))
        return GradientBoosting(init, trees, float(shrinkage), int(k), int(f))
    if head == "voting":
        return VotingPair(_read_linear(lines), _read_linear(lines))
    raise ValueError(f"unknown model block {head!r}")


def loads_model(text: str):
    """Parse a model file; returns ``(model, meta)``."""
    lines = _Lines(text)
    magic = lines.next()
    if len(magic) != 2 or magic[0] != MAGIC:
        raise ValueError("not a roadsev model file")
    if int(magic[1]) != VERSION:
        raise ValueError(f"unsupported model file version {magic[1]}")
    meta_line = lines.lines[lines.pos]
    if not meta_line.startswith("meta "):
        raise ValueError("model file lacks a meta line")
    lines.pos += 1
    meta = json.loads(meta_line[5:])
    return _read_model(lines), meta


def save_model(path, model, meta: dict | None = None) -> None:
    Path(path).write_text(dumps_model(model, meta), encoding="utf-8")


def load_model(path):
    return loads_model(Path(path).read_text(encoding="utf-8"))
