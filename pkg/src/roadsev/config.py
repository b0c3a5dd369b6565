"""Experiment configuration and its ``key = value`` file format.

Example::

    [experiment]
    seed = 7
    k = 20

    [synth]
    n_rows = 2000
    noisy_row_fraction = 0.3

    [rf]
    n_trees = 100

Sections: experiment, synth, rf, extratrees, adaboost, gbm, lr, sgd.
Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .ensembles import ModelParams
from .metrics import AVERAGINGS
from .synth import SynthSpec
from .tree import TreeParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    data: str | None = None
    synth: SynthSpec | None = None
    schema: str | None = None
    train_fraction: float = 0.7
    seed: int = 0
    k_significant: int = 20
    averaging: str = "macro"
    out: str = "results"
    paper_faithful: bool = False
    stratify: bool = False
    missing_threshold: float = 0.5
    n_jobs: int = 1
    models: ModelParams = field(default_factory=ModelParams)

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie strictly between 0 and 1")
        if self.k_significant < 1:
            raise ConfigError("k must be >= 1")
        if self.averaging not in AVERAGINGS:
            raise ConfigError(f"averaging must be one of {', '.join(AVERAGINGS)}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")
        if not 0.0 <= self.missing_threshold <= 1.0:
            raise ConfigError("missing_threshold must lie in [0, 1]")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _opt_int(text: str):
    return None if text.strip().lower() in ("none", "") else int(text)


def _max_features(text: str):
    low = text.strip().lower()
    if low in ("sqrt", "all"):
        return low
    if low == "none":
        return None
    return int(low)


def _floats(text: str):
    return tuple(float(v) for v in text.split(",") if v.strip())


_EXPERIMENT = {
    "data": str, "schema": str, "train_fraction": float, "seed": int, "k": int,
    "averaging": str, "out": str, "paper_faithful": _bool, "stratify": _bool,
    "missing_threshold": float, "n_jobs": int,
}
_SYNTH = {
    "n_rows": int, "n_informative": int, "n_noise": int, "n_classes": int,
    "class_weights": _floats, "categorical_fraction": float,
    "noisy_row_fraction": float, "seed": int,
}
_TREE = {"max_depth": _opt_int, "min_samples_split": int, "min_leaf": int, "criterion": str}
_FOREST = {"n_trees": int, "max_features": _max_features, **_TREE}
_ADABOOST = {"rounds": int}
_GBM = {"rounds": int, "shrinkage": float, "max_features": _max_features, **_TREE}
_SGD = {"learning_rate": float, "epochs": int, "batch_size": int, "l2": float}
SECTIONS = {
    "experiment": _EXPERIMENT, "synth": _SYNTH, "rf": _FOREST, "extratrees": _FOREST,
    "adaboost": _ADABOOST, "gbm": _GBM, "lr": _SGD, "sgd": _SGD,
}


def _section_values(parser, name):
    keys = SECTIONS[name]
    out = {}
    for key, raw in parser.items(name):
        if key not in keys:
            raise ConfigError(f"unknown key {key!r} in section [{name}]")
        try:
            out[key] = keys[key](raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}] {key} = {raw!r}: {exc}") from None
    return out


def _split_tree(values, base: TreeParams):
    tree_keys = {k: values.pop(k) for k in list(values) if k in _TREE}
    return replace(base, **tree_keys) if tree_keys else base


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError("unknown section(s): " + ", ".join(f"[{s}]" for s in unknown))

    cfg = base or ExperimentConfig()
    models = cfg.models
    try:
        if parser.has_section("experiment"):
            exp = _section_values(parser, "experiment")
            if "k" in exp:
                exp["k_significant"] = exp.pop("k")
            cfg = replace(cfg, **exp)
        if parser.has_section("synth"):
            cfg = replace(cfg, synth=replace(cfg.synth or SynthSpec(),
                                             **_section_values(parser, "synth")))
        for name in ("rf", "extratrees"):
            if parser.has_section(name):
                vals = _section_values(parser, name)
                cur = getattr(models, name)
                tree = _split_tree(vals, cur.tree)
                models = replace(models, **{name: replace(cur, tree=tree, **vals)})
        if parser.has_section("adaboost"):
            models = replace(models, adaboost=replace(models.adaboost,
                                                      **_section_values(parser, "adaboost")))
        if parser.has_section("gbm"):
            vals = _section_values(parser, "gbm")
            tree = _split_tree(vals, models.gbm.tree)
            models = replace(models, gbm=replace(models.gbm, tree=tree, **vals))
        for name in ("lr", "sgd"):
            if parser.has_section(name):
                models = replace(models, **{name: replace(getattr(models, name),
                                                          **_section_values(parser, name))})
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return replace(cfg, models=models)


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` in the format ``parse_config`` reads."""
    lines = ["[experiment]"]
    for key in _EXPERIMENT:
        value = getattr(cfg, "k_significant" if key == "k" else key)
        if value is not None:
            lines.append(f"{key} = {_fmt(value)}")
    if cfg.synth is not None:
        lines += ["", "[synth]"]
        for f in fields(cfg.synth):
            value = getattr(cfg.synth, f.name)
            if value is not None:
                lines.append(f"{f.name} = {_fmt(value)}")
    m = cfg.models
    blocks = {"rf": m.rf, "extratrees": m.extratrees, "adaboost": m.adaboost, "gbm": m.gbm,
              "lr": m.lr, "sgd": m.sgd}
    for name, block in blocks.items():
        lines += ["", f"[{name}]"]
        for key in SECTIONS[name]:
            if hasattr(block, key):
                value = getattr(block, key)
            else:
                value = getattr(block.tree, key)
            lines.append(f"{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"
