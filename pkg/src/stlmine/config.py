"""TOML run configuration mapped onto the miner, classifier and falsifier settings."""
from __future__ import annotations

import sys
from dataclasses import fields, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from stlmine.classifier import ClassifierConfig, TreeConfig
from stlmine.falsification import FalsifierConfig
from stlmine.miner import MinerConfig
from stlmine.models import InputGenConfig, Model, make_model

SECTIONS = {"seed", "model", "input", "miner", "classifier", "tree", "falsifier"}


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    unknown = set(doc) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    return doc


def _build(cls, table: dict, section: str, **extra):
    names = {f.name for f in fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise ConfigError(f"[{section}] has unknown keys {sorted(unknown)}")
    return cls(**{**table, **extra})


def _pairs(table: dict) -> dict:
    return {k: (float(v[0]), float(v[1])) for k, v in table.items()}


def model_from(doc: dict, name: str | None = None) -> Model:
    table = dict(doc.get("model", {}))
    name = name or table.pop("name", None)
    table.pop("name", None)
    if name is None:
        raise ConfigError("no model given")
    if "box" in table:
        table["box"] = tuple(table["box"])
    try:
        return make_model(name, **table)
    except TypeError as exc:
        raise ConfigError(f"[model] {exc}") from None


def miner_config_from(doc: dict, model: Model | None = None, **overrides) -> MinerConfig:
    """Build a MinerConfig; keyword overrides (e.g. from CLI flags) win over the file."""
    seed = doc.get("seed")
    inp = dict(doc.get("input", {}))
    n_traces = inp.pop("n_traces", None)
    box = _pairs(inp.pop("box", {}))
    if model is not None:
        box = {**model.inputs, **box}
    if seed is not None:
        inp.setdefault("seed", seed)
    gen = _build(InputGenConfig, inp, "input", **({"box": box} if box else {}))

    tree = _build(TreeConfig, doc.get("tree", {}), "tree")
    cls_table = dict(doc.get("classifier", {}))
    if seed is not None:
        cls_table.setdefault("seed", seed)
    classifier = _build(ClassifierConfig, cls_table, "classifier", tree=tree)

    fal = dict(doc.get("falsifier", {}))
    control = {k: fal.pop(k) for k in ("control_points", "interpolation") if k in fal}
    if seed is not None:
        fal.setdefault("seed", seed)
    falsifier = _build(FalsifierConfig, fal, "falsifier")

    mt = dict(doc.get("miner", {}))
    mt.pop("phi_out", None)
    if "operators" in mt:
        mt["operators"] = tuple(mt["operators"])
    if "time_range" in mt:
        mt["time_range"] = tuple(mt["time_range"])
    if "value_ranges" in mt:
        mt["value_ranges"] = _pairs(mt["value_ranges"])
    if n_traces is not None:
        mt["n_traces"] = n_traces
    cfg = _build(MinerConfig, mt, "miner", input_gen=gen, classifier=classifier,
                 falsifier=falsifier, **control)
    return apply_overrides(cfg, **overrides)


def apply_overrides(cfg: MinerConfig, seed=None, budget=None, m=None, max_length=None,
                    epsilon=None, n_traces=None) -> MinerConfig:
    if seed is not None:
        cfg = replace(cfg, input_gen=replace(cfg.input_gen, seed=seed),
                      classifier=replace(cfg.classifier, seed=seed),
                      falsifier=replace(cfg.falsifier, seed=seed))
    if budget is not None:
        cfg = replace(cfg, falsifier=replace(cfg.falsifier, budget=budget))
    if m is not None:
        cfg = replace(cfg, classifier=replace(cfg.classifier, m=m))
    if max_length is not None:
        cfg = replace(cfg, max_length=max_length)
    if epsilon is not None:
        cfg = replace(cfg, epsilon=epsilon)
    if n_traces is not None:
        cfg = replace(cfg, n_traces=n_traces)
    return cfg


PRESETS = {
    "oscillator": {
        "seed": 0,
        "model": {"name": "oscillator"},
        "input": {"segments": 5, "duration": 25.0, "period": 0.1, "n_traces": 200,
                  "box": {"u1": [-1.0, 1.0], "u2": [-1.0, 1.0]}},
        "miner": {"phi_out": "G(y >= -1 && y <= 1)", "max_length": 6, "epsilon": 0.01},
        "classifier": {"m": 900},
        "falsifier": {"budget": 1000, "control_points": 10},
    },
    "delay": {
        "seed": 0,
        "model": {"name": "delay", "d": 1.0, "default": 1.0},
        "input": {"segments": 4, "duration": 100.0, "period": 1.0, "n_traces": 200,
                  "box": {"u": [-0.2, 1.0]}},
        "miner": {"phi_out": "G[1,100](y > 0)", "max_length": 4, "epsilon": 0.01},
        "classifier": {"m": 100},
        "falsifier": {"budget": 1000, "control_points": 10},
    },
}
