"""Experiment configuration: JSON file plus ``--set key.path=value`` overrides.

Validation happens up front and reports the offending field path, so a bad
sweep fails before any grid point runs.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .. import activations as act
from ..errors import ConfigError, InvalidSpaceError
from ..network import OPTIMIZERS
from ..spaces import SpaceDescriptor
from .targets import CATALOG as TARGETS

ROUTES = ("train", "construct")

DEFAULTS = {
    "sampler": {"radius": 1.0, "smoothness": 2.0},
    "activation": "tanh",
    "target": {"id": "sin-of-functional", "seed": 0, "frequency": 1.0},
    "route": "construct",
    "epsilon": 0.1,
    "width": 16,
    "samples": {"train": 2048, "validation": 4096},
    "train": {"learning_rate": 0.05, "iterations": 2000, "optimizer": "momentum",
              "momentum": 0.9, "batch_size": None, "init_scale": 1.0, "subgradient": False},
    "construct": {"dict_sizes": [8, 16, 32, 64, 128, 256, 512], "ridge": 1e-12, "cap": 6.0,
                  "scales": [0.25, 2.0], "sphere": False, "sphere_samples": 2048,
                  "theta_range": None, "n_train": 8192, "n_val": 16384},
    "sweep": {},
    "output": None,
    "report": True,
    "threads": 1,
}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key not in ("target", "space"):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_path(data: dict, path: str, value) -> None:
    keys = path.split(".")
    node = data
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            node[key] = {}
        node = node[key]
    node[keys[-1]] = value


def get_path(data: dict, path: str):
    node = data
    for key in path.split("."):
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"unknown config field {path!r}", field=path)
        node = node[key]
    return node


def apply_overrides(raw: dict, overrides=()) -> dict:
    out = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value", field=item)
        key, text = item.split("=", 1)
        set_path(out, key.strip(), parse_value(text))
    return out


@dataclass
class ExperimentConfig:
    raw: dict
    space: SpaceDescriptor
    activation: object
    seed: int
    sweep_axes: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def route(self) -> str:
        return self.raw["route"]

    def echo(self) -> dict:
        """The resolved configuration, minus the sweep and output bookkeeping."""
        return {k: v for k, v in self.raw.items() if k not in ("sweep", "output", "threads")}


def _positive(value, path, integer=False):
    kind = int if integer else (int, float)
    if isinstance(value, bool) or not isinstance(value, kind) or not value > 0:
        raise ConfigError(f"{path} must be a positive {'integer' if integer else 'number'}", field=path)
    return value


def validate(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", field="")
    cfg = _merge(DEFAULTS, raw)
    if "seed" not in raw or isinstance(raw["seed"], bool) or not isinstance(raw["seed"], int):
        raise ConfigError("an explicit integer 'seed' is required", field="seed")
    if "space" not in raw:
        raise ConfigError("'space' is required", field="space")
    try:
        space = SpaceDescriptor.from_dict(cfg["space"])
    except (InvalidSpaceError, TypeError, AttributeError) as exc:
        raise ConfigError(str(exc), field="space") from None
    try:
        activation = act.parse(str(cfg["activation"]))
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc), field="activation") from None
    if cfg["route"] not in ROUTES:
        raise ConfigError(f"route must be one of {ROUTES}", field="route")
    target = cfg["target"]
    if not isinstance(target, dict) or target.get("id") not in TARGETS:
        raise ConfigError(f"target.id must be one of {sorted(TARGETS)}", field="target.id")
    _positive(cfg["epsilon"], "epsilon")
    _positive(cfg["width"], "width", integer=True)
    _positive(cfg["sampler"]["radius"], "sampler.radius")
    for key in ("train", "validation"):
        _positive(cfg["samples"][key], f"samples.{key}", integer=True)
    tr = cfg["train"]
    _positive(tr["learning_rate"], "train.learning_rate")
    _positive(tr["iterations"], "train.iterations", integer=True)
    if tr["optimizer"] not in OPTIMIZERS:
        raise ConfigError(f"train.optimizer must be one of {OPTIMIZERS}", field="train.optimizer")
    cons = cfg["construct"]
    sizes = cons["dict_sizes"]
    if not isinstance(sizes, list) or not sizes:
        raise ConfigError("construct.dict_sizes must be a nonempty list", field="construct.dict_sizes")
    for i, n in enumerate(sizes):
        _positive(n, f"construct.dict_sizes[{i}]", integer=True)
    _positive(cfg["threads"], "threads", integer=True)
    axes = cfg["sweep"]
    if not isinstance(axes, dict):
        raise ConfigError("sweep must map field paths to value lists", field="sweep")
    for key, values in axes.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep list for {key!r} must be nonempty", field=f"sweep.{key}")
    return ExperimentConfig(cfg, space, activation, int(cfg["seed"]), dict(axes))


def load(path, overrides=()) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", field="--config") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", field="--config") from None
    return validate(apply_overrides(raw, overrides))
