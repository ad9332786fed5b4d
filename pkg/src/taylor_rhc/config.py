"""Run configuration: shipped defaults, schema checks and dotted-path overrides."""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .model import BilinearSystem, system_from_dict

__all__ = [
    "SCHEMA",
    "default_config",
    "paper_system",
    "load_config",
    "apply_override",
    "validate_config",
    "config_system",
    "config_y0",
]

# known keys; None marks a leaf
SCHEMA = {
    "system": {"A": None, "B": None, "N": None, "C": None, "alpha": None},
    "system_file": None,
    "y0": None,
    "L": None,
    "tau": None,
    "T": None,
    "penalty": None,
    "solver": {"grad_tol": None, "max_iters": None, "lbfgs_memory": None, "h": None},
    "sweep": {"tau_values": None, "T_values": None, "penalties": None},
}


def _data_text(name: str) -> str:
    return resources.files("taylor_rhc").joinpath("data").joinpath(name).read_text()


def default_config() -> dict:
    """The shipped configuration: the two-state example system on the standard sweep grid."""
    return json.loads(_data_text("paper_sweep.json"))


def paper_system() -> BilinearSystem:
    return system_from_dict(json.loads(_data_text("paper_system.json")))


def _check_keys(d, schema, prefix=""):
    if not isinstance(d, dict):
        raise InvalidInputError(f"{prefix.rstrip('.') or 'config'} must be an object")
    for key, val in d.items():
        if key not in schema:
            raise InvalidInputError(f"unknown config key {prefix}{key!r}")
        sub = schema[key]
        if sub is not None and val is not None:
            _check_keys(val, sub, f"{prefix}{key}.")


def validate_config(cfg: dict) -> dict:
    _check_keys(cfg, SCHEMA)
    return cfg


def load_config(path=None, overrides=(), base_dir=None) -> dict:
    """Read a JSON config (or the shipped default), then apply ``KEY=VALUE`` overrides.

    A ``system_file`` entry replaces ``system`` with the contents of that file,
    resolved relative to the config file.
    """
    if path is None:
        cfg = default_config()
        base = Path.cwd()
    else:
        path = Path(path)
        try:
            cfg = json.loads(path.read_text())
        except OSError as exc:
            raise InvalidInputError(f"cannot read config {path}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"config {path} is not valid JSON: {exc}") from None
        base = path.parent
    validate_config(cfg)
    for item in overrides:
        cfg = apply_override(cfg, item)
    if cfg.get("system_file"):
        f = Path(cfg.pop("system_file"))
        if not f.is_absolute():
            f = Path(base_dir or base) / f
        try:
            cfg["system"] = json.loads(f.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot load system file {f}: {exc}") from None
    return cfg


def apply_override(cfg: dict, item: str) -> dict:
    """Return a copy of ``cfg`` with ``a.b.c=VALUE`` applied; VALUE is parsed as JSON when it can be."""
    if "=" not in item:
        raise InvalidInputError(f"override {item!r} is not KEY=VALUE")
    key, raw = item.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise InvalidInputError(f"override {item!r} has an empty key")
    schema = SCHEMA
    for p in parts:
        if schema is None or p not in schema:
            raise InvalidInputError(f"unknown config key {key!r}")
        schema = schema[p]
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = copy.deepcopy(cfg)
    node = out
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value
    return out


def config_system(cfg: dict) -> BilinearSystem:
    if "system" not in cfg:
        raise InvalidInputError("config has no system")
    return system_from_dict(cfg["system"])


def config_y0(cfg: dict, n: int) -> np.ndarray:
    y0 = np.asarray(cfg.get("y0", np.ones(n)), dtype=float)
    if y0.shape != (n,):
        raise InvalidInputError(f"y0 must have length {n}")
    return y0

