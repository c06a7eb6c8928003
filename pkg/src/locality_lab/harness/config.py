"""INI experiment configs with schema validation.

A config has an ``[experiment]`` section (protocol, seed, output_dir), a
``[model]`` section (name plus builder parameters) and optional ``[grids]``,
``[tolerances]`` and ``[params]`` sections.  Grid values are either
``start:stop:step`` ranges (inclusive) or comma-separated lists; numbers may use
``pi`` with ``+ - * /``.
"""
from __future__ import annotations

import ast
import configparser
import hashlib
import json
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import SchemaError

PROTOCOLS = ("lr_verify", "leakage", "corr_decay", "filters", "qac_check", "flow", "lsm",
             "flux", "topo", "topo_evolve", "string_sig", "goldstone", "stability",
             "repro_const")

MODELS = {
    "tfim": {"n", "j", "b", "h_field", "periodic"},
    "heisenberg": {"n"},
    "majumdar_ghosh": {"n", "j2"},
    "xxz": {"n", "delta", "jxy", "periodic"},
    "toric": {"lx", "ly"},
    "two_level": {"splitting"},
    "custom": {"terms", "edges", "n", "geometry"},
    "none": set(),
}
COMMON_MODEL_KEYS = {"name", "field_x", "field_z", "n_ground"}
SECTIONS = {"experiment", "model", "grids", "tolerances", "params"}
EXPERIMENT_KEYS = {"protocol", "seed", "output_dir", "ledger", "description"}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Float from a literal or a small arithmetic expression in ``pi``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise SchemaError(f"cannot parse number {text!r}")
    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise SchemaError(f"cannot parse number {text!r}") from exc


def parse_grid(text: str) -> np.ndarray:
    text = text.strip()
    if not text:
        raise SchemaError("empty grid")
    if ":" in text:
        parts = [parse_number(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise SchemaError(f"grid {text!r} must be start:stop:step with step > 0")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)
    vals = [parse_number(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise SchemaError("empty grid")
    return np.array(vals)


def parse_value(text: str):
    """bool, number or string."""
    low = text.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        v = parse_number(text)
    except SchemaError:
        return text.strip()
    return int(v) if v.is_integer() and "." not in text and "e" not in low else v


@dataclass
class ExperimentConfig:
    """A validated experiment description."""

    protocol: str
    model: dict
    grids: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "runs/out"
    ledger: str | None = None
    source: str | None = None

    def canonical(self):
        return {"protocol": self.protocol, "model": self.model,
                "grids": {k: [float(x) for x in v] for k, v in sorted(self.grids.items())},
                "tolerances": self.tolerances, "params": self.params, "seed": self.seed}

    def config_hash(self):
        text = json.dumps(self.canonical(), sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()

    def grid(self, name, default=None):
        if name in self.grids:
            return self.grids[name]
        if default is None:
            raise SchemaError(f"protocol {self.protocol} needs grid {name!r}")
        return np.asarray(default, dtype=float)

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))

    def param(self, name, default=None):
        return self.params.get(name, default)


def parse_config(text: str, source: str | None = None, base_dir=None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise SchemaError(f"malformed config: {exc}") from exc
    unknown = set(cp.sections()) - SECTIONS
    if unknown:
        raise SchemaError(f"unknown sections: {sorted(unknown)}")
    if "experiment" not in cp:
        raise SchemaError("missing [experiment] section")
    exp = dict(cp["experiment"])
    bad = set(exp) - EXPERIMENT_KEYS
    if bad:
        raise SchemaError(f"unknown [experiment] keys: {sorted(bad)}")
    protocol = exp.get("protocol", "").strip()
    if protocol not in PROTOCOLS:
        raise SchemaError(f"unknown protocol {protocol!r}; expected one of {', '.join(PROTOCOLS)}")
    model = {k: parse_value(v) for k, v in (cp["model"].items() if "model" in cp else [])}
    name = str(model.get("name", "none"))
    if name not in MODELS:
        raise SchemaError(f"unknown model {name!r}")
    extra = set(model) - MODELS[name] - COMMON_MODEL_KEYS
    if extra:
        raise SchemaError(f"unknown parameters for model {name!r}: {sorted(extra)}")
    model["name"] = name
    if name == "custom" and base_dir is not None:
        for key in ("terms", "edges"):
            if key in model:
                model[key] = str((Path(base_dir) / str(model[key])).resolve())
    grids = {k: parse_grid(v) for k, v in (cp["grids"].items() if "grids" in cp else [])}
    tols = {}
    for k, v in (cp["tolerances"].items() if "tolerances" in cp else []):
        val = parse_value(v)
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise SchemaError(f"tolerance {k!r} must be numeric")
        tols[k] = float(val)
    params = {k: parse_value(v) for k, v in (cp["params"].items() if "params" in cp else [])}
    seed = parse_value(exp.get("seed", "0"))
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SchemaError("seed must be an integer")
    out = exp.get("output_dir", f"runs/{protocol}")
    if base_dir is not None and not Path(out).is_absolute():
        out = str((Path(base_dir) / out).resolve())
    ledger = exp.get("ledger")
    if ledger and base_dir is not None and not Path(ledger).is_absolute():
        ledger = str((Path(base_dir) / ledger).resolve())
    return ExperimentConfig(protocol, model, grids, tols, params, seed, out, ledger, source)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path), path.parent)
