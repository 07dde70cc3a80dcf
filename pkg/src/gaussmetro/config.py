"""JSON pipeline configuration: schema, loading and conversion to a :class:`Pipeline`."""

from __future__ import annotations

import copy
import json
from typing import Any

import jsonschema

from .elements import PHI, BeamSplitter, Loss, Opa, PhaseShifter, Pipeline, g_from_gain
from .errors import ConfigError
from .state import InputSpec

_NUMBER = {"type": "number"}

SCHEMA = {
    "type": "object",
    "required": ["modes", "input", "elements"],
    "additionalProperties": False,
    "properties": {
        "modes": {"enum": [1, 2]},
        "input": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"alpha": _NUMBER, "r": _NUMBER},
        },
        "elements": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["type"],
                "oneOf": [
                    {
                        "properties": {"type": {"const": "bs"}},
                        "additionalProperties": False,
                    },
                    {
                        "properties": {
                            "type": {"const": "phase"},
                            "value": {"oneOf": [_NUMBER, {"const": PHI}]},
                        },
                        "required": ["value"],
                        "additionalProperties": False,
                    },
                    {
                        "properties": {
                            "type": {"const": "opa"},
                            "g": {"type": "number", "minimum": 0},
                            "G": {"type": "number", "minimum": 0},
                            "sign": {"enum": [1, -1]},
                        },
                        "oneOf": [{"required": ["g"]}, {"required": ["G"]}],
                        "additionalProperties": False,
                    },
                    {
                        "properties": {
                            "type": {"const": "loss"},
                            "xi": {"type": "array", "items": _NUMBER, "minItems": 1, "maxItems": 2},
                        },
                        "required": ["xi"],
                        "additionalProperties": False,
                    },
                ],
            },
        },
        "eval": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "phi": _NUMBER,
                "oracle": {"type": "boolean"},
                "dims": {"type": "integer", "minimum": 4},
            },
        },
    },
}

# dims None means "escalate until the truncation gate passes"
DEFAULT_EVAL = {"phi": 0.0, "oracle": False, "dims": None}


def _path(err: jsonschema.ValidationError) -> str:
    parts = ["$"] + [f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path]
    return "".join(parts)


def validate(cfg: Any) -> dict:
    """Schema-check a decoded configuration and its single-carrier rule.

    Raises:
        ConfigError: naming the offending field path
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_path(err)}: {err.message}")
    carriers = [i for i, el in enumerate(cfg["elements"]) if el["type"] == "phase" and el["value"] == PHI]
    if len(carriers) != 1:
        raise ConfigError(f"$.elements: exactly one phase element must have value \"PHI\", found {len(carriers)}")
    return cfg


def loads(text: str) -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate(cfg)


def load(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc.strerror}") from None
    return loads(text)


def eval_options(cfg: dict) -> dict:
    out = dict(DEFAULT_EVAL)
    out.update(cfg.get("eval", {}))
    return out


def _element(spec: dict, modes: int):
    kind = spec["type"]
    if kind == "bs":
        return BeamSplitter()
    if kind == "phase":
        return PhaseShifter(modes, spec["value"])
    if kind == "opa":
        g = spec["g"] if "g" in spec else g_from_gain(spec["G"], modes)
        return Opa(float(g), int(spec.get("sign", 1)), modes)
    return Loss(tuple(spec["xi"]))


def to_pipeline(cfg: dict) -> Pipeline:
    """Build the pipeline; physical problems (bad ``xi``, mode mismatch) raise ``PhysicsError``."""
    modes = cfg["modes"]
    inp = cfg.get("input", {})
    spec = InputSpec(float(inp.get("alpha", 0.0)), float(inp.get("r", 0.0)))
    return Pipeline(spec, modes, tuple(_element(el, modes) for el in cfg["elements"]))


def set_path(cfg: dict, path: str, value: float) -> dict:
    """Copy of ``cfg`` with the dotted field ``path`` set to ``value``.

    List indices are written as numbers (``elements.2.xi.0``).  Naming a
    whole ``xi`` list sets every entry, and ``G`` on an OPA replaces ``g``.

    Raises:
        ConfigError: if the path does not name an existing numeric field
    """
    out = copy.deepcopy(cfg)
    keys = path.split(".")
    node = out
    try:
        for key in keys[:-1]:
            node = node[int(key)] if isinstance(node, list) else node[key]
        last = keys[-1]
        if isinstance(node, list):
            node[int(last)] = value
        elif last == "G" and node.get("type") == "opa":
            node.pop("g", None)
            node["G"] = value
        elif last == "g" and node.get("type") == "opa":
            node.pop("G", None)
            node["g"] = value
        elif isinstance(node.get(last), list):
            node[last] = [value] * len(node[last])
        elif last in node or (keys[0] in ("input", "eval") and len(keys) == 2):
            node[last] = value
        else:
            raise KeyError(last)
    except (KeyError, IndexError, ValueError, TypeError):
        raise ConfigError(f"sweep axis '{path}' not found in the configuration") from None
    return validate(out)
