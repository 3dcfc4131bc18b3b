"""JSON config schema and builders for the command-line front end."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .errors import GMeasureError
from .prob_core import (
    Dist,
    GaussianTruth,
    Grid,
    LogisticTruth,
    TableTruth,
    TruthFn,
    eval_truth_family,
)

_number = {"type": "number"}
_prob_vector = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}

GRID_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"min": _number, "max": _number, "step": {"type": "number", "exclusiveMinimum": 0}},
            "required": ["min", "max", "step"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"points": {"type": "array", "items": _number, "minItems": 2}},
            "required": ["points"],
            "additionalProperties": False,
        },
    ]
}

DIST_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["uniform", "normal", "table", "point"]},
        "mu": _number,
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "weights": _prob_vector,
        "x": _number,
    },
    "required": ["kind"],
    "allOf": [
        {"if": {"properties": {"kind": {"const": "normal"}}}, "then": {"required": ["mu", "sigma"]}},
        {"if": {"properties": {"kind": {"const": "table"}}}, "then": {"required": ["weights"]}},
        {"if": {"properties": {"kind": {"const": "point"}}}, "then": {"required": ["x"]}},
    ],
    "additionalProperties": False,
}

TRUTH_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["gaussian", "logistic", "table"]},
        "center": _number,
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "slope": _number,
        "midpoint": _number,
        "values": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
    },
    "required": ["kind"],
    "allOf": [
        {"if": {"properties": {"kind": {"const": "gaussian"}}}, "then": {"required": ["center", "sigma"]}},
        {"if": {"properties": {"kind": {"const": "logistic"}}}, "then": {"required": ["slope", "midpoint"]}},
        {"if": {"properties": {"kind": {"const": "table"}}}, "then": {"required": ["values"]}},
    ],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "gmeasure config",
    "type": "object",
    "properties": {
        "grid": GRID_SCHEMA,
        "prior": DIST_SCHEMA,
        "actual": DIST_SCHEMA,
        "truth": TRUTH_SCHEMA,
        "channel": {"type": "array", "items": _prob_vector, "minItems": 2},
        "semantic": {
            "oneOf": [
                {"const": "matched"},
                {"type": "array", "items": TRUTH_SCHEMA, "minItems": 1},
            ]
        },
        "scenario": {
            "type": "object",
            "properties": {
                "sigma_device": {"type": "number", "exclusiveMinimum": 0},
                "x0": _number,
                "t0": _number,
                "x1": _number,
                "t1": _number,
                "actual_speed": _number,
                "actual_sd0": {"type": "number", "exclusiveMinimum": 0},
                "actual_sd_rate": {"type": "number", "minimum": 0},
                "predicted_speed": _number,
                "predicted_sd_rate": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "problem": {
            "type": "object",
            "properties": {
                "prior_mean": _number,
                "prior_sd": {"type": "number", "exclusiveMinimum": 0},
                "goal": TRUTH_SCHEMA,
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class ConfigError(GMeasureError, ValueError):
    """Invalid configuration; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate(doc) -> dict:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        # deepest error is usually the most specific one
        err = max(errors, key=lambda e: len(e.absolute_path))
        raise ConfigError(_path(err.absolute_path), err.message)
    return doc


def load(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("$", f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from exc
    return validate(doc)


def _wrap(path: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (GMeasureError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


def build_grid(spec: dict, path: str = "$.grid") -> Grid:
    if "points" in spec:
        return _wrap(path, Grid, spec["points"])
    return _wrap(path, Grid.arange, spec["min"], spec["max"], spec["step"])


def build_dist(spec: dict, grid: Grid, path: str) -> Dist:
    kind = spec["kind"]
    if kind == "uniform":
        return Dist.uniform(grid)
    if kind == "normal":
        return _wrap(path, Dist.normal, grid, spec["mu"], spec["sigma"])
    if kind == "point":
        return _wrap(path, Dist.point_mass, grid, spec["x"])
    return _wrap(path, Dist, grid, spec["weights"])


def build_family(spec: dict, path: str):
    kind = spec["kind"]
    if kind == "gaussian":
        return _wrap(path, GaussianTruth, spec["center"], spec["sigma"])
    if kind == "logistic":
        return _wrap(path, LogisticTruth, spec["slope"], spec["midpoint"])
    raise ConfigError(path, "table truth functions need a grid; use build_truth")


def build_truth(spec: dict, grid: Grid, path: str) -> TruthFn:
    if spec["kind"] == "table":
        truth = _wrap(path, TruthFn, grid, spec["values"])
        return eval_truth_family(TableTruth(truth), grid)
    return eval_truth_family(build_family(spec, path), grid)
