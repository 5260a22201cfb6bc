"""Scenario files: the JSON surface of the command-line tools.

A scenario bundles the network, direction, thresholds, and optional
simulation/optimization blocks.  Validation is strict (unknown keys are
rejected) and dB-to-linear conversion happens here, at the boundary; the
core modules are linear-scale throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from jsonschema import Draft202012Validator

from .downlink import PowerAllocation
from .geometry import DOWNLINK, UPLINK, InterfererModel, NetworkParams

__all__ = ["Scenario", "ScenarioError", "db_to_linear", "linear_to_db", "SCENARIO_SCHEMA"]


class ScenarioError(ValueError):
    """Scenario file violates the schema or is internally inconsistent."""


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(np.asarray(value, dtype=float))


_GRID = {
    "type": "object",
    "additionalProperties": False,
    "required": ["start", "stop", "num"],
    "properties": {
        "start": {"type": "number"},
        "stop": {"type": "number"},
        "num": {"type": "integer", "minimum": 1},
    },
}

_GRID_OR_LIST = {
    "oneOf": [{"type": "array", "items": {"type": "number"}, "minItems": 1}, _GRID]
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["direction", "params"],
    "properties": {
        "direction": {"enum": [UPLINK, DOWNLINK]},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["lambda_b", "alpha", "n_users"],
            "properties": {
                "lambda_b": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 2},
                "n_users": {"type": "integer", "minimum": 1},
                "tx_power": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "betas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "model": {"enum": [m.value for m in InterfererModel]},
        "theta_db": _GRID_OR_LIST,
        "orders": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {"type": "number"},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
                    },
                ]
            },
        },
        "ranks": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "x_grid": _GRID,
        "attempts": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "reliability": {"type": "number", "minimum": 0, "maximum": 1},
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["realizations"],
            "properties": {
                "realizations": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "window_radius": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "emit_csp": {"type": "boolean"},
                "estimate": {
                    "type": "array",
                    "items": {"enum": ["moments", "meta", "pcf", "second_moment"]},
                },
                "radii": _GRID,
            },
        },
        "optimization": {
            "type": "object",
            "additionalProperties": False,
            "required": ["problem"],
            "properties": {
                "problem": {"enum": ["P1", "P2", "P3"]},
                "theta_db": _GRID_OR_LIST,
                "target": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "targets": {
                    "type": "array",
                    "items": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                },
                "maximize_rank": {"type": "integer", "minimum": 1},
                "delay_constraints": {"type": "boolean"},
            },
        },
    },
}

_VALIDATOR = Draft202012Validator(SCENARIO_SCHEMA)


def _expand_grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["num"])
    return np.asarray(spec, dtype=float)


@dataclass
class Scenario:
    """Validated scenario with converted (linear-scale) quantities."""

    direction: str
    params: NetworkParams
    raw: dict
    betas: PowerAllocation | None = None
    model: InterfererModel | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: e.json_path)
        if errors:
            msgs = "; ".join(f"{e.json_path}: {e.message}" for e in errors[:5])
            raise ScenarioError(f"invalid scenario: {msgs}")
        p = data["params"]
        params = NetworkParams(p["lambda_b"], p["alpha"], p["n_users"],
                               p.get("tx_power", 1.0))
        betas = None
        if "betas" in data:
            try:
                betas = PowerAllocation(tuple(data["betas"]))
            except ValueError as err:
                raise ScenarioError(f"invalid power allocation: {err}") from err
            if betas.n != params.n_users:
                raise ScenarioError(
                    f"betas has {betas.n} entries but n_users={params.n_users}"
                )
        model = InterfererModel(data["model"]) if "model" in data else None
        if data["direction"] == DOWNLINK and betas is None and params.n_users > 1:
            raise ScenarioError("downlink scenarios with n_users > 1 need betas")
        return cls(data["direction"], params, data, betas, model)

    @classmethod
    def from_file(cls, path) -> "Scenario":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as err:
                raise ScenarioError(f"scenario is not valid JSON: {err}") from err
        return cls.from_dict(data)

    # ---- derived accessors (linear scale) ----

    def theta_grid(self, override: str | None = None) -> np.ndarray:
        if override is not None:
            return db_to_linear(_parse_grid_spec(override))
        if "theta_db" not in self.raw:
            raise ScenarioError("scenario has no theta_db grid")
        return db_to_linear(_expand_grid(self.raw["theta_db"]))

    def theta_grid_db(self, override: str | None = None) -> np.ndarray:
        if override is not None:
            return _parse_grid_spec(override)
        return _expand_grid(self.raw["theta_db"])

    def orders(self) -> list[complex]:
        out = []
        for item in self.raw.get("orders", [1]):
            if isinstance(item, dict):
                out.append(complex(item.get("re", 0.0), item.get("im", 0.0)))
            else:
                out.append(complex(item))
        return out

    def ranks(self) -> list[int]:
        ranks = self.raw.get("ranks", list(range(1, self.params.n_users + 1)))
        for m in ranks:
            if not 1 <= m <= self.params.n_users:
                raise ScenarioError(f"rank {m} out of range for n_users={self.params.n_users}")
        return list(ranks)

    def x_grid(self) -> np.ndarray:
        spec = self.raw.get("x_grid", {"start": 0.0, "stop": 1.0, "num": 101})
        return _expand_grid(spec)

    def default_model(self) -> InterfererModel:
        return self.model if self.model is not None else InterfererModel.CLUSTERED

    def simulation(self) -> dict:
        return self.raw.get("simulation", {})

    def optimization(self) -> dict:
        if "optimization" not in self.raw:
            raise ScenarioError("scenario has no optimization block")
        return self.raw["optimization"]


def _parse_grid_spec(spec: str) -> np.ndarray:
    """--grid 'start:stop:num' (dB) or a comma-separated dB list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"grid spec must be start:stop:num; got {spec!r}")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        return np.linspace(start, stop, num)
    return np.array([float(v) for v in spec.split(",")])
