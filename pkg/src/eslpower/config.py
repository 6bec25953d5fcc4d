"""Run configuration: JSON document checked against ``RUN_CONFIG_SCHEMA``."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .coherent import SolverOptions
from .errors import ConfigurationError
from .scenario import PARAMETER_FIELDS, AisleGeometry

_positive = {"type": "number", "exclusiveMinimum": 0}

RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "eslpower run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                **{name: _positive for name in PARAMETER_FIELDS},
                "num_slots": {"type": "integer", "minimum": 1},
                "num_receivers": {"type": "integer", "minimum": 1},
                "num_antennas": {"type": "integer", "minimum": 1},
                "harvester_threshold_w": {"type": "number", "minimum": 0},
                "harvester_efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {f.name: {"type": "number"} for f in dataclasses.fields(AisleGeometry)},
        },
        "mode": {"enum": ["noncoherent", "coherent"]},
        "antenna_counts": {
            "type": "array", "minItems": 1,
            "items": {"type": "integer", "minimum": 1},
        },
        "seeds": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        "selection_seed": {"type": "integer", "minimum": 0},
        "enforce_cap": {"type": "boolean"},
        "workers": {"type": "integer", "minimum": 1},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": _positive,
                "max_iter": {"type": "integer", "minimum": 1},
                "rho": _positive,
                "relaxation": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2},
                "adapt_every": {"type": "integer", "minimum": 1},
                "adapt_factor": {"type": "number", "exclusiveMinimum": 1},
                "adapt_ratio": {"type": "number", "exclusiveMinimum": 1},
                "eps_rank": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "output_dir": {"type": "string", "minLength": 1},
    },
}


@dataclass(frozen=True)
class RunConfig:
    scenario: dict = field(default_factory=dict)
    geometry: dict = field(default_factory=dict)
    mode: str = "coherent"
    antenna_counts: tuple = (2, 3, 4, 6, 7, 8, 12, 14, 21, 24, 28, 42, 56, 84)
    seeds: tuple = (0,)
    selection_seed: int = 0
    enforce_cap: bool = False
    workers: int = 1
    solver: SolverOptions = SolverOptions()
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        validate(data)
        data = dict(data)
        if "solver" in data:
            data["solver"] = SolverOptions(**data["solver"])
        for key in ("antenna_counts", "seeds"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def geometry_obj(self) -> AisleGeometry:
        return AisleGeometry(**self.geometry)


def validate(data) -> None:
    """Raise :class:`ConfigurationError` naming the JSON path of the first violation."""
    validator = jsonschema.Draft202012Validator(RUN_CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "$"
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            path = ".".join([*map(str, err.absolute_path), extra[0]]) if extra else path
        raise ConfigurationError(err.message, path)


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}", str(path)) from None
    return RunConfig.from_dict(data)
