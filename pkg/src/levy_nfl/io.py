"""Market-spec files: JSON schema, loading and bundled fixtures."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .constraints import ConstraintSet, FullSpace, constraint_from_json
from .errors import SchemaError
from .levy_core import LevyTriplet

SCHEMA_VERSION = "1.0"

_NUMBER = {"oneOf": [{"type": "number"}, {"enum": ["inf", "+inf", "-inf"]}]}
_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1}

_SUPPORT = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "type": {"const": "interval"},
                "lo": _NUMBER,
                "hi": _NUMBER,
                "loClosed": {"type": "boolean"},
                "hiClosed": {"type": "boolean"},
            },
            "required": ["type", "lo", "hi"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"type": {"const": "halfLine"}, "direction": _VEC, "offset": {"type": "number", "minimum": 0}},
            "required": ["type", "direction"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"type": {"const": "box"}, "lo": _VEC, "hi": _VEC},
            "required": ["type", "lo", "hi"],
            "additionalProperties": False,
        },
    ]
}

_FAMILY = {
    "type": "object",
    "properties": {
        "family": {"enum": ["polynomialOnInterval", "powerLawTail", "powerLogTail", "product", "exponentialTilt", "logDamped"]},
        "params": {"type": "object"},
    },
    "required": ["family", "params"],
    "additionalProperties": False,
}

_CONSTRAINT = {
    "type": "object",
    "properties": {
        "type": {"enum": ["full", "orthant", "box", "polyhedron", "cone", "parabola", "intersection"]},
        "params": {"type": "object"},
    },
    "required": ["type"],
    "additionalProperties": False,
}

MARKET_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "dimension": {"type": "integer", "minimum": 1},
        "b": _VEC,
        "c": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "nu": {
            "type": "object",
            "properties": {
                "atoms": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {"x": _VEC, "rate": {"type": "number", "exclusiveMinimum": 0}},
                        "required": ["x", "rate"],
                        "additionalProperties": False,
                    },
                },
                "densities": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "family": _FAMILY["properties"]["family"],
                            "params": {"type": "object"},
                            "support": _SUPPORT,
                            "quadratureHint": {"type": "integer", "minimum": 1},
                        },
                        "required": ["family", "params", "support"],
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
        "provenance": {"type": "object"},
    },
    "required": ["dimension", "b", "c"],
    "additionalProperties": False,
}

SPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schemaVersion": {"const": SCHEMA_VERSION},
        "comment": {"type": "string"},
        "market": MARKET_SCHEMA,
        "constraints": _CONSTRAINT,
        "horizon": {
            "oneOf": [
                {"const": "infinite"},
                {
                    "type": "object",
                    "properties": {"finite": {"type": "number", "exclusiveMinimum": 0}},
                    "required": ["finite"],
                    "additionalProperties": False,
                },
            ]
        },
        "options": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "paths": {"type": "integer", "minimum": 2},
                "steps": {"type": "integer", "minimum": 1},
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "level": {"type": "number", "exclusiveMinimum": 1},
                "maxHorizon": {"type": "number", "exclusiveMinimum": 0},
                "portfolios": {"type": "array", "items": _VEC},
            },
            "additionalProperties": False,
        },
    },
    "required": ["schemaVersion", "market"],
    "additionalProperties": False,
}


@dataclass
class MarketSpec:
    triplet: LevyTriplet
    constraints: ConstraintSet
    horizon: float | None  # None is the infinite horizon
    options: dict = field(default_factory=dict)
    comment: str = ""

    def option(self, name: str, default=None):
        return self.options.get(name, default)


def parse_spec(obj: dict) -> MarketSpec:
    try:
        jsonschema.validate(obj, SPEC_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"market spec invalid at {where}: {exc.message}") from None
    tri = LevyTriplet.from_json(obj["market"])
    d = tri.dim
    cons = constraint_from_json(obj["constraints"], d) if "constraints" in obj else FullSpace(d)
    if cons.dim != d:
        raise SchemaError("constraint dimension does not match the market")
    hz = obj.get("horizon", {"finite": 1.0})
    horizon = None if hz == "infinite" else float(hz["finite"])
    return MarketSpec(tri, cons, horizon, dict(obj.get("options", {})), obj.get("comment", ""))


def load_spec(path) -> MarketSpec:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}") from None
    return parse_spec(obj)


def fixture_names() -> list[str]:
    root = resources.files("levy_nfl") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def fixture_path(name: str) -> Path:
    p = Path(str(resources.files("levy_nfl") / "fixtures" / f"{name}.json"))
    if not p.exists():
        raise FileNotFoundError(f"no bundled fixture {name!r}")
    return p


def load_fixture(name: str) -> MarketSpec:
    return load_spec(fixture_path(name))


def to_jsonable(obj):
    """Replace non-finite floats by the strings used in the schema."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return to_jsonable(obj.tolist())
    return obj
