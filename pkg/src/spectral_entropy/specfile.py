"""JSON measure specifications.

A spec is an object ``{"kind": ..., "params": {...}, "fourier_tolerance": x}``
where only ``kind`` is required.  Unknown fields are rejected.  Preset names
(``"uniform"``, ``"cantor"``, ``"appendix"``, ``"atomic"``, ``"binomial(0.8)"``)
may be given as bare strings instead of a file path.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

import jsonschema
import numpy as np

from .measures import (
    AppendixMeasure,
    AtomicMeasure,
    DigitProductMeasure,
    IfsMeasure,
    MixtureMeasure,
    SpectralMeasure,
    binomial,
    cantor,
    uniform,
)


class SpecError(ValueError):
    """Invalid measure specification."""


_prob_vector = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2}
_unit = {"type": "number", "minimum": 0, "maximum": 1}

_PARAMS = {
    "atomic": {
        "type": "object",
        "properties": {
            "positions": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "weights": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        },
        "required": ["positions", "weights"],
        "additionalProperties": False,
    },
    "ifs": {
        "type": "object",
        "properties": {
            "scales": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "offsets": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "probs": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        },
        "required": ["scales", "offsets", "probs"],
        "additionalProperties": False,
    },
    "digit": {
        "type": "object",
        "properties": {
            "base": {"type": "integer", "minimum": 2},
            "prefix": {"type": "array", "items": _prob_vector},
            "tail": _prob_vector,
        },
        "required": ["base", "tail"],
        "additionalProperties": False,
    },
    "mixture": {
        "type": "object",
        "properties": {
            "P": _unit,
            "atoms": {"$ref": "#/$defs/atomic_params"},
            "continuous": {"$ref": "#"},
        },
        "required": ["P", "atoms", "continuous"],
        "additionalProperties": False,
    },
    "binomial": {
        "type": "object",
        "properties": {"p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        "required": ["p"],
        "additionalProperties": False,
    },
}
_EMPTY = {"type": "object", "additionalProperties": False}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "kind": {"enum": ["atomic", "ifs", "digit", "mixture", "appendix", "uniform", "cantor", "binomial"]},
        "params": {"type": "object"},
        "fourier_tolerance": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-3},
    },
    "required": ["kind"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"kind": {"const": k}}},
         "then": {"properties": {"params": _PARAMS.get(k, _EMPTY)},
                  **({"required": ["kind", "params"]} if k in _PARAMS else {})}}
        for k in ["atomic", "ifs", "digit", "mixture", "appendix", "uniform", "cantor", "binomial"]
    ],
    "$defs": {"atomic_params": _PARAMS["atomic"]},
}

PRESETS = {
    "uniform": {"kind": "uniform"},
    "cantor": {"kind": "cantor"},
    "appendix": {"kind": "appendix"},
    "atomic": {"kind": "atomic", "params": {"positions": [1.0], "weights": [1.0]}},
}
_BINOMIAL = re.compile(r"^binomial\(\s*([0-9.eE+-]+)\s*\)$")


def validate(spec: dict) -> None:
    try:
        jsonschema.validate(spec, SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SpecError(f"{where}: {e.message}") from None


def build(spec: dict) -> SpectralMeasure:
    """Construct the measure described by a validated spec dictionary."""
    validate(spec)
    kind = spec["kind"]
    p = spec.get("params", {})
    kw = {"fourier_tolerance": spec["fourier_tolerance"]} if "fourier_tolerance" in spec else {}
    try:
        if kind == "uniform":
            return uniform(**kw)
        if kind == "cantor":
            return cantor(**kw)
        if kind == "appendix":
            return AppendixMeasure(**kw)
        if kind == "binomial":
            return binomial(p["p"], **kw)
        if kind == "atomic":
            return AtomicMeasure(p["positions"], p["weights"], **kw)
        if kind == "ifs":
            return IfsMeasure(p["scales"], p["offsets"], p["probs"], **kw)
        if kind == "digit":
            return _digit(p, kw)
        if kind == "mixture":
            cont = build(p["continuous"])
            atoms = AtomicMeasure(p["atoms"]["positions"], p["atoms"]["weights"])
            return MixtureMeasure(atoms, cont, p["P"], **kw)
    except (ValueError, TypeError) as e:
        if isinstance(e, SpecError):
            raise
        raise SpecError(f"{kind}: {e}") from None
    raise SpecError(f"unknown kind {kind!r}")  # unreachable after validation


def _digit(p: dict, kw: dict) -> DigitProductMeasure:
    base = p["base"]
    laws = [np.asarray(v, dtype=float) for v in p.get("prefix", [])] + [np.asarray(p["tail"], dtype=float)]
    for v in laws:
        if len(v) != base or not math.isclose(v.sum(), 1.0, abs_tol=1e-12):
            raise SpecError(f"digit laws must have {base} entries summing to 1")
    if np.count_nonzero(laws[-1]) < 2:
        raise SpecError("the tail digit law needs two possible digits (otherwise the measure has atoms)")
    prefix, tail = laws[:-1], laws[-1]
    return DigitProductMeasure(base, lambda n: prefix[n - 1] if n <= len(prefix) else tail, name="digit", **kw)


def resolve(ref: str) -> tuple[SpectralMeasure, dict]:
    """Measure and spec dict from a preset name or a JSON file path."""
    if ref in PRESETS:
        spec = PRESETS[ref]
    elif (mb := _BINOMIAL.match(ref)):
        try:
            spec = {"kind": "binomial", "params": {"p": float(mb.group(1))}}
        except ValueError:
            raise SpecError(f"bad binomial parameter in {ref!r}") from None
    else:
        path = Path(ref)
        if not path.is_file():
            raise SpecError(f"{ref!r} is neither a preset nor a readable file")
        try:
            spec = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise SpecError(f"{ref}: line {e.lineno}: {e.msg}") from None
    return build(spec), spec
