"""JSON files for recursive specs and one-dimensional semilinear functions."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema

from .funcspec import (
    Domain1D,
    ObliviousSpec,
    Piece1D,
    QuiltAffine,
    Semilinear1D,
    SpecError,
    format_rational,
    parse_rational,
    spec_validate,
)

__all__ = [
    "SpecFileError",
    "SpecValidationError",
    "SPEC_SCHEMA",
    "SEMILINEAR_SCHEMA",
    "spec_from_json",
    "spec_to_json",
    "parse_spec_file",
    "write_spec_file",
    "semilinear_from_json",
    "semilinear_to_json",
    "parse_semilinear_file",
]

_RATIONAL = {
    "oneOf": [
        {"type": "integer"},
        {"type": "string", "pattern": r"^\s*-?\d+\s*(/\s*[1-9]\d*\s*)?$"},
    ]
}
_NAT = {"type": "integer", "minimum": 0}

SPEC_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$ref": "#/$defs/spec",
    "$defs": {
        "rational": _RATIONAL,
        "piece": {
            "type": "object",
            "additionalProperties": False,
            "required": ["gradient"],
            "properties": {
                "gradient": {"type": "array", "items": {"$ref": "#/$defs/rational"}},
                "period": {"type": "integer", "minimum": 1},
                "offsets": {
                    "type": "object",
                    "propertyNames": {"pattern": r"^(\d+(,\d+)*)?$"},
                    "additionalProperties": {"$ref": "#/$defs/rational"},
                },
            },
        },
        "restriction": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axis", "value", "spec"],
            "properties": {
                "axis": {"type": "integer", "minimum": 1},
                "value": _NAT,
                "spec": {"$ref": "#/$defs/spec"},
            },
        },
        "spec": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dimension", "floor", "pieces"],
            "properties": {
                "dimension": _NAT,
                "floor": {"type": "array", "items": _NAT},
                "pieces": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/piece"}},
                "restrictions": {"type": "array", "items": {"$ref": "#/$defs/restriction"}},
                "reference": {"type": "string"},
            },
        },
    },
}

SEMILINEAR_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "pieces"],
    "properties": {
        "kind": {"const": "semilinear-1d"},
        "pieces": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["slope"],
                "properties": {
                    "lower": _NAT,
                    "upper": {"oneOf": [_NAT, {"type": "null"}]},
                    "modulus": {"type": "integer", "minimum": 1},
                    "residue": _NAT,
                    "slope": _RATIONAL,
                    "intercept": _RATIONAL,
                },
            },
        },
    },
}


class SpecFileError(ValueError):
    """Schema or validation failure; ``pointer`` locates the offending JSON node."""

    def __init__(self, message: str, pointer: str = "", witness=None):
        super().__init__(f"{pointer or '/'}: {message}" if pointer else message)
        self.pointer = pointer
        self.witness = witness


class SpecValidationError(SpecFileError):
    """The file parsed but the spec failed :func:`spec_validate`."""


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def _check_schema(data: Any, schema: dict) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        e = errors[0]
        raise SpecFileError(f"schema violation: {e.message}", _pointer(e.absolute_path))


def _piece_from_json(obj: dict, d: int, where: str) -> QuiltAffine:
    gradient = obj["gradient"]
    if len(gradient) != d:
        raise SpecFileError(f"gradient has {len(gradient)} entries, expected {d}", f"{where}/gradient")
    period = obj.get("period", 1)
    table = {}
    for key, value in obj.get("offsets", {}).items():
        cls = tuple(int(v) for v in key.split(",")) if key else ()
        if len(cls) != d or any(v >= period for v in cls):
            raise SpecFileError(f"offset key {key!r} is not a residue class mod {period} in dimension {d}", f"{where}/offsets")
        table[cls] = value
    try:
        return QuiltAffine.make(gradient, period, table)
    except SpecError as e:
        raise SpecFileError(str(e), where) from None


def _spec_from_json(obj: dict, where: str, fixed=()) -> ObliviousSpec:
    d = obj["dimension"]
    pieces = tuple(_piece_from_json(p, d, f"{where}/pieces/{k}") for k, p in enumerate(obj["pieces"]))
    restrictions = []
    for k, r in enumerate(obj.get("restrictions", [])):
        here = f"{where}/restrictions/{k}"
        key = (r["axis"] - 1, r["value"])
        if key[0] >= d:
            raise SpecFileError(f"axis {r['axis']} outside dimension {d}", f"{here}/axis")
        child_fixed = tuple(sorted(tuple(fixed) + (key,)))
        restrictions.append((key, _spec_from_json(r["spec"], f"{here}/spec", child_fixed)))
    try:
        return ObliviousSpec(d, tuple(obj["floor"]), pieces, tuple(restrictions), tuple(fixed), obj.get("reference"))
    except SpecError as e:
        raise SpecFileError(str(e), where) from None


def spec_from_json(data: Any) -> ObliviousSpec:
    """Schema-check and build a spec (no semantic validation)."""
    _check_schema(data, SPEC_SCHEMA)
    return _spec_from_json(data, "")


def spec_to_json(s: ObliviousSpec) -> dict:
    out: dict[str, Any] = {"dimension": s.dimension, "floor": list(s.floor), "pieces": []}
    for g in s.pieces:
        piece: dict[str, Any] = {"gradient": [format_rational(q) for q in g.gradient], "period": g.period}
        offsets = {",".join(map(str, c)): format_rational(g.offset(c)) for c in g.classes() if g.offset(c)}
        if offsets:
            piece["offsets"] = offsets
        out["pieces"].append(piece)
    if s.restrictions:
        out["restrictions"] = [
            {"axis": i + 1, "value": j, "spec": spec_to_json(sub)} for (i, j), sub in s.restrictions
        ]
    if s.reference:
        out["reference"] = s.reference
    return out


def parse_spec_file(path: str | Path, validate: bool = True) -> ObliviousSpec:
    """Strict parse; with ``validate`` also run :func:`spec_validate`.

    A ``reference`` field naming a builtin is checked against the spec.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SpecFileError(f"invalid JSON: {e}") from None
    s = spec_from_json(data)
    if validate:
        reference = None
        if s.reference:
            from .builtins import UnknownBuiltin, builtin_function

            try:
                reference = builtin_function(s.reference)
            except UnknownBuiltin as e:
                raise SpecFileError(str(e), "/reference") from None
        report = spec_validate(s, reference=reference)
        if not report:
            raise SpecValidationError(f"validation failed ({report.check}): {report.message}", witness=report.witness)
    return s


def write_spec_file(s: ObliviousSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec_to_json(s), indent=2) + "\n")


def semilinear_from_json(data: Any) -> Semilinear1D:
    _check_schema(data, SEMILINEAR_SCHEMA)
    pieces = []
    for p in data["pieces"]:
        dom = Domain1D(p.get("lower", 0), p.get("upper"), p.get("modulus", 1), p.get("residue", 0))
        pieces.append(Piece1D(dom, parse_rational(p["slope"]), parse_rational(p.get("intercept", 0))))
    try:
        return Semilinear1D(tuple(pieces))
    except SpecError as e:
        raise SpecFileError(str(e), "/pieces") from None


def semilinear_to_json(f: Semilinear1D) -> dict:
    pieces = []
    for p in f.pieces:
        d = p.domain
        pieces.append(
            {
                "lower": d.lower,
                "upper": d.upper,
                "modulus": d.modulus,
                "residue": d.residue,
                "slope": format_rational(p.slope),
                "intercept": format_rational(p.intercept),
            }
        )
    return {"kind": "semilinear-1d", "pieces": pieces}


def parse_semilinear_file(path: str | Path) -> Semilinear1D:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SpecFileError(f"invalid JSON: {e}") from None
    return semilinear_from_json(data)
