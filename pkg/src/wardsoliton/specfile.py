"""Declarative construction files (UTF-8 JSON) and the builder behind them.

A map is a list of n expression strings in the rational-function grammar;
complex numbers are strings such as "0.5+1.5i".  Layouts per construction:

one_soliton   {"pole", "span": [map, ...]}
bt_chain      {"steps": [{"pole", "span"}, ...]}   applied to the identity in order
limiting      {"pole", "k", "columns": [[map, ...], ...], "rank_data"?}
gbt_compose   {"parts": [one_soliton or limiting object, ...]}
uniton        {"n", "k", "partition", "maps": [[map, ...], ...], "extra_spanners"?, "ranks"?}
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema

from .backlund import bt_apply, compose_multi
from .errors import ParseError, SpecError
from .limiting import LimitingData, build_chain
from .loopgroup import ExtendedSolution, SimpleElementField, SpanField
from .rational import RationalMap, parse_complex
from .uniton import UnitonSpec, uniton_build

_MAP = {"type": "array", "minItems": 2, "items": {"type": "string"}}
_SPAN = {"type": "array", "minItems": 1, "items": _MAP}
_POLE = {"type": "string"}

_ONE = {
    "type": "object",
    "required": ["construction", "pole", "span"],
    "properties": {
        "construction": {"const": "one_soliton"},
        "pole": _POLE,
        "span": _SPAN,
    },
}
_LIMITING = {
    "type": "object",
    "required": ["construction", "pole", "k", "columns"],
    "properties": {
        "construction": {"const": "limiting"},
        "pole": _POLE,
        "k": {"type": "integer", "minimum": 1, "maximum": 16},
        "columns": {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _MAP}},
        "rank_data": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    },
}
_BT = {
    "type": "object",
    "required": ["construction", "steps"],
    "properties": {
        "construction": {"const": "bt_chain"},
        "steps": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "object", "required": ["pole", "span"], "properties": {"pole": _POLE, "span": _SPAN}},
        },
    },
}
_GBT = {
    "type": "object",
    "required": ["construction", "parts"],
    "properties": {
        "construction": {"const": "gbt_compose"},
        "parts": {"type": "array", "minItems": 1, "items": {"oneOf": [_ONE, _LIMITING]}},
    },
}
_UNITON = {
    "type": "object",
    "required": ["construction", "n", "k", "partition", "maps"],
    "properties": {
        "construction": {"const": "uniton"},
        "n": {"type": "integer", "minimum": 2},
        "k": {"type": "integer", "minimum": 1},
        "partition": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "maps": {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _MAP}},
        "extra_spanners": {"type": "array", "items": {"type": "array", "minItems": 1, "items": _MAP}},
        "ranks": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    },
}
_COMMON = {"name": {"type": "string"}, "description": {"type": "string"}, "su_normalize": {"type": "boolean"}}
for _s in (_ONE, _LIMITING, _BT, _GBT, _UNITON):
    _s["properties"].update(_COMMON)

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["construction"],
    "properties": {"construction": {"enum": ["one_soliton", "bt_chain", "limiting", "gbt_compose", "uniton"]}},
    "allOf": [
        {"if": {"properties": {"construction": {"const": name}}}, "then": sch}
        for name, sch in (("one_soliton", _ONE), ("bt_chain", _BT), ("limiting", _LIMITING),
                          ("gbt_compose", _GBT), ("uniton", _UNITON))
    ],
}


def _path(err) -> str:
    return "/".join(str(x) for x in err.absolute_path) or "<root>"


def validate(doc: dict) -> None:
    """Schema check plus expression parsing and pole checks; raises SpecError."""
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise SpecError(f"{_path(e)}: {e.message}")
    try:
        build_plan(doc)
    except ParseError as exc:
        raise SpecError(f"expression: {exc}") from exc


def load(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    validate(doc)
    return doc


def _pole(text: str, where: str) -> complex:
    try:
        z = parse_complex(text)
    except ParseError as exc:
        raise SpecError(f"{where}: {exc}") from exc
    if z.imag == 0:
        raise SpecError(f"{where}: pole {text!r} is real; poles must be non-real")
    return z


def _map(exprs, where: str) -> RationalMap:
    try:
        return RationalMap.parse(list(exprs))
    except ParseError as exc:
        raise SpecError(f"{where}: {exc}") from exc


def _check_n(maps, where: str) -> int:
    ns = {m.n for m in maps}
    if len(ns) != 1:
        raise SpecError(f"{where}: maps have inconsistent dimensions {sorted(ns)}")
    return ns.pop()


def build_plan(doc: dict) -> dict:
    """Parsed inputs, without running any construction."""
    kind = doc["construction"]
    if kind == "one_soliton":
        z = _pole(doc["pole"], "pole")
        span = [_map(m, f"span/{i}") for i, m in enumerate(doc["span"])]
        return {"kind": kind, "z": z, "span": span, "n": _check_n(span, "span")}
    if kind == "bt_chain":
        steps = []
        for i, st in enumerate(doc["steps"]):
            z = _pole(st["pole"], f"steps/{i}/pole")
            span = [_map(m, f"steps/{i}/span/{j}") for j, m in enumerate(st["span"])]
            steps.append((z, span))
        _check_n([m for _, s in steps for m in s], "steps")
        return {"kind": kind, "steps": steps, "n": steps[0][1][0].n}
    if kind == "limiting":
        z = _pole(doc["pole"], "pole")
        cols = [[_map(m, f"columns/{i}/{j}") for j, m in enumerate(seq)] for i, seq in enumerate(doc["columns"])]
        n = _check_n([m for s in cols for m in s], "columns")
        rd = tuple(doc["rank_data"]) if "rank_data" in doc else None
        return {"kind": kind, "z": z, "k": int(doc["k"]), "columns": cols, "rank_data": rd, "n": n}
    if kind == "gbt_compose":
        parts = [build_plan(part) for part in doc["parts"]]
        if len({p["n"] for p in parts}) != 1:
            raise SpecError("parts: inconsistent dimensions")
        return {"kind": kind, "parts": parts, "n": parts[0]["n"]}
    if kind == "uniton":
        maps = [[_map(m, f"maps/{i}/{j}") for j, m in enumerate(fam)] for i, fam in enumerate(doc["maps"])]
        extras = [[_map(m, f"extra_spanners/{i}/{j}") for j, m in enumerate(fam)]
                  for i, fam in enumerate(doc.get("extra_spanners", []))]
        n = int(doc["n"])
        if _check_n([m for f in maps + extras for m in f], "maps") != n:
            raise SpecError("maps: dimension differs from n")
        ranks = tuple(doc["ranks"]) if "ranks" in doc else None
        return {"kind": kind, "n": n, "k": int(doc["k"]), "partition": tuple(doc["partition"]),
                "maps": maps, "extras": extras, "ranks": ranks}
    raise SpecError(f"construction: unknown kind {kind!r}")


def _construct(plan: dict) -> ExtendedSolution:
    kind = plan["kind"]
    if kind == "one_soliton":
        z = plan["z"]
        return ExtendedSolution((SimpleElementField(z, SpanField(z, plan["span"])),), plan["n"])
    if kind == "bt_chain":
        psi = ExtendedSolution.identity(plan["n"])
        for z, span in plan["steps"]:
            psi = bt_apply(psi, z, SpanField(z, span))
        return psi
    if kind == "limiting":
        data = LimitingData(plan["z"], tuple(tuple(s) for s in plan["columns"]), plan["k"], plan["rank_data"])
        return build_chain(data)[1]
    if kind == "gbt_compose":
        return compose_multi([_construct(p) for p in plan["parts"]])
    if kind == "uniton":
        spec = UnitonSpec(plan["n"], plan["k"], plan["partition"], tuple(tuple(f) for f in plan["maps"]),
                          tuple(tuple(f) for f in plan["extras"]), plan["ranks"])
        return uniton_build(spec)
    raise SpecError(f"unknown construction {kind!r}")


def build(doc: dict) -> ExtendedSolution:
    validate(doc)
    return _construct(build_plan(doc))


def record(doc: dict, psi: ExtendedSolution, summary: dict) -> dict:
    """Reloadable construction record: the validated input plus its summary."""
    return {"format": "wardsoliton-record/1", "spec": doc, "summary": summary}


def load_record(path) -> tuple[dict, ExtendedSolution]:
    rec = json.loads(Path(path).read_text(encoding="utf-8"))
    if rec.get("format") != "wardsoliton-record/1":
        raise SpecError(f"{path}: not a construction record")
    return rec, build(rec["spec"])


def shipped_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("wardsoliton.specs").iterdir() if p.name.endswith(".json"))


def shipped(name: str) -> dict:
    text = resources.files("wardsoliton.specs").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def shipped_path(name: str) -> Path:
    return Path(str(resources.files("wardsoliton.specs").joinpath(f"{name}.json")))


__all__ = ["SCHEMA", "validate", "load", "build", "build_plan", "record", "load_record",
           "shipped", "shipped_names", "shipped_path"]
