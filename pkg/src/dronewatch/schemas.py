"""Shared JSON document helpers: schema tags, canonical dumps, field errors."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any


class SchemaError(ValueError):
    """A config/document failed validation; message names the field path."""


def load_document(path: str | Path, expected_schema: str) -> dict:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object at top level")
    check_schema(doc, expected_schema, where=str(path))
    return doc


def check_schema(doc: dict, expected: str, where: str = "document") -> None:
    got = doc.get("schema")
    if got != expected:
        raise SchemaError(f"{where}: schema: expected {expected!r}, got {got!r}")


def require(doc: dict, field: str, kind: type | tuple, where: str) -> Any:
    if field not in doc:
        raise SchemaError(f"{where}: missing field {field!r}")
    value = doc[field]
    if kind is float:
        kind = (int, float)
    if not isinstance(value, kind) or isinstance(value, bool) and kind != bool:
        raise SchemaError(f"{where}: field {field!r} has wrong type {type(value).__name__}")
    return value


def canonical_json(doc: Any) -> str:
    """Deterministic serialization: sorted keys, fixed separators."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def dump_document(doc: dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
