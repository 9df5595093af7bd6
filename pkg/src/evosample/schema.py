"""JSON Schema validation of emitted documents."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Any

import jsonschema


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict[str, Any]:
    text = resources.files("evosample").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_report(doc: Any) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` is not a valid report."""
    jsonschema.validate(doc, load_schema("report"))


def validate_individual(doc: Any) -> None:
    jsonschema.validate(doc, load_schema("individual"))
