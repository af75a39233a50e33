"""Developer-declared application state definitions.

A schema bounds the vocabulary a specification may talk about: which abstract
states exist, what each one means, and the typed variables it exposes.  The
on-disk format is a JSON document::

    {
      "app_id": "restaurant_demo",
      "states": [
        {
          "name": "RestaurantInfo",
          "description": "Information about the restaurant you want to reserve",
          "variables": [{"name": "Text"}]
        }
      ]
    }

Each entry of ``variables`` is a single-key object mapping a variable name to
a type name: ``Text`` (alias ``String``), ``Number``, ``Boolean`` (alias
``Bool``), ``Date``, ``Time``, or ``Enum[A, B, ...]``.  A flat
``{"var": "Type", ...}`` object is accepted as a shorthand for the list form.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class TypeKind(Enum):
    TEXT = "Text"
    NUMBER = "Number"
    BOOLEAN = "Boolean"
    DATE = "Date"
    TIME = "Time"
    ENUM = "Enum"


_TYPE_ALIASES = {
    "text": TypeKind.TEXT,
    "string": TypeKind.TEXT,
    "str": TypeKind.TEXT,
    "number": TypeKind.NUMBER,
    "boolean": TypeKind.BOOLEAN,
    "bool": TypeKind.BOOLEAN,
    "date": TypeKind.DATE,
    "time": TypeKind.TIME,
}

_ENUM_RE = re.compile(r"^enum\s*\[(?P<variants>.*)\]$", re.IGNORECASE)


@dataclass(frozen=True)
class VarType:
    kind: TypeKind
    variants: tuple[str, ...] = ()

    def describe(self) -> str:
        if self.kind is TypeKind.ENUM:
            return f"Enum[{', '.join(self.variants)}]"
        return self.kind.value


@dataclass(frozen=True)
class StateDef:
    name: str
    description: str
    variables: dict[str, VarType] = field(default_factory=dict)


@dataclass(frozen=True)
class StateSchema:
    app_id: str
    states: tuple[StateDef, ...]

    def state(self, name: str) -> StateDef | None:
        for s in self.states:
            if s.name == name:
                return s
        return None


@dataclass(frozen=True)
class SchemaIssue:
    path: str
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.path}: {self.message}"


class SchemaError(ValueError):
    """Schema file failed validation; carries every issue found."""

    def __init__(self, issues: list[SchemaIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def parse_var_type(text: str) -> VarType | None:
    """Parse a type name; returns None when the name is unknown."""
    lowered = text.strip().lower()
    if lowered in _TYPE_ALIASES:
        return VarType(_TYPE_ALIASES[lowered])
    match = _ENUM_RE.match(text.strip())
    if match:
        variants = tuple(v.strip() for v in match.group("variants").split(",") if v.strip())
        return VarType(TypeKind.ENUM, variants)
    return None


def _parse_variables(raw: object, path: str, issues: list[SchemaIssue]) -> dict[str, VarType]:
    entries: list[tuple[str, object]] = []
    if isinstance(raw, dict):
        entries = list(raw.items())
    elif isinstance(raw, list):
        for i, item in enumerate(raw):
            if not isinstance(item, dict) or len(item) != 1:
                issues.append(
                    SchemaIssue(f"{path}[{i}]", "BAD_VARIABLE", "expected a single-key object like {\"name\": \"Text\"}")
                )
                continue
            entries.append(next(iter(item.items())))
    else:
        issues.append(SchemaIssue(path, "BAD_VARIABLE", "expected a list of single-key objects or an object"))
        return {}

    variables: dict[str, VarType] = {}
    for name, type_text in entries:
        var_path = f"{path}.{name}"
        if not isinstance(name, str) or not _IDENT_RE.match(name):
            issues.append(SchemaIssue(var_path, "BAD_VARIABLE", f"variable name {name!r} is not an identifier"))
            continue
        if name in variables:
            issues.append(SchemaIssue(var_path, "DUPLICATE_VARIABLE", f"variable '{name}' declared twice"))
            continue
        if not isinstance(type_text, str):
            issues.append(SchemaIssue(var_path, "UNKNOWN_TYPE", f"type must be a string, got {type_text!r}"))
            continue
        var_type = parse_var_type(type_text)
        if var_type is None:
            issues.append(
                SchemaIssue(
                    var_path,
                    "UNKNOWN_TYPE",
                    f"unknown type {type_text!r}; expected Text, Number, Boolean, Date, Time, or Enum[...]",
                )
            )
            continue
        if var_type.kind is TypeKind.ENUM and not var_type.variants:
            issues.append(SchemaIssue(var_path, "EMPTY_ENUM", "an Enum type needs at least one variant"))
            continue
        variables[name] = var_type
    return variables


def schema_from_dict(data: object) -> StateSchema:
    """Validate a decoded JSON document and build the schema.

    Raises :class:`SchemaError` carrying every issue, each with the offending
    field path.
    """
    issues: list[SchemaIssue] = []
    if not isinstance(data, dict):
        raise SchemaError([SchemaIssue("$", "BAD_DOCUMENT", "top level must be an object")])

    app_id = data.get("app_id")
    if not isinstance(app_id, str) or not app_id.strip():
        issues.append(SchemaIssue("app_id", "BAD_APP_ID", "app_id must be a non-empty string"))
        app_id = ""

    raw_states = data.get("states")
    states: list[StateDef] = []
    if not isinstance(raw_states, list) or not raw_states:
        issues.append(SchemaIssue("states", "NO_STATES", "at least one state must be declared"))
        raw_states = []

    seen_names: set[str] = set()
    for i, raw in enumerate(raw_states):
        path = f"states[{i}]"
        if not isinstance(raw, dict):
            issues.append(SchemaIssue(path, "BAD_STATE", "expected an object"))
            continue
        name = raw.get("name")
        if not isinstance(name, str) or not _IDENT_RE.match(name):
            issues.append(SchemaIssue(f"{path}.name", "BAD_STATE", f"state name {name!r} is not an identifier"))
            continue
        if name in seen_names:
            issues.append(SchemaIssue(f"{path}.name", "DUPLICATE_STATE", f"state '{name}' declared twice"))
            continue
        seen_names.add(name)
        description = raw.get("description", "")
        if not isinstance(description, str):
            issues.append(SchemaIssue(f"{path}.description", "BAD_STATE", "description must be a string"))
            description = ""
        variables = _parse_variables(raw.get("variables", []), f"{path}.variables", issues)
        if not variables:
            issues.append(SchemaIssue(f"{path}.variables", "NO_VARIABLES", f"state '{name}' declares no variables"))
            continue
        states.append(StateDef(name=name, description=description, variables=variables))

    if issues:
        raise SchemaError(issues)
    return StateSchema(app_id=app_id, states=tuple(states))


def load_schema(path: str | Path) -> StateSchema:
    """Load and validate a schema JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError([SchemaIssue("$", "BAD_JSON", str(exc))]) from exc
    return schema_from_dict(data)


def schema_to_dict(schema: StateSchema) -> dict:
    return {
        "app_id": schema.app_id,
        "states": [
            {
                "name": s.name,
                "description": s.description,
                "variables": [{name: var.describe()} for name, var in s.variables.items()],
            }
            for s in schema.states
        ],
    }


def save_schema(schema: StateSchema, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schema_to_dict(schema), indent=2) + "\n", encoding="utf-8")


def describe_states(schema: StateSchema) -> str:
    """Render the schema as deterministic prompt text for the encoding model.

    States and variables are listed sorted by name, so two permutations of the
    same schema describe identically.
    """
    lines: list[str] = []
    for state in sorted(schema.states, key=lambda s: s.name):
        description = state.description.strip() or "(no description)"
        lines.append(f"- {state.name}: {description}")
        for name in sorted(state.variables):
            lines.append(f"    {name}: {state.variables[name].describe()}")
    return "\n".join(lines) + "\n"
