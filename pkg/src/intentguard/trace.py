"""JSONL trace files: one header line, then one action event per line.

The header fixes everything replay needs for determinism::

    {"app_id": "...", "schema_path": "schema.json", "instruction": "...",
     "clock": "2025-03-14T12:00:00"}

Each event line mirrors one state-update trigger firing::

    {"action_id": "a1", "phase": "pre",
     "updates": [{"state": "ReserveInfo", "values": {"time": "18:00"}}],
     "critical": "Reserve"}

Raw JSON values are coerced into typed constants using the schema's variable
declarations, so `"Today"` is a date for a Date variable and plain text for a
Text variable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, time
from decimal import Decimal, InvalidOperation
from pathlib import Path
from .dsl import TODAY, Constant, ConstKind, Specification
from .engine import ActionEvent, Session, StateUpdate, Verdict, VerdictKind
from .schema import StateSchema, TypeKind, VarType


class TraceParseError(ValueError):
    """Trace file is malformed (bad JSON, missing header fields, bad values)."""


@dataclass(frozen=True)
class TraceHeader:
    app_id: str
    schema_path: str
    instruction: str
    clock: datetime


@dataclass(frozen=True)
class Trace:
    header: TraceHeader
    events: tuple[ActionEvent, ...]


def coerce_value(var_type: VarType, raw: object, where: str) -> Constant:
    """Turn a raw JSON value into a typed constant per the declared type."""
    kind = var_type.kind
    if kind is TypeKind.TEXT:
        if not isinstance(raw, str):
            raise TraceParseError(f"{where}: expected a string, got {raw!r}")
        return Constant.text(raw)
    if kind is TypeKind.NUMBER:
        if isinstance(raw, bool) or not isinstance(raw, (int, float, str)):
            raise TraceParseError(f"{where}: expected a number, got {raw!r}")
        try:
            return Constant.number(Decimal(str(raw)))
        except InvalidOperation:
            raise TraceParseError(f"{where}: {raw!r} is not a number") from None
    if kind is TypeKind.BOOLEAN:
        if not isinstance(raw, bool):
            raise TraceParseError(f"{where}: expected true or false, got {raw!r}")
        return Constant.boolean(raw)
    if kind is TypeKind.DATE:
        if not isinstance(raw, str):
            raise TraceParseError(f"{where}: expected 'YYYY-MM-DD' or 'Today', got {raw!r}")
        if raw.lower() == TODAY.lower():
            return Constant.today()
        try:
            return Constant.calendar(date.fromisoformat(raw))
        except ValueError:
            raise TraceParseError(f"{where}: {raw!r} is not a date") from None
    if kind is TypeKind.TIME:
        if not isinstance(raw, str) or raw.count(":") != 1:
            raise TraceParseError(f"{where}: expected 'HH:MM', got {raw!r}")
        hh, _, mm = raw.partition(":")
        try:
            return Constant.clock(time(int(hh), int(mm)))
        except ValueError:
            raise TraceParseError(f"{where}: {raw!r} is not a valid time") from None
    if kind is TypeKind.ENUM:
        if not isinstance(raw, str) or raw not in var_type.variants:
            raise TraceParseError(
                f"{where}: expected one of {list(var_type.variants)}, got {raw!r}"
            )
        return Constant.enum(raw)
    raise AssertionError(f"unhandled type {kind}")


def _event_from_dict(data: dict, schema: StateSchema, line_no: int) -> ActionEvent:
    where = f"line {line_no}"
    action_id = data.get("action_id")
    if not isinstance(action_id, str) or not action_id:
        raise TraceParseError(f"{where}: action_id must be a non-empty string")
    phase = data.get("phase", "pre")
    if phase not in ("pre", "post"):
        raise TraceParseError(f"{where}: phase must be 'pre' or 'post', got {phase!r}")
    critical = data.get("critical")
    if critical is not None and not isinstance(critical, str):
        raise TraceParseError(f"{where}: critical must be an objective name")

    updates: list[StateUpdate] = []
    raw_updates = data.get("updates", [])
    if not isinstance(raw_updates, list):
        raise TraceParseError(f"{where}: updates must be a list")
    for raw in raw_updates:
        if not isinstance(raw, dict) or not isinstance(raw.get("state"), str):
            raise TraceParseError(f"{where}: each update needs a 'state' name")
        state_name = raw["state"]
        state = schema.state(state_name)
        if state is None:
            raise TraceParseError(f"{where}: state '{state_name}' is not declared in the schema")
        values_raw = raw.get("values")
        if not isinstance(values_raw, dict) or not values_raw:
            raise TraceParseError(f"{where}: update for '{state_name}' needs non-empty 'values'")
        values: dict[str, Constant] = {}
        for var, raw_value in values_raw.items():
            declared = state.variables.get(var)
            if declared is None:
                raise TraceParseError(f"{where}: '{state_name}' has no variable '{var}'")
            values[var] = coerce_value(declared, raw_value, f"{where}: {state_name}.{var}")
        updates.append(StateUpdate(state=state_name, values=values))

    if not updates and critical is None:
        raise TraceParseError(f"{where}: event has neither updates nor a critical flag")
    return ActionEvent(action_id=action_id, phase=phase, updates=tuple(updates), critical=critical)


def parse_trace(text: str, schema: StateSchema) -> Trace:
    lines = [line for line in text.splitlines()]
    non_empty = [(i + 1, line) for i, line in enumerate(lines) if line.strip()]
    if not non_empty:
        raise TraceParseError("trace file is empty")

    header_no, header_line = non_empty[0]
    try:
        header_raw = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"line {header_no}: header is not valid JSON: {exc}") from exc
    for key in ("app_id", "instruction", "clock"):
        if not isinstance(header_raw.get(key), str) or not header_raw[key]:
            raise TraceParseError(f"line {header_no}: header needs a non-empty '{key}'")
    try:
        clock = datetime.fromisoformat(header_raw["clock"])
    except ValueError as exc:
        raise TraceParseError(f"line {header_no}: clock {header_raw['clock']!r} is not ISO format") from exc
    header = TraceHeader(
        app_id=header_raw["app_id"],
        schema_path=header_raw.get("schema_path", ""),
        instruction=header_raw["instruction"],
        clock=clock,
    )

    events: list[ActionEvent] = []
    seen_ids: set[str] = set()
    for line_no, line in non_empty[1:]:
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"line {line_no}: not valid JSON: {exc}") from exc
        event = _event_from_dict(data, schema, line_no)
        if event.action_id in seen_ids:
            raise TraceParseError(f"line {line_no}: duplicate action_id '{event.action_id}'")
        seen_ids.add(event.action_id)
        events.append(event)
    return Trace(header=header, events=tuple(events))


def load_trace(path: str | Path, schema: StateSchema) -> Trace:
    return parse_trace(Path(path).read_text(encoding="utf-8"), schema)


def event_to_dict(event: ActionEvent) -> dict:
    def raw(value: Constant) -> object:
        if value.kind is ConstKind.BOOLEAN:
            return bool(value.value)
        if value.kind is ConstKind.NUMBER:
            as_decimal = value.value
            if as_decimal == as_decimal.to_integral_value():
                return int(as_decimal)
            as_float = float(as_decimal)
            # keep the exact literal when binary floats would corrupt it
            return as_float if Decimal(str(as_float)) == as_decimal else str(as_decimal)
        if value.kind is ConstKind.TEXT:
            return str(value.value)
        if value.kind is ConstKind.DATE:
            return TODAY if value.is_today else value.value.isoformat()
        if value.kind is ConstKind.TIME:
            return value.value.strftime("%H:%M")
        if value.kind is ConstKind.ENUM:
            return str(value.value)
        raise ValueError(f"{value.kind.value} values cannot appear in trace events")

    data: dict = {
        "action_id": event.action_id,
        "phase": event.phase,
        "updates": [
            {"state": u.state, "values": {var: raw(val) for var, val in u.values.items()}}
            for u in event.updates
        ],
    }
    if event.critical is not None:
        data["critical"] = event.critical
    return data


def write_trace(trace: Trace, path: str | Path) -> None:
    header = {
        "app_id": trace.header.app_id,
        "schema_path": trace.header.schema_path,
        "instruction": trace.header.instruction,
        "clock": trace.header.clock.isoformat(),
    }
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(json.dumps(event_to_dict(e), sort_keys=True) for e in trace.events)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class ReplayResult:
    verdicts: list[Verdict] = field(default_factory=list)
    done: bool = False

    @property
    def passed(self) -> bool:
        return self.done


def replay(spec: Specification, schema: StateSchema, trace: Trace, similarity=None) -> ReplayResult:
    """Run every event through a fresh session; stop at task completion.

    Pure rule evaluation: no model completions happen here, which is the whole
    point of encoding the instruction up front.
    """
    session = Session(spec, schema, trace.header.clock, similarity=similarity)
    result = ReplayResult()
    for event in trace.events:
        verdict = session.submit_action(event)
        result.verdicts.append(verdict)
        if verdict.kind is VerdictKind.TASK_DONE:
            result.done = True
            break
    return result
