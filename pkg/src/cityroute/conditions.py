"""Scheduled road conditions: closures, one-way restrictions, congestion.

A rule attaches a condition kind to one segment and a schedule saying when it
applies. Schedules use local civil time; weekly windows are half-open
[start_minute, end_minute) and a window that runs past midnight belongs to the
weekday it starts on.
"""

from __future__ import annotations

import datetime as dt
import json
import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .errors import MixedSegmentsError, ParseError, ValidationError
from .network import RoadNetwork
from .storage import JsonlTable

WEEKDAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
MINUTES_PER_DAY = 1440


class RuleKind(str, Enum):
    CLOSED = "CLOSED"
    ONE_WAY_FORWARD = "ONE_WAY_FORWARD"
    ONE_WAY_REVERSE = "ONE_WAY_REVERSE"
    CONGESTION = "CONGESTION"


class ScheduleKind(str, Enum):
    WEEKLY = "WEEKLY"
    ABSOLUTE = "ABSOLUTE"


@dataclass(frozen=True)
class Schedule:
    """When a rule applies. Weekly fields are used for WEEKLY schedules,
    the datetime fields for ABSOLUTE ones."""

    kind: ScheduleKind
    weekdays: frozenset[int] = frozenset()
    start_minute: int = 0
    end_minute: int = 0
    start_at: dt.datetime | None = None
    end_at: dt.datetime | None = None

    @classmethod
    def weekly(cls, weekdays, start_minute: int, end_minute: int) -> "Schedule":
        return cls(
            kind=ScheduleKind.WEEKLY,
            weekdays=frozenset(weekdays),
            start_minute=start_minute,
            end_minute=end_minute,
        )

    @classmethod
    def absolute(cls, start_at: dt.datetime, end_at: dt.datetime | None = None) -> "Schedule":
        return cls(kind=ScheduleKind.ABSOLUTE, start_at=start_at, end_at=end_at)


@dataclass(frozen=True)
class ConditionRule:
    """One condition on one segment, active whenever its schedule says so."""

    id: int
    segment_id: int
    kind: RuleKind
    schedule: Schedule
    multiplier: float | None = None
    note: str = ""


@dataclass(frozen=True)
class SegmentStatus:
    """Resolved traversability of a segment at one instant."""

    forward_open: bool
    reverse_open: bool
    cost_multiplier: float


OPEN_STATUS = SegmentStatus(forward_open=True, reverse_open=True, cost_multiplier=1.0)


def rule_active_at(rule: ConditionRule, t: dt.datetime) -> bool:
    """Whether the rule's schedule covers the instant ``t``."""
    schedule = rule.schedule
    if schedule.kind is ScheduleKind.ABSOLUTE:
        if schedule.start_at is None or t < schedule.start_at:
            return False
        return schedule.end_at is None or t < schedule.end_at

    minute = t.hour * 60 + t.minute
    if schedule.start_minute < schedule.end_minute:
        return t.weekday() in schedule.weekdays and schedule.start_minute <= minute < schedule.end_minute
    # Window wraps midnight: it belongs to the weekday it starts on, so the
    # part before end_minute matches when the *previous* day is listed.
    if t.weekday() in schedule.weekdays and minute >= schedule.start_minute:
        return True
    previous_day = (t.weekday() - 1) % 7
    return previous_day in schedule.weekdays and minute < schedule.end_minute


def resolve_segment_status(rules, t: dt.datetime) -> SegmentStatus:
    """Combine all rules of one segment into a single status at instant ``t``.

    CLOSED dominates; the two one-way kinds each shut one direction (both
    together shut both); congestion multipliers combine by maximum.
    """
    segment_ids = {rule.segment_id for rule in rules}
    if len(segment_ids) > 1:
        raise MixedSegmentsError(f"rules span segments {sorted(segment_ids)}")
    forward = True
    reverse = True
    multiplier = 1.0
    for rule in rules:
        if not rule_active_at(rule, t):
            continue
        if rule.kind is RuleKind.CLOSED:
            forward = False
            reverse = False
        elif rule.kind is RuleKind.ONE_WAY_FORWARD:
            reverse = False
        elif rule.kind is RuleKind.ONE_WAY_REVERSE:
            forward = False
        elif rule.kind is RuleKind.CONGESTION:
            multiplier = max(multiplier, rule.multiplier)
    return SegmentStatus(forward_open=forward, reverse_open=reverse, cost_multiplier=multiplier)


def validate_rule(rule: ConditionRule, network: RoadNetwork) -> None:
    """Raise ValidationError unless the rule is well formed and targets a
    segment the network actually has."""
    if rule.id <= 0:
        raise ValidationError(f"rule {rule.id}: id must be positive")
    if rule.segment_id not in network.segments:
        raise ValidationError(f"rule {rule.id}: unknown segment {rule.segment_id}")
    if rule.kind is RuleKind.CONGESTION:
        if rule.multiplier is None:
            raise ValidationError(f"rule {rule.id}: congestion rule requires a multiplier")
        if rule.multiplier <= 1.0:
            raise ValidationError(f"rule {rule.id}: multiplier must be greater than 1")
    elif rule.multiplier is not None:
        raise ValidationError(f"rule {rule.id}: multiplier is only valid on congestion rules")
    _validate_schedule(rule.schedule, rule.id)


def _validate_schedule(schedule: Schedule, rule_id: int) -> None:
    if schedule.kind is ScheduleKind.WEEKLY:
        if not schedule.weekdays:
            raise ValidationError(f"rule {rule_id}: weekly schedule needs at least one weekday")
        for day in schedule.weekdays:
            if not 0 <= day <= 6:
                raise ValidationError(f"rule {rule_id}: weekday index {day} out of range")
        for minute in (schedule.start_minute, schedule.end_minute):
            if not 0 <= minute <= MINUTES_PER_DAY:
                raise ValidationError(f"rule {rule_id}: minute {minute} out of range")
        if schedule.start_minute == schedule.end_minute:
            raise ValidationError(f"rule {rule_id}: start_minute equals end_minute")
    else:
        if schedule.start_at is None:
            raise ValidationError(f"rule {rule_id}: absolute schedule needs start_at")
        if schedule.end_at is not None and schedule.end_at <= schedule.start_at:
            raise ValidationError(f"rule {rule_id}: end_at must fall after start_at")


_RULE_KEYS = {"id", "segment_id", "kind", "multiplier", "schedule", "note"}
_WEEKLY_KEYS = {"kind", "weekdays", "start_minute", "end_minute"}
_ABSOLUTE_KEYS = {"kind", "start_at", "end_at"}


def _parse_datetime(raw, where: str) -> dt.datetime:
    if not isinstance(raw, str):
        raise ParseError(f"{where}: expected an ISO-8601 datetime string")
    try:
        return dt.datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ParseError(f"{where}: bad datetime {raw!r}") from exc


def _parse_schedule(obj, where: str) -> Schedule:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: schedule must be an object")
    kind = obj.get("kind")
    if kind == ScheduleKind.WEEKLY.value:
        unknown = set(obj) - _WEEKLY_KEYS
        if unknown:
            raise ParseError(f"{where}: unknown schedule key {sorted(unknown)[0]!r}")
        for key in ("weekdays", "start_minute", "end_minute"):
            if key not in obj:
                raise ParseError(f"{where}: schedule missing key {key!r}")
        raw_days = obj["weekdays"]
        if not isinstance(raw_days, list):
            raise ParseError(f"{where}: weekdays must be an array of day names")
        days = []
        for name in raw_days:
            if name not in WEEKDAY_NAMES:
                raise ParseError(f"{where}: unknown weekday {name!r}")
            days.append(WEEKDAY_NAMES.index(name))
        for key in ("start_minute", "end_minute"):
            if isinstance(obj[key], bool) or not isinstance(obj[key], int):
                raise ParseError(f"{where}: {key} must be an integer minute of day")
        return Schedule.weekly(days, obj["start_minute"], obj["end_minute"])
    if kind == ScheduleKind.ABSOLUTE.value:
        unknown = set(obj) - _ABSOLUTE_KEYS
        if unknown:
            raise ParseError(f"{where}: unknown schedule key {sorted(unknown)[0]!r}")
        if "start_at" not in obj:
            raise ParseError(f"{where}: schedule missing key 'start_at'")
        start_at = _parse_datetime(obj["start_at"], where)
        end_at = None
        if obj.get("end_at") is not None:
            end_at = _parse_datetime(obj["end_at"], where)
        return Schedule.absolute(start_at, end_at)
    raise ParseError(f"{where}: schedule kind must be 'WEEKLY' or 'ABSOLUTE'")


def parse_rule(obj: dict) -> ConditionRule:
    """Decode one rule document. Shape problems raise ParseError; semantic
    checks are left to validate_rule."""
    if not isinstance(obj, dict):
        raise ParseError("rule document must be a JSON object")
    where = f"rule {obj.get('id', '?')}"
    unknown = set(obj) - _RULE_KEYS
    if unknown:
        raise ParseError(f"{where}: unknown key {sorted(unknown)[0]!r}")
    for key in ("id", "segment_id", "kind", "schedule"):
        if key not in obj:
            raise ParseError(f"{where}: missing key {key!r}")
    for key in ("id", "segment_id"):
        if isinstance(obj[key], bool) or not isinstance(obj[key], int):
            raise ParseError(f"{where}: {key} must be an integer")
    try:
        kind = RuleKind(obj["kind"])
    except ValueError:
        raise ParseError(f"{where}: unknown rule kind {obj['kind']!r}") from None
    multiplier = obj.get("multiplier")
    if multiplier is not None:
        if isinstance(multiplier, bool) or not isinstance(multiplier, (int, float)):
            raise ParseError(f"{where}: multiplier must be a number")
        multiplier = float(multiplier)
    note = obj.get("note", "")
    if not isinstance(note, str):
        raise ParseError(f"{where}: note must be a string")
    schedule = _parse_schedule(obj["schedule"], where)
    return ConditionRule(
        id=obj["id"], segment_id=obj["segment_id"], kind=kind,
        schedule=schedule, multiplier=multiplier, note=note,
    )


def serialize_rule(rule: ConditionRule) -> dict:
    """Rule back to its document form. Inverse of parse_rule."""
    schedule = rule.schedule
    if schedule.kind is ScheduleKind.WEEKLY:
        schedule_doc: dict = {
            "kind": "WEEKLY",
            "weekdays": [WEEKDAY_NAMES[d] for d in sorted(schedule.weekdays)],
            "start_minute": schedule.start_minute,
            "end_minute": schedule.end_minute,
        }
    else:
        schedule_doc = {"kind": "ABSOLUTE", "start_at": schedule.start_at.isoformat()}
        if schedule.end_at is not None:
            schedule_doc["end_at"] = schedule.end_at.isoformat()
    doc: dict = {
        "id": rule.id,
        "segment_id": rule.segment_id,
        "kind": rule.kind.value,
        "schedule": schedule_doc,
    }
    if rule.multiplier is not None:
        doc["multiplier"] = rule.multiplier
    if rule.note:
        doc["note"] = rule.note
    return doc


class RuleStore:
    """Single-writer rule collection with a generation counter.

    Every mutation appends one line to the backing JSON-lines file and bumps
    the generation, so readers can take a (generation, rules) snapshot and
    know the rule set it reflects.
    """

    def __init__(self, path: str | Path | None = None):
        self._table = JsonlTable(path)
        self._lock = threading.RLock()

    @property
    def generation(self) -> int:
        return self._table.appended

    def list_rules(self) -> list[ConditionRule]:
        with self._lock:
            return [parse_rule(record["rule"]) for record in self._table.all_records()]

    def get(self, rule_id: int) -> ConditionRule | None:
        with self._lock:
            record = self._table.get(rule_id)
            return parse_rule(record["rule"]) if record else None

    def snapshot(self) -> tuple[int, tuple[ConditionRule, ...]]:
        with self._lock:
            return self._table.appended, tuple(self.list_rules())

    def add(self, rule: ConditionRule) -> int:
        with self._lock:
            if self._table.get(rule.id) is not None:
                raise ValidationError(f"rule {rule.id}: id already in use")
            self._table.put({"id": rule.id, "rule": serialize_rule(rule)})
            return self._table.appended

    def replace(self, rule: ConditionRule) -> int:
        with self._lock:
            if self._table.get(rule.id) is None:
                raise ValidationError(f"rule {rule.id}: unknown rule")
            self._table.put({"id": rule.id, "rule": serialize_rule(rule)})
            return self._table.appended

    def remove(self, rule_id: int) -> tuple[int, ConditionRule]:
        with self._lock:
            record = self._table.get(rule_id)
            if record is None:
                raise ValidationError(f"rule {rule_id}: unknown rule")
            removed = parse_rule(record["rule"])
            self._table.delete(rule_id)
            return self._table.appended, removed


def rules_for_segment(rules, segment_id: int) -> list[ConditionRule]:
    return [rule for rule in rules if rule.segment_id == segment_id]


def load_rules_file(path: str | Path) -> list[ConditionRule]:
    """Read a JSON array of rule documents from disk."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        decoded = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"rules file is not valid JSON: {exc}") from exc
    if not isinstance(decoded, list):
        raise ParseError("rules file must contain a JSON array")
    return [parse_rule(entry) for entry in decoded]


def shift_rule(rule: ConditionRule, **changes) -> ConditionRule:
    """Convenience for tests and tooling: a copy with fields replaced."""
    return replace(rule, **changes)
