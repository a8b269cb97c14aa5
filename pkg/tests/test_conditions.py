import datetime as dt
import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from cityroute.conditions import (
    ConditionRule,
    RuleKind,
    RuleStore,
    Schedule,
    parse_rule,
    resolve_segment_status,
    rule_active_at,
    serialize_rule,
    validate_rule,
)
from cityroute.errors import MixedSegmentsError, ParseError, ValidationError

import oracles

# 2024-06-03 is a Monday.
MONDAY = dt.datetime(2024, 6, 3)


def _weekly_rule(days, start, end, kind=RuleKind.CLOSED, multiplier=None, segment=1, rid=1):
    return ConditionRule(
        id=rid, segment_id=segment, kind=kind,
        schedule=Schedule.weekly(days, start, end), multiplier=multiplier,
    )


def _absolute_rule(start, end=None, kind=RuleKind.CLOSED, multiplier=None, segment=1, rid=1):
    return ConditionRule(
        id=rid, segment_id=segment, kind=kind,
        schedule=Schedule.absolute(start, end), multiplier=multiplier,
    )


def test_weekly_window_contains_weekday_morning():
    rule = _weekly_rule(range(5), 420, 570)  # Mon-Fri 07:00-09:30
    assert rule_active_at(rule, dt.datetime(2024, 6, 4, 8, 15))  # Tuesday
    assert not rule_active_at(rule, dt.datetime(2024, 6, 8, 8, 15))  # Saturday


def test_weekly_window_is_half_open():
    rule = _weekly_rule(range(5), 420, 570)
    assert rule_active_at(rule, dt.datetime(2024, 6, 4, 7, 0))
    assert not rule_active_at(rule, dt.datetime(2024, 6, 4, 9, 30))


def test_weekly_window_wraps_midnight():
    # Friday 23:00 to 02:00 belongs to Friday and covers Saturday 01:30.
    rule = _weekly_rule({4}, 1380, 120)
    assert rule_active_at(rule, dt.datetime(2024, 6, 7, 23, 30))   # Friday night
    assert rule_active_at(rule, dt.datetime(2024, 6, 8, 1, 30))    # Saturday small hours
    assert not rule_active_at(rule, dt.datetime(2024, 6, 8, 2, 0))
    assert not rule_active_at(rule, dt.datetime(2024, 6, 7, 1, 30))  # Friday small hours


def test_weekly_matches_minute_enumeration_oracle():
    rng = random.Random(8101)
    for _ in range(60):
        start = rng.randrange(0, 1440)
        end = rng.randrange(0, 1440)
        if end == start:
            end = (end + 30) % 1440
        days = rng.sample(range(7), rng.randint(1, 7))
        rule = _weekly_rule(days, start, end)
        # Sweep a full week in 17 minute strides plus both window edges.
        for offset in itertools.chain(range(0, 7 * 1440, 17), (start, end)):
            t = MONDAY + dt.timedelta(minutes=offset)
            assert rule_active_at(rule, t) == oracles.weekly_active_by_week_minute(rule.schedule, t), (
                f"disagreement at {t} for days={days} window={start}-{end}"
            )


def test_absolute_window_boundaries():
    rule = _absolute_rule(dt.datetime(2024, 5, 9, 10, 0), dt.datetime(2024, 5, 9, 18, 0))
    assert rule_active_at(rule, dt.datetime(2024, 5, 9, 10, 0))
    assert rule_active_at(rule, dt.datetime(2024, 5, 9, 17, 59, 59))
    assert not rule_active_at(rule, dt.datetime(2024, 5, 9, 18, 0))
    assert not rule_active_at(rule, dt.datetime(2024, 5, 9, 9, 59, 59))


def test_absolute_open_ended():
    rule = _absolute_rule(dt.datetime(2024, 5, 9, 10, 0))
    assert rule_active_at(rule, dt.datetime(2030, 1, 1))
    assert not rule_active_at(rule, dt.datetime(2024, 5, 9, 9, 0))


@settings(max_examples=200)
@given(
    days=st.sets(st.integers(0, 6), min_size=1),
    start=st.integers(0, 1439),
    length=st.integers(1, 1439),
    offset_minutes=st.integers(0, 7 * 1440 * 4),
)
def test_weekly_activation_has_seven_day_period(days, start, length, offset_minutes):
    end = (start + length) % 1440
    rule = _weekly_rule(days, start, end)
    t = dt.datetime(2024, 1, 1) + dt.timedelta(minutes=offset_minutes)
    assert rule_active_at(rule, t) == rule_active_at(rule, t + dt.timedelta(days=7))


def test_resolve_no_rules_is_fully_open():
    status = resolve_segment_status([], MONDAY)
    assert status.forward_open and status.reverse_open
    assert status.cost_multiplier == 1.0


def test_resolve_closure_dominates_congestion():
    t = dt.datetime(2024, 6, 4, 12, 0)
    rules = [
        _absolute_rule(MONDAY, kind=RuleKind.CONGESTION, multiplier=1.5, rid=1),
        _absolute_rule(MONDAY, kind=RuleKind.CLOSED, rid=2),
    ]
    status = resolve_segment_status(rules, t)
    assert not status.forward_open and not status.reverse_open
    assert status.cost_multiplier == 1.5


def test_resolve_one_way_kinds():
    t = dt.datetime(2024, 6, 4, 12, 0)
    fwd = resolve_segment_status([_absolute_rule(MONDAY, kind=RuleKind.ONE_WAY_FORWARD)], t)
    assert fwd.forward_open and not fwd.reverse_open
    rev = resolve_segment_status([_absolute_rule(MONDAY, kind=RuleKind.ONE_WAY_REVERSE)], t)
    assert not rev.forward_open and rev.reverse_open
    both = resolve_segment_status(
        [
            _absolute_rule(MONDAY, kind=RuleKind.ONE_WAY_FORWARD, rid=1),
            _absolute_rule(MONDAY, kind=RuleKind.ONE_WAY_REVERSE, rid=2),
        ],
        t,
    )
    assert not both.forward_open and not both.reverse_open


def test_resolve_congestion_combines_by_max():
    t = dt.datetime(2024, 6, 4, 12, 0)
    rules = [
        _absolute_rule(MONDAY, kind=RuleKind.CONGESTION, multiplier=1.5, rid=1),
        _absolute_rule(MONDAY, kind=RuleKind.CONGESTION, multiplier=2.5, rid=2),
    ]
    assert resolve_segment_status(rules, t).cost_multiplier == 2.5


def test_resolve_ignores_inactive_rules():
    t = dt.datetime(2024, 6, 8, 12, 0)  # Saturday
    rules = [_weekly_rule(range(5), 0, 1440, kind=RuleKind.CLOSED)]
    status = resolve_segment_status(rules, t)
    assert status.forward_open and status.reverse_open


def test_resolve_rejects_mixed_segments():
    rules = [
        _absolute_rule(MONDAY, segment=1, rid=1),
        _absolute_rule(MONDAY, segment=2, rid=2),
    ]
    with pytest.raises(MixedSegmentsError):
        resolve_segment_status(rules, MONDAY)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_resolve_is_order_independent(data):
    t = dt.datetime(2024, 6, 4, 9, 0)
    rng = random.Random(data.draw(st.integers(0, 2**30)))
    kinds = list(RuleKind)
    rules = []
    for rid in range(1, rng.randint(2, 6) + 1):
        kind = rng.choice(kinds)
        rules.append(_absolute_rule(
            MONDAY, kind=kind,
            multiplier=rng.choice((1.5, 2.0, 4.0)) if kind is RuleKind.CONGESTION else None,
            rid=rid,
        ))
    permuted = data.draw(st.permutations(rules))
    assert resolve_segment_status(rules, t) == resolve_segment_status(permuted, t)


def test_closing_rules_only_restricts():
    """Adding one more rule never opens a direction or lowers the multiplier."""
    rng = random.Random(8102)
    t = dt.datetime(2024, 6, 4, 9, 0)
    for _ in range(80):
        rules = []
        for rid in range(1, rng.randint(1, 5) + 1):
            kind = rng.choice(list(RuleKind))
            active_start = MONDAY if rng.random() < 0.7 else t + dt.timedelta(hours=1)
            rules.append(_absolute_rule(
                active_start, kind=kind,
                multiplier=2.0 if kind is RuleKind.CONGESTION else None, rid=rid,
            ))
        before = resolve_segment_status(rules[:-1], t)
        after = resolve_segment_status(rules, t)
        assert after.forward_open <= before.forward_open
        assert after.reverse_open <= before.reverse_open
        assert after.cost_multiplier >= before.cost_multiplier


def test_validate_accepts_good_rules(square):
    validate_rule(_weekly_rule({0}, 60, 120), square)
    validate_rule(
        _absolute_rule(MONDAY, kind=RuleKind.CONGESTION, multiplier=2.0), square
    )


def test_validate_rejects_unknown_segment(square):
    with pytest.raises(ValidationError, match="unknown segment 999"):
        validate_rule(_weekly_rule({0}, 60, 120, segment=999), square)


def test_validate_congestion_needs_multiplier(square):
    with pytest.raises(ValidationError, match="requires a multiplier"):
        validate_rule(_weekly_rule({0}, 60, 120, kind=RuleKind.CONGESTION), square)


def test_validate_multiplier_must_exceed_one(square):
    with pytest.raises(ValidationError, match="greater than 1"):
        validate_rule(
            _weekly_rule({0}, 60, 120, kind=RuleKind.CONGESTION, multiplier=1.0), square
        )


def test_validate_multiplier_only_on_congestion(square):
    with pytest.raises(ValidationError, match="only valid on congestion"):
        validate_rule(_weekly_rule({0}, 60, 120, multiplier=2.0), square)


def test_validate_weekly_needs_weekdays(square):
    with pytest.raises(ValidationError, match="at least one weekday"):
        validate_rule(_weekly_rule((), 60, 120), square)


def test_validate_weekly_rejects_equal_minutes(square):
    with pytest.raises(ValidationError, match="start_minute equals end_minute"):
        validate_rule(_weekly_rule({0}, 60, 60), square)


def test_validate_absolute_ordering(square):
    with pytest.raises(ValidationError, match="end_at must fall after"):
        validate_rule(_absolute_rule(MONDAY, MONDAY - dt.timedelta(hours=1)), square)


def test_rule_document_round_trip():
    rules = [
        _weekly_rule({0, 4}, 1380, 120, rid=3, segment=2),
        _absolute_rule(MONDAY, MONDAY + dt.timedelta(days=2),
                       kind=RuleKind.CONGESTION, multiplier=2.5, rid=4),
    ]
    for rule in rules:
        assert parse_rule(serialize_rule(rule)) == rule


def test_parse_rule_rejects_unknown_key():
    doc = serialize_rule(_weekly_rule({0}, 60, 120))
    doc["severity"] = "high"
    with pytest.raises(ParseError, match="unknown key 'severity'"):
        parse_rule(doc)


def test_parse_rule_rejects_bad_weekday_name():
    doc = serialize_rule(_weekly_rule({0}, 60, 120))
    doc["schedule"]["weekdays"] = ["Monday"]
    with pytest.raises(ParseError, match="unknown weekday 'Monday'"):
        parse_rule(doc)


def test_parse_rule_rejects_unknown_kind():
    doc = serialize_rule(_weekly_rule({0}, 60, 120))
    doc["kind"] = "FLOODED"
    with pytest.raises(ParseError, match="unknown rule kind"):
        parse_rule(doc)


def test_rule_store_generation_and_persistence(tmp_path):
    path = tmp_path / "rules.jsonl"
    store = RuleStore(path)
    assert store.generation == 0
    g1 = store.add(_weekly_rule({0}, 60, 120, rid=1))
    g2 = store.add(_absolute_rule(MONDAY, rid=2))
    assert (g1, g2) == (1, 2)
    g3 = store.replace(_weekly_rule({1}, 60, 180, rid=1))
    g4, removed = store.remove(2)
    assert (g3, g4) == (3, 4)
    assert removed.id == 2

    reloaded = RuleStore(path)
    assert reloaded.generation == 4
    assert [r.id for r in reloaded.list_rules()] == [1]
    assert reloaded.get(1).schedule.weekdays == frozenset({1})


def test_rule_store_rejects_duplicate_and_unknown_ids():
    store = RuleStore()
    store.add(_weekly_rule({0}, 60, 120, rid=1))
    with pytest.raises(ValidationError, match="already in use"):
        store.add(_weekly_rule({1}, 60, 120, rid=1))
    with pytest.raises(ValidationError, match="unknown rule"):
        store.remove(9)
    with pytest.raises(ValidationError, match="unknown rule"):
        store.replace(_weekly_rule({1}, 60, 120, rid=9))
