import datetime as dt
import math
import random

import pytest

from cityroute.conditions import ConditionRule, RuleKind, Schedule
from cityroute.errors import (
    EmptyNetworkError,
    InvalidPathError,
    NoRouteError,
    UnknownVertexError,
)
from cityroute.network import parse_network, polyline_length
from cityroute.routing import (
    Arc,
    ArcDirection,
    Instruction,
    Mode,
    RoutePath,
    build_snapshot,
    generate_directions,
    plan_route,
    shortest_path,
)

import oracles

NOON = dt.datetime(2024, 6, 4, 12, 0)       # a Tuesday
MORNING = dt.datetime(2024, 6, 4, 8, 0)

ALWAYS = Schedule.absolute(dt.datetime(2000, 1, 1))


def _one_way_forward(segment, rid=1):
    return ConditionRule(id=rid, segment_id=segment, kind=RuleKind.ONE_WAY_FORWARD, schedule=ALWAYS)


def _closed(segment, rid=1, schedule=ALWAYS):
    return ConditionRule(id=rid, segment_id=segment, kind=RuleKind.CLOSED, schedule=schedule)


def test_snapshot_emits_two_arcs_per_open_segment(square):
    snapshot = build_snapshot(square, [], NOON)
    assert len(snapshot.arcs()) == 10
    assert snapshot.vertex_ids == frozenset({1, 2, 3, 4})


def test_snapshot_orders_arcs_by_segment_id(square):
    snapshot = build_snapshot(square, [], NOON)
    for arcs in snapshot.adjacency.values():
        ids = [arc.segment_id for arc in arcs]
        assert ids == sorted(ids)


def test_snapshot_strict_drops_closed_direction(square):
    snapshot = build_snapshot(square, [_one_way_forward(3)], NOON)
    assert len(snapshot.arcs()) == 9
    from_lake = [a.segment_id for a in snapshot.adjacency[3]]
    assert 3 not in from_lake  # reverse of the diagonal is gone
    from_harbour = [a.segment_id for a in snapshot.adjacency[1]]
    assert 3 in from_harbour


def test_snapshot_faithful_keeps_closed_direction_at_penalty(square):
    snapshot = build_snapshot(square, [_one_way_forward(3)], NOON, mode=Mode.FAITHFUL)
    assert len(snapshot.arcs()) == 10
    reverse_diagonal = [a for a in snapshot.adjacency[3] if a.segment_id == 3][0]
    assert reverse_diagonal.cost == pytest.approx(square.segments[3].base_cost * 1e6)
    forward_diagonal = [a for a in snapshot.adjacency[1] if a.segment_id == 3][0]
    assert forward_diagonal.cost == pytest.approx(square.segments[3].base_cost)


def test_snapshot_applies_congestion_only_inside_window(square):
    rush = ConditionRule(
        id=1, segment_id=1, kind=RuleKind.CONGESTION, multiplier=2.0,
        schedule=Schedule.weekly(range(5), 420, 570),
    )
    morning = build_snapshot(square, [rush], MORNING)
    noon = build_snapshot(square, [rush], NOON)
    morning_costs = {a.cost for a in morning.arcs() if a.segment_id == 1}
    noon_costs = {a.cost for a in noon.arcs() if a.segment_id == 1}
    assert morning_costs == {200.0}
    assert noon_costs == {100.0}


def test_shortest_path_prefers_diagonal(square):
    path = shortest_path(build_snapshot(square, [], NOON), 1, 3)
    assert path.segment_ids() == (3,)
    assert path.total_cost == pytest.approx(141.4214, abs=1e-3)
    assert path.vertices == (1, 3)


def test_shortest_path_detours_around_closure(square):
    path = shortest_path(build_snapshot(square, [_closed(3)], NOON), 1, 3)
    assert path.total_cost == pytest.approx(200.0)
    # Two perimeter routes tie at 200; the [1, 2] sequence beats [5, 4].
    assert path.segment_ids() == (1, 2)
    assert path.vertices == (1, 2, 3)


def test_shortest_path_same_vertex_is_empty(square):
    path = shortest_path(build_snapshot(square, [], NOON), 2, 2)
    assert path.vertices == (2,)
    assert path.arcs == ()
    assert path.total_cost == 0.0


def test_shortest_path_unknown_vertex(square):
    snapshot = build_snapshot(square, [], NOON)
    with pytest.raises(UnknownVertexError):
        shortest_path(snapshot, 1, 77)


def test_shortest_path_unreachable_vertex(square_document):
    square_document["vertices"].append({"id": 9, "x": 500.0, "y": 500.0})
    network = parse_network(square_document)
    snapshot = build_snapshot(network, [], NOON)
    with pytest.raises(NoRouteError):
        shortest_path(snapshot, 1, 9)


def test_one_way_asymmetry(square):
    rules = [_one_way_forward(3)]
    out = shortest_path(build_snapshot(square, rules, NOON), 1, 3)
    back = shortest_path(build_snapshot(square, rules, NOON), 3, 1)
    assert out.segment_ids() == (3,)
    assert back.segment_ids() == (2, 1)
    assert back.total_cost == pytest.approx(200.0)


def test_total_cost_is_sum_of_arc_costs():
    rng = random.Random(9001)
    for _ in range(60):
        network = oracles.random_network(rng)
        snapshot = build_snapshot(network, [], NOON)
        source, target = rng.sample(sorted(network.vertices), 2)
        try:
            path = shortest_path(snapshot, source, target)
        except NoRouteError:
            continue
        total = sum(arc.cost for arc in path.arcs)
        assert abs(path.total_cost - total) <= 1e-9 * max(1.0, abs(total))


def test_shortest_path_matches_enumeration_oracle():
    rng = random.Random(9002)
    for _ in range(120):
        network = oracles.random_network(rng, max_vertices=9, max_segments=16)
        rules = oracles.random_rules(rng, network, NOON)
        snapshot = build_snapshot(network, rules, NOON)
        source, target = rng.sample(sorted(network.vertices), 2)
        expected = oracles.best_route(snapshot.adjacency, source, target)
        if expected is None:
            with pytest.raises(NoRouteError):
                shortest_path(snapshot, source, target)
            continue
        path = shortest_path(snapshot, source, target)
        cost, ids = expected
        assert abs(path.total_cost - cost) <= 1e-9 * max(1.0, cost)
        assert path.segment_ids() == ids


def test_path_prefixes_are_shortest_paths():
    rng = random.Random(9003)
    checked = 0
    while checked < 40:
        network = oracles.random_network(rng, max_vertices=8, max_segments=14)
        snapshot = build_snapshot(network, [], NOON)
        source, target = rng.sample(sorted(network.vertices), 2)
        try:
            path = shortest_path(snapshot, source, target)
        except NoRouteError:
            continue
        if len(path.arcs) < 2:
            continue
        checked += 1
        running = 0.0
        for i, arc in enumerate(path.arcs):
            running += arc.cost
            prefix = shortest_path(snapshot, source, arc.head)
            assert prefix.segment_ids() == path.segment_ids()[: i + 1]
            assert abs(prefix.total_cost - running) <= 1e-9 * max(1.0, running)


def test_faithful_mode_with_large_penalty_matches_strict():
    rng = random.Random(9004)
    for _ in range(80):
        network = oracles.random_network(rng, max_vertices=9, max_segments=16)
        rules = oracles.random_rules(rng, network, NOON)
        total = sum(s.base_cost for s in network.segments.values())
        minimum = min(s.base_cost for s in network.segments.values())
        penalty = 4.0 * total / minimum + 10.0
        strict = build_snapshot(network, rules, NOON, mode=Mode.STRICT)
        faithful = build_snapshot(network, rules, NOON, mode=Mode.FAITHFUL, penalty_factor=penalty)
        source, target = rng.sample(sorted(network.vertices), 2)
        try:
            strict_path = shortest_path(strict, source, target)
        except NoRouteError:
            continue
        faithful_path = shortest_path(faithful, source, target)
        assert faithful_path.segment_ids() == strict_path.segment_ids()


def test_directions_square_turn_left(square):
    path = shortest_path(build_snapshot(square, [_closed(3)], NOON), 1, 3)
    steps = generate_directions(square, path)
    assert [s.instruction for s in steps] == [
        Instruction.DEPART, Instruction.CONTINUE, Instruction.TURN_LEFT, Instruction.ARRIVE,
    ]
    assert [s.road_name for s in steps] == [
        "Harbour Road", "Harbour Road", "Market Street", "Market Street",
    ]
    assert [s.distance_m for s in steps] == [0.0, 100.0, 100.0, 0.0]


def test_directions_square_turn_right(square):
    # Reverse of the detour: east side southbound, then west along the bottom.
    path = shortest_path(build_snapshot(square, [_closed(3)], NOON), 3, 1)
    steps = generate_directions(square, path)
    assert [s.instruction for s in steps] == [
        Instruction.DEPART, Instruction.CONTINUE, Instruction.TURN_RIGHT, Instruction.ARRIVE,
    ]


def test_directions_merge_collinear_same_road():
    doc = {
        "crs_label": "x",
        "vertices": [
            {"id": 1, "x": 0.0, "y": 0.0},
            {"id": 2, "x": 100.0, "y": 0.0},
            {"id": 3, "x": 200.0, "y": 0.0},
        ],
        "segments": [
            {"id": 1, "name": "Long Road", "from": 1, "to": 2,
             "geometry": [[0.0, 0.0], [100.0, 0.0]]},
            {"id": 2, "name": "Long Road", "from": 2, "to": 3,
             "geometry": [[100.0, 0.0], [200.0, 0.0]]},
        ],
    }
    network = parse_network(doc)
    path = shortest_path(build_snapshot(network, [], NOON), 1, 3)
    steps = generate_directions(network, path)
    assert [s.instruction for s in steps] == [
        Instruction.DEPART, Instruction.CONTINUE, Instruction.ARRIVE,
    ]
    assert steps[1].distance_m == pytest.approx(200.0)


def test_directions_u_turn():
    doc = {
        "crs_label": "x",
        "vertices": [
            {"id": 1, "x": 0.0, "y": 0.0},
            {"id": 2, "x": 100.0, "y": 0.0},
        ],
        "segments": [
            {"id": 1, "name": "Dead End", "from": 1, "to": 2,
             "geometry": [[0.0, 0.0], [100.0, 0.0]]},
        ],
    }
    network = parse_network(doc)
    out_and_back = RoutePath(
        vertices=(1, 2, 1),
        arcs=(
            Arc(1, 1, 2, 100.0, ArcDirection.FORWARD),
            Arc(1, 2, 1, 100.0, ArcDirection.REVERSE),
        ),
        total_cost=200.0,
        instant=NOON,
    )
    steps = generate_directions(network, out_and_back)
    assert [s.instruction for s in steps] == [
        Instruction.DEPART, Instruction.CONTINUE, Instruction.U_TURN, Instruction.ARRIVE,
    ]


def test_directions_empty_path(square):
    path = RoutePath(vertices=(1,), arcs=(), total_cost=0.0, instant=NOON)
    steps = generate_directions(square, path)
    assert [s.instruction for s in steps] == [Instruction.DEPART, Instruction.ARRIVE]
    assert all(s.distance_m == 0.0 for s in steps)


def test_directions_reject_broken_chain(square):
    broken = RoutePath(
        vertices=(1, 2, 4),
        arcs=(
            Arc(1, 1, 2, 100.0, ArcDirection.FORWARD),
            Arc(4, 3, 4, 100.0, ArcDirection.FORWARD),
        ),
        total_cost=200.0,
        instant=NOON,
    )
    with pytest.raises(InvalidPathError):
        generate_directions(square, broken)


def test_step_distances_sum_to_path_length():
    rng = random.Random(9005)
    for _ in range(50):
        network = oracles.random_network(rng)
        snapshot = build_snapshot(network, [], NOON)
        source, target = rng.sample(sorted(network.vertices), 2)
        try:
            path = shortest_path(snapshot, source, target)
        except NoRouteError:
            continue
        steps = generate_directions(network, path)
        expected = sum(
            polyline_length(network.segments[arc.segment_id].geometry) for arc in path.arcs
        )
        assert abs(sum(s.distance_m for s in steps) - expected) < 1e-6


def test_plan_route_snaps_points(square):
    result = plan_route(square, [], (1.0, 2.0), (99.0, 101.0), NOON)
    assert result.vertices == (1, 3)
    assert result.segments == (3,)
    assert result.cost == pytest.approx(141.4214, abs=1e-3)
    assert result.snap_origin_m == pytest.approx(math.hypot(1.0, 2.0))
    assert result.snap_destination_m == pytest.approx(math.hypot(1.0, 1.0))


def test_plan_route_accepts_vertex_ids(square):
    result = plan_route(square, [], 1, {"vertex": 3}, NOON)
    assert result.segments == (3,)
    assert result.snap_origin_m == 0.0


def test_plan_route_same_point_both_ends(square):
    result = plan_route(square, [], (2.0, 1.0), (0.5, 0.5), NOON)
    assert result.cost == 0.0
    assert result.vertices == (1,)
    assert [s.instruction for s in result.steps] == [Instruction.DEPART, Instruction.ARRIVE]


def test_plan_route_empty_network():
    network = parse_network({"crs_label": "x", "vertices": [], "segments": []})
    with pytest.raises(EmptyNetworkError):
        plan_route(network, [], (0.0, 0.0), (1.0, 1.0), NOON)


def test_plan_route_isolated_destination(square_document):
    square_document["vertices"].append({"id": 9, "x": 500.0, "y": 500.0})
    network = parse_network(square_document)
    with pytest.raises(NoRouteError):
        plan_route(network, [], (0.0, 0.0), (500.0, 500.0), NOON)


def test_route_result_serialization_is_deterministic(square):
    first = plan_route(square, [], (1.0, 2.0), (99.0, 101.0), NOON)
    second = plan_route(square, [], (1.0, 2.0), (99.0, 101.0), NOON)
    assert first.canonical_json() == second.canonical_json()
    payload = first.to_payload()
    assert payload["instant"] == NOON.isoformat()
    assert payload["snap"]["origin_m"] == pytest.approx(math.hypot(1.0, 2.0))
    assert [s["instruction"] for s in payload["steps"]][0] == "DEPART"
