"""Time-aware shortest-path routing over the road network.

A query instant is resolved against the condition rules to produce a directed
arc snapshot, and Dijkstra's algorithm runs on that snapshot. Two snapshot
modes exist for one-way and closed directions: STRICT drops the forbidden
arcs entirely, FAITHFUL keeps them but multiplies their cost by a large
penalty factor, which prices them out of any optimum without removing them.
"""

from __future__ import annotations

import datetime as dt
import heapq
import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum

from .conditions import resolve_segment_status, rules_for_segment
from .errors import (
    EmptyNetworkError,
    InvalidPathError,
    NoRouteError,
    ParseError,
    UnknownVertexError,
)
from .network import RoadNetwork, nearest_distance, polyline_length

DEFAULT_PENALTY_FACTOR = 1e6


class Mode(str, Enum):
    STRICT = "STRICT"
    FAITHFUL = "FAITHFUL"


class ArcDirection(str, Enum):
    FORWARD = "FORWARD"
    REVERSE = "REVERSE"


class Instruction(str, Enum):
    DEPART = "DEPART"
    ARRIVE = "ARRIVE"
    CONTINUE = "CONTINUE"
    TURN_LEFT = "TURN_LEFT"
    TURN_RIGHT = "TURN_RIGHT"
    U_TURN = "U_TURN"


@dataclass(frozen=True)
class Arc:
    """One directed traversal of a segment at a fixed instant."""

    segment_id: int
    tail: int
    head: int
    cost: float
    direction: ArcDirection


@dataclass(frozen=True)
class GraphSnapshot:
    """The directed graph in force at one instant."""

    instant: dt.datetime
    vertex_ids: frozenset[int]
    adjacency: dict[int, tuple[Arc, ...]]

    def arcs(self) -> list[Arc]:
        out = []
        for arcs in self.adjacency.values():
            out.extend(arcs)
        return out


@dataclass(frozen=True)
class RoutePath:
    """A concrete path: the vertices visited and the arcs between them."""

    vertices: tuple[int, ...]
    arcs: tuple[Arc, ...]
    total_cost: float
    instant: dt.datetime

    def segment_ids(self) -> tuple[int, ...]:
        return tuple(arc.segment_id for arc in self.arcs)


@dataclass(frozen=True)
class DirectionStep:
    instruction: Instruction
    road_name: str
    distance_m: float


@dataclass(frozen=True)
class RouteResult:
    """Everything a caller needs from one routing query."""

    instant: dt.datetime
    cost: float
    vertices: tuple[int, ...]
    segments: tuple[int, ...]
    steps: tuple[DirectionStep, ...]
    snap_origin_m: float
    snap_destination_m: float
    no_route: bool = False

    @classmethod
    def unreachable(cls, instant: dt.datetime) -> "RouteResult":
        return cls(
            instant=instant, cost=math.inf, vertices=(), segments=(), steps=(),
            snap_origin_m=0.0, snap_destination_m=0.0, no_route=True,
        )

    def to_payload(self) -> dict:
        if self.no_route:
            return {"instant": self.instant.isoformat(), "no_route": True,
                    "cost": None, "vertices": [], "segments": []}
        return {
            "instant": self.instant.isoformat(),
            "cost": self.cost,
            "vertices": list(self.vertices),
            "segments": list(self.segments),
            "steps": [
                {"instruction": s.instruction.value, "road": s.road_name, "distance_m": s.distance_m}
                for s in self.steps
            ],
            "snap": {"origin_m": self.snap_origin_m, "destination_m": self.snap_destination_m},
        }

    def canonical_json(self) -> bytes:
        """Stable byte serialization: same inputs, same bytes."""
        return json.dumps(self.to_payload(), sort_keys=True, separators=(",", ":")).encode("utf-8")


def build_snapshot(
    network: RoadNetwork,
    rules,
    t: dt.datetime,
    mode: Mode = Mode.STRICT,
    penalty_factor: float = DEFAULT_PENALTY_FACTOR,
) -> GraphSnapshot:
    """Resolve every segment's status at ``t`` and emit directed arcs.

    STRICT mode omits arcs whose direction is closed. FAITHFUL mode always
    emits both directions and gives a closed direction the cost
    ``base_cost * penalty_factor``, large enough that any open route beats it.
    """
    if penalty_factor <= 1.0:
        raise ParseError("penalty_factor must be greater than 1")
    adjacency: dict[int, list[Arc]] = {vid: [] for vid in network.vertices}
    for segment in network.segments.values():
        status = resolve_segment_status(rules_for_segment(rules, segment.id), t)
        open_cost = segment.base_cost * status.cost_multiplier
        closed_cost = segment.base_cost * penalty_factor
        for direction, tail, head, is_open in (
            (ArcDirection.FORWARD, segment.from_vertex, segment.to_vertex, status.forward_open),
            (ArcDirection.REVERSE, segment.to_vertex, segment.from_vertex, status.reverse_open),
        ):
            if is_open:
                cost = open_cost
            elif mode is Mode.FAITHFUL:
                cost = closed_cost
            else:
                continue
            adjacency[tail].append(
                Arc(segment_id=segment.id, tail=tail, head=head, cost=cost, direction=direction)
            )
    ordered = {
        vid: tuple(sorted(arcs, key=lambda a: a.segment_id))
        for vid, arcs in adjacency.items()
    }
    return GraphSnapshot(instant=t, vertex_ids=frozenset(network.vertices), adjacency=ordered)


def shortest_path(snapshot: GraphSnapshot, source: int, target: int) -> RoutePath:
    """Dijkstra over the snapshot with a deterministic tie-break.

    Among equal-cost optima the path whose segment-id sequence is
    lexicographically smallest wins, so repeated queries always return the
    same route. Labels are (cost, id-sequence) pairs and Python's tuple
    ordering compares them exactly as required.
    """
    if source not in snapshot.vertex_ids:
        raise UnknownVertexError(f"unknown vertex {source}")
    if target not in snapshot.vertex_ids:
        raise UnknownVertexError(f"unknown vertex {target}")
    if source == target:
        return RoutePath(vertices=(source,), arcs=(), total_cost=0.0, instant=snapshot.instant)

    counter = itertools.count()
    best: dict[int, tuple[float, tuple[int, ...]]] = {source: (0.0, ())}
    heap: list = [(0.0, (), next(counter), source, ())]
    settled: set[int] = set()

    while heap:
        cost, id_seq, _, node, arcs = heapq.heappop(heap)
        if node in settled:
            continue
        if best.get(node) != (cost, id_seq):
            continue
        settled.add(node)
        if node == target:
            vertices = (source,) + tuple(arc.head for arc in arcs)
            return RoutePath(vertices=vertices, arcs=arcs, total_cost=cost, instant=snapshot.instant)
        for arc in snapshot.adjacency.get(node, ()):
            if arc.head in settled:
                continue
            candidate = (cost + arc.cost, id_seq + (arc.segment_id,))
            incumbent = best.get(arc.head)
            if incumbent is None or candidate < incumbent:
                best[arc.head] = candidate
                heapq.heappush(
                    heap, (candidate[0], candidate[1], next(counter), arc.head, arcs + (arc,))
                )
    raise NoRouteError(f"no route from vertex {source} to vertex {target}")


# Turn classification thresholds, in degrees of signed bearing change.
_CONTINUE_LIMIT = 30.0
_UTURN_LIMIT = 150.0


def _heading_deg(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Compass bearing of the step a -> b: 0 is north, 90 is east."""
    return math.degrees(math.atan2(b[0] - a[0], b[1] - a[1])) % 360.0


def _signed_delta(heading_in: float, heading_out: float) -> float:
    delta = (heading_out - heading_in + 180.0) % 360.0 - 180.0
    return 180.0 if delta == -180.0 else delta


def _classify_turn(delta: float) -> Instruction:
    magnitude = abs(delta)
    if magnitude < _CONTINUE_LIMIT:
        return Instruction.CONTINUE
    if magnitude < _UTURN_LIMIT:
        return Instruction.TURN_RIGHT if delta > 0 else Instruction.TURN_LEFT
    return Instruction.U_TURN


def _traversal_points(network: RoadNetwork, arc: Arc) -> tuple[tuple[float, float], ...]:
    segment = network.segments.get(arc.segment_id)
    if segment is None:
        raise InvalidPathError(f"path references unknown segment {arc.segment_id}")
    points = segment.geometry
    return points if arc.direction is ArcDirection.FORWARD else tuple(reversed(points))


def _first_step(points) -> tuple[tuple[float, float], tuple[float, float]]:
    for a, b in zip(points, points[1:]):
        if a != b:
            return a, b
    return points[0], points[-1]


def _last_step(points) -> tuple[tuple[float, float], tuple[float, float]]:
    for i in range(len(points) - 1, 0, -1):
        if points[i - 1] != points[i]:
            return points[i - 1], points[i]
    return points[0], points[-1]


def generate_directions(network: RoadNetwork, path: RoutePath) -> list[DirectionStep]:
    """Turn-by-turn steps for a path.

    The first and last steps are always DEPART and ARRIVE with zero distance.
    Between them there is one movement step per arc, classified by the signed
    bearing change at the joining vertex; consecutive CONTINUE steps along the
    same road name merge into one.
    """
    if not path.arcs:
        return [
            DirectionStep(Instruction.DEPART, "", 0.0),
            DirectionStep(Instruction.ARRIVE, "", 0.0),
        ]

    expected_tail = path.vertices[0]
    for arc in path.arcs:
        if arc.tail != expected_tail:
            raise InvalidPathError(
                f"arc over segment {arc.segment_id} starts at vertex {arc.tail}, expected {expected_tail}"
            )
        expected_tail = arc.head

    moves: list[DirectionStep] = []
    previous_points = None
    for arc in path.arcs:
        points = _traversal_points(network, arc)
        road = network.segments[arc.segment_id].name
        distance = polyline_length(points)
        if previous_points is None:
            instruction = Instruction.CONTINUE
        else:
            a, b = _last_step(previous_points)
            c, d = _first_step(points)
            delta = _signed_delta(_heading_deg(a, b), _heading_deg(c, d))
            instruction = _classify_turn(delta)
        if (
            moves
            and instruction is Instruction.CONTINUE
            and moves[-1].instruction is Instruction.CONTINUE
            and moves[-1].road_name == road
        ):
            moves[-1] = DirectionStep(Instruction.CONTINUE, road, moves[-1].distance_m + distance)
        else:
            moves.append(DirectionStep(instruction, road, distance))
        previous_points = points

    first_road = network.segments[path.arcs[0].segment_id].name
    last_road = network.segments[path.arcs[-1].segment_id].name
    return (
        [DirectionStep(Instruction.DEPART, first_road, 0.0)]
        + moves
        + [DirectionStep(Instruction.ARRIVE, last_road, 0.0)]
    )


def route_path_from_sequences(
    network: RoadNetwork,
    vertices,
    segments,
    instant: dt.datetime,
) -> RoutePath:
    """Rebuild a RoutePath from stored vertex and segment id sequences.

    Arc costs are taken from base costs; callers that only need the shape of
    the path (rendering, replay) do not care about the costs at the original
    instant.
    """
    vertices = tuple(vertices)
    segments = tuple(segments)
    if len(vertices) != len(segments) + 1:
        raise InvalidPathError("vertex sequence must be one longer than segment sequence")
    arcs = []
    total = 0.0
    for tail, head, segment_id in zip(vertices, vertices[1:], segments):
        segment = network.segments.get(segment_id)
        if segment is None:
            raise InvalidPathError(f"path references unknown segment {segment_id}")
        if (segment.from_vertex, segment.to_vertex) == (tail, head):
            direction = ArcDirection.FORWARD
        elif (segment.to_vertex, segment.from_vertex) == (tail, head):
            direction = ArcDirection.REVERSE
        else:
            raise InvalidPathError(
                f"segment {segment_id} does not join vertex {tail} to vertex {head}"
            )
        arcs.append(Arc(segment_id=segment_id, tail=tail, head=head,
                        cost=segment.base_cost, direction=direction))
        total += segment.base_cost
    return RoutePath(vertices=vertices, arcs=tuple(arcs), total_cost=total, instant=instant)


def parse_endpoint(value) -> int | tuple[float, float]:
    """Normalize the accepted endpoint spellings.

    Accepts a vertex id, an (x, y) pair, or the wire forms
    ``{"vertex": id}`` and ``{"x": ..., "y": ...}``.
    """
    if isinstance(value, bool):
        raise ParseError(f"bad endpoint {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return (float(value[0]), float(value[1]))
    if isinstance(value, dict):
        if set(value) == {"vertex"}:
            vid = value["vertex"]
            if isinstance(vid, bool) or not isinstance(vid, int):
                raise ParseError(f"bad endpoint vertex id {vid!r}")
            return vid
        if set(value) == {"x", "y"}:
            for key in ("x", "y"):
                if isinstance(value[key], bool) or not isinstance(value[key], (int, float)):
                    raise ParseError(f"bad endpoint coordinate {value[key]!r}")
            return (float(value["x"]), float(value["y"]))
        raise ParseError(f"endpoint object must be {{'vertex': id}} or {{'x': ..., 'y': ...}}, got {sorted(value)}")
    raise ParseError(f"bad endpoint {value!r}")


def _resolve_endpoint(network: RoadNetwork, value) -> tuple[int, float]:
    endpoint = parse_endpoint(value)
    if isinstance(endpoint, int):
        if endpoint not in network.vertices:
            raise UnknownVertexError(f"unknown vertex {endpoint}")
        return endpoint, 0.0
    vertex, snap = nearest_distance(network, endpoint)
    return vertex.id, snap


def plan_route(
    network: RoadNetwork,
    rules,
    origin,
    destination,
    t: dt.datetime,
    mode: Mode = Mode.STRICT,
    penalty_factor: float = DEFAULT_PENALTY_FACTOR,
) -> RouteResult:
    """One full routing query: snap endpoints, snapshot conditions at ``t``,
    find the best path, and describe it.

    Args:
        origin, destination: vertex id, (x, y) point, or wire-form dict.
        t: the local civil instant the conditions are resolved at.

    Raises:
        EmptyNetworkError: the network has no vertices.
        UnknownVertexError: an endpoint vertex id is not in the network.
        NoRouteError: the endpoints are not connected at ``t``.
    """
    if network.is_empty():
        raise EmptyNetworkError("cannot route on an empty network")
    origin_id, origin_snap = _resolve_endpoint(network, origin)
    destination_id, destination_snap = _resolve_endpoint(network, destination)
    snapshot = build_snapshot(network, rules, t, mode=mode, penalty_factor=penalty_factor)
    path = shortest_path(snapshot, origin_id, destination_id)
    steps = generate_directions(network, path)
    return RouteResult(
        instant=t,
        cost=path.total_cost,
        vertices=path.vertices,
        segments=path.segment_ids(),
        steps=tuple(steps),
        snap_origin_m=origin_snap,
        snap_destination_m=destination_snap,
    )
