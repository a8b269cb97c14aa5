"""Road network model: vertices, segments, and the operations that load and query them.

Coordinates are planar meters in a local projected frame; the network document
records which frame via ``crs_label``. Documents are parsed strictly so that a
typo in a key fails loudly instead of being silently dropped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import EmptyNetworkError, ParseError, ValidationError

# Tolerance for "geometry endpoint coincides with its vertex", in meters.
ENDPOINT_TOLERANCE = 1e-6

_VERTEX_KEYS = {"id", "x", "y", "name"}
_SEGMENT_KEYS = {"id", "name", "from", "to", "geometry", "base_cost"}
_DOCUMENT_KEYS = {"crs_label", "vertices", "segments"}


@dataclass(frozen=True)
class Vertex:
    """A junction or endpoint in the road graph."""

    id: int
    x: float
    y: float
    name: str | None = None


@dataclass(frozen=True)
class RoadSegment:
    """An undirected stretch of road between two vertices.

    ``geometry`` is the polyline from the ``from`` vertex to the ``to`` vertex;
    ``base_cost`` is the undisturbed traversal cost (meters by default) and is
    filled from the polyline length when the source document omits it.
    """

    id: int
    name: str
    from_vertex: int
    to_vertex: int
    geometry: tuple[tuple[float, float], ...]
    base_cost: float

    def length(self) -> float:
        return polyline_length(self.geometry)


@dataclass(frozen=True)
class RoadNetwork:
    """An immutable snapshot of the modeled road network."""

    crs_label: str
    vertices: dict[int, Vertex]
    segments: dict[int, RoadSegment]

    def is_empty(self) -> bool:
        return not self.vertices


def polyline_length(points) -> float:
    """Sum of straight-line step lengths along a polyline."""
    total = 0.0
    for (ax, ay), (bx, by) in zip(points, points[1:]):
        total += math.hypot(bx - ax, by - ay)
    return total


def _require_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _require_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{where}: expected an integer, got {value!r}")
    return value


def _reject_unknown_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"{where}: unknown key {sorted(unknown)[0]!r}")


def _parse_vertex(obj) -> Vertex:
    if not isinstance(obj, dict):
        raise ParseError(f"vertex entry is not an object: {obj!r}")
    where = f"vertex {obj.get('id', '?')}"
    _reject_unknown_keys(obj, _VERTEX_KEYS, where)
    for key in ("id", "x", "y"):
        if key not in obj:
            raise ParseError(f"{where}: missing key {key!r}")
    vid = _require_int(obj["id"], where)
    x = _require_number(obj["x"], where)
    y = _require_number(obj["y"], where)
    name = obj.get("name")
    if name is not None and not isinstance(name, str):
        raise ParseError(f"{where}: name must be a string")
    if vid <= 0:
        raise ValidationError(f"vertex {vid}: id must be positive")
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValidationError(f"vertex {vid}: coordinates not finite")
    return Vertex(id=vid, x=x, y=y, name=name)


def _parse_geometry(raw, where: str) -> tuple[tuple[float, float], ...]:
    if not isinstance(raw, list) or len(raw) < 2:
        raise ParseError(f"{where}: geometry must list at least two points")
    points = []
    for entry in raw:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ParseError(f"{where}: geometry point must be an [x, y] pair")
        points.append((_require_number(entry[0], where), _require_number(entry[1], where)))
    return tuple(points)


def _parse_segment(obj, vertices: dict[int, Vertex]) -> RoadSegment:
    if not isinstance(obj, dict):
        raise ParseError(f"segment entry is not an object: {obj!r}")
    where = f"segment {obj.get('id', '?')}"
    _reject_unknown_keys(obj, _SEGMENT_KEYS, where)
    for key in ("id", "name", "from", "to", "geometry"):
        if key not in obj:
            raise ParseError(f"{where}: missing key {key!r}")
    sid = _require_int(obj["id"], where)
    if sid <= 0:
        raise ValidationError(f"segment {sid}: id must be positive")
    name = obj["name"]
    if not isinstance(name, str):
        raise ParseError(f"segment {sid}: name must be a string")
    tail = _require_int(obj["from"], f"segment {sid}")
    head = _require_int(obj["to"], f"segment {sid}")
    if tail not in vertices:
        raise ValidationError(f"segment {sid}: unknown vertex {tail}")
    if head not in vertices:
        raise ValidationError(f"segment {sid}: unknown vertex {head}")
    if tail == head:
        raise ValidationError(f"segment {sid}: zero-length segment (from equals to)")
    geometry = _parse_geometry(obj["geometry"], f"segment {sid}")
    for vid, point in ((tail, geometry[0]), (head, geometry[-1])):
        vertex = vertices[vid]
        if math.hypot(point[0] - vertex.x, point[1] - vertex.y) > ENDPOINT_TOLERANCE:
            raise ValidationError(f"segment {sid}: geometry does not reach vertex {vid}")
    length = polyline_length(geometry)
    if length <= 0.0:
        raise ValidationError(f"segment {sid}: zero-length segment")
    straight = math.hypot(
        vertices[head].x - vertices[tail].x, vertices[head].y - vertices[tail].y
    )
    if "base_cost" in obj:
        base_cost = _require_number(obj["base_cost"], f"segment {sid}")
        if not math.isfinite(base_cost) or base_cost <= 0.0:
            raise ValidationError(f"segment {sid}: base_cost must be positive and finite")
        if base_cost < straight - ENDPOINT_TOLERANCE:
            raise ValidationError(f"segment {sid}: base_cost below straight-line distance")
    else:
        base_cost = length
    return RoadSegment(
        id=sid, name=name, from_vertex=tail, to_vertex=head,
        geometry=geometry, base_cost=base_cost,
    )


def parse_network(document: dict) -> RoadNetwork:
    """Build a validated RoadNetwork from an already decoded JSON document.

    Raises:
        ParseError: the document shape is wrong (missing keys, bad types,
            unknown keys).
        ValidationError: the shape is fine but a constraint fails; the message
            names the first offending vertex or segment id.
    """
    if not isinstance(document, dict):
        raise ParseError("network document must be a JSON object")
    _reject_unknown_keys(document, _DOCUMENT_KEYS, "network document")
    for key in _DOCUMENT_KEYS:
        if key not in document:
            raise ParseError(f"network document: missing key {key!r}")
    if not isinstance(document["crs_label"], str):
        raise ParseError("network document: crs_label must be a string")
    if not isinstance(document["vertices"], list) or not isinstance(document["segments"], list):
        raise ParseError("network document: vertices and segments must be arrays")

    vertices: dict[int, Vertex] = {}
    for raw in document["vertices"]:
        vertex = _parse_vertex(raw)
        if vertex.id in vertices:
            raise ValidationError(f"duplicate vertex id {vertex.id}")
        vertices[vertex.id] = vertex

    segments: dict[int, RoadSegment] = {}
    for raw in document["segments"]:
        segment = _parse_segment(raw, vertices)
        if segment.id in segments:
            raise ValidationError(f"duplicate segment id {segment.id}")
        segments[segment.id] = segment

    return RoadNetwork(crs_label=document["crs_label"], vertices=vertices, segments=segments)


def ingest_network(document: bytes | str) -> RoadNetwork:
    """Parse and validate a network JSON document given as bytes or text."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"network document is not valid UTF-8: {exc}") from exc
    try:
        decoded = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"network document is not valid JSON: {exc}") from exc
    return parse_network(decoded)


def serialize_network(network: RoadNetwork) -> dict:
    """Render a network back to its document form. Inverse of parse_network."""
    vertices = []
    for vertex in network.vertices.values():
        entry: dict = {"id": vertex.id, "x": vertex.x, "y": vertex.y}
        if vertex.name is not None:
            entry["name"] = vertex.name
        vertices.append(entry)
    segments = []
    for segment in network.segments.values():
        segments.append({
            "id": segment.id,
            "name": segment.name,
            "from": segment.from_vertex,
            "to": segment.to_vertex,
            "geometry": [[x, y] for x, y in segment.geometry],
            "base_cost": segment.base_cost,
        })
    return {"crs_label": network.crs_label, "vertices": vertices, "segments": segments}


def network_to_bytes(network: RoadNetwork) -> bytes:
    return json.dumps(serialize_network(network), indent=2).encode("utf-8")


def nearest_vertex(network: RoadNetwork, point: tuple[float, float]) -> Vertex:
    """The vertex closest to ``point``; distance ties go to the lowest id."""
    if network.is_empty():
        raise EmptyNetworkError("network has no vertices")
    px, py = float(point[0]), float(point[1])
    best = None
    best_key = None
    for vertex in network.vertices.values():
        d2 = (vertex.x - px) ** 2 + (vertex.y - py) ** 2
        key = (d2, vertex.id)
        if best_key is None or key < best_key:
            best, best_key = vertex, key
    return best


def nearest_distance(network: RoadNetwork, point: tuple[float, float]) -> tuple[Vertex, float]:
    """Nearest vertex together with the straight-line snap distance."""
    vertex = nearest_vertex(network, point)
    return vertex, math.hypot(vertex.x - float(point[0]), vertex.y - float(point[1]))


def network_extent(network: RoadNetwork) -> tuple[float, float, float, float]:
    """Bounding box (min_x, min_y, max_x, max_y) over vertices and geometry."""
    if network.is_empty():
        raise EmptyNetworkError("network has no vertices")
    xs = [v.x for v in network.vertices.values()]
    ys = [v.y for v in network.vertices.values()]
    for segment in network.segments.values():
        for x, y in segment.geometry:
            xs.append(x)
            ys.append(y)
    return (min(xs), min(ys), max(xs), max(ys))
