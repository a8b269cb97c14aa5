"""Map rendering: deterministic SVG vector maps and optional PNG rasters.

The vector output sticks to a small SVG 1.1 subset (polyline, rect, text) so
that the raster path and any downstream consumer only need to understand
those three elements. Identical inputs always produce identical bytes.
"""

from __future__ import annotations

import datetime as dt
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .conditions import resolve_segment_status, rules_for_segment
from .errors import (
    EmptyNetworkError,
    PathNotInNetworkError,
    RasterUnsupportedError,
    ValidationError,
)
from .network import RoadNetwork, network_extent
from .routing import ArcDirection, RoutePath

try:
    from PIL import Image, ImageDraw, ImageFont
    _RASTER_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via monkeypatch in tests
    _RASTER_AVAILABLE = False

MIN_DIMENSION_PX = 16
EXTENT_PADDING = 0.05


@dataclass(frozen=True)
class MapStyle:
    """Stroke and fill choices; tweak freely, the defaults just look decent."""

    background: str = "#f8f6f1"
    road_color: str = "#7d7d7d"
    road_width: float = 2.0
    closed_color: str = "#c0392b"
    closed_width: float = 2.0
    closed_dash: str = "6,4"
    route_color: str = "#1f6fb2"
    route_width: float = 4.0
    vertex_color: str = "#2c2c2c"
    vertex_size: float = 4.0
    label_color: str = "#333333"
    label_size: float = 11.0


@dataclass(frozen=True)
class RenderConfig:
    width_px: int = 800
    height_px: int = 600
    extent: tuple[float, float, float, float] | None = None
    style: MapStyle = field(default_factory=MapStyle)
    label_roads: bool = False

    def validated(self) -> "RenderConfig":
        if self.width_px < MIN_DIMENSION_PX or self.height_px < MIN_DIMENSION_PX:
            raise ValidationError(
                f"render size must be at least {MIN_DIMENSION_PX}x{MIN_DIMENSION_PX} pixels"
            )
        if self.extent is not None:
            min_x, min_y, max_x, max_y = self.extent
            if not (max_x >= min_x and max_y >= min_y):
                raise ValidationError("render extent is inverted")
        return self


@dataclass(frozen=True)
class MapTransform:
    """Uniform-scale world-to-pixel mapping, y flipped, content centered."""

    scale: float
    center_x: float
    center_y: float
    width_px: int
    height_px: int

    @classmethod
    def fit(cls, extent: tuple[float, float, float, float], width_px: int, height_px: int) -> "MapTransform":
        min_x, min_y, max_x, max_y = extent
        span_x = max(max_x - min_x, 1e-9)
        span_y = max(max_y - min_y, 1e-9)
        scale = min(width_px / span_x, height_px / span_y)
        return cls(
            scale=scale,
            center_x=(min_x + max_x) / 2.0,
            center_y=(min_y + max_y) / 2.0,
            width_px=width_px,
            height_px=height_px,
        )

    def to_pixel(self, x: float, y: float) -> tuple[float, float]:
        px = (x - self.center_x) * self.scale + self.width_px / 2.0
        py = self.height_px / 2.0 - (y - self.center_y) * self.scale
        return px, py

    def to_world(self, px: float, py: float) -> tuple[float, float]:
        x = (px - self.width_px / 2.0) / self.scale + self.center_x
        y = self.center_y - (py - self.height_px / 2.0) / self.scale
        return x, y


def padded_extent(extent: tuple[float, float, float, float]) -> tuple[float, float, float, float]:
    """The AUTO render extent: the raw extent padded 5% on every side."""
    min_x, min_y, max_x, max_y = extent
    pad_x = max((max_x - min_x) * EXTENT_PADDING, 1e-9)
    pad_y = max((max_y - min_y) * EXTENT_PADDING, 1e-9)
    return (min_x - pad_x, min_y - pad_y, max_x + pad_x, max_y + pad_y)


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _points_attr(transform: MapTransform, points) -> str:
    return " ".join(
        f"{_fmt(px)},{_fmt(py)}" for px, py in (transform.to_pixel(x, y) for x, y in points)
    )


def _route_points(network: RoadNetwork, path: RoutePath) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for arc in path.arcs:
        segment = network.segments.get(arc.segment_id)
        if segment is None:
            raise PathNotInNetworkError(f"path references unknown segment {arc.segment_id}")
        points = segment.geometry
        if arc.direction is ArcDirection.REVERSE:
            points = tuple(reversed(points))
        for point in points:
            if not out or out[-1] != point:
                out.append(point)
    return out


def render_map(
    network: RoadNetwork,
    rules,
    t: dt.datetime,
    path: RoutePath | None = None,
    config: RenderConfig | None = None,
) -> bytes:
    """Draw the network as SVG: one polyline per segment, closed segments in a
    distinct style, vertex markers, optional road labels, and the route
    overlay (when given) as a single polyline drawn last."""
    if network.is_empty():
        raise EmptyNetworkError("cannot render an empty network")
    config = (config or RenderConfig()).validated()
    style = config.style
    extent = config.extent if config.extent is not None else padded_extent(network_extent(network))
    transform = MapTransform.fit(extent, config.width_px, config.height_px)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{config.width_px}" height="{config.height_px}" '
        f'viewBox="0 0 {config.width_px} {config.height_px}" '
        f'data-scale="{transform.scale!r}" data-cx="{transform.center_x!r}" data-cy="{transform.center_y!r}">',
        f'<rect x="0" y="0" width="{config.width_px}" height="{config.height_px}" fill="{style.background}"/>',
    ]

    for segment_id in sorted(network.segments):
        segment = network.segments[segment_id]
        status = resolve_segment_status(rules_for_segment(rules, segment_id), t)
        closed = not status.forward_open and not status.reverse_open
        points = _points_attr(transform, segment.geometry)
        if closed:
            parts.append(
                f'<polyline class="road closed" data-segment="{segment_id}" points="{points}" '
                f'fill="none" stroke="{style.closed_color}" stroke-width="{style.closed_width}" '
                f'stroke-dasharray="{style.closed_dash}"/>'
            )
        else:
            parts.append(
                f'<polyline class="road" data-segment="{segment_id}" points="{points}" '
                f'fill="none" stroke="{style.road_color}" stroke-width="{style.road_width}"/>'
            )

    half = style.vertex_size / 2.0
    for vertex_id in sorted(network.vertices):
        vertex = network.vertices[vertex_id]
        px, py = transform.to_pixel(vertex.x, vertex.y)
        parts.append(
            f'<rect class="vertex" data-vertex="{vertex_id}" x="{_fmt(px - half)}" y="{_fmt(py - half)}" '
            f'width="{style.vertex_size}" height="{style.vertex_size}" fill="{style.vertex_color}"/>'
        )

    if config.label_roads:
        for segment_id in sorted(network.segments):
            segment = network.segments[segment_id]
            mid = segment.geometry[len(segment.geometry) // 2]
            px, py = transform.to_pixel(mid[0], mid[1])
            parts.append(
                f'<text class="label" x="{_fmt(px)}" y="{_fmt(py)}" fill="{style.label_color}" '
                f'font-size="{style.label_size}">{_escape(segment.name)}</text>'
            )

    if path is not None and path.arcs:
        points = _points_attr(transform, _route_points(network, path))
        parts.append(
            f'<polyline class="route" points="{points}" fill="none" '
            f'stroke="{style.route_color}" stroke-width="{style.route_width}"/>'
        )

    parts.append("</svg>")
    return "\n".join(parts).encode("utf-8")


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _parse_points(attr: str) -> list[tuple[float, float]]:
    points = []
    for token in attr.split():
        x, y = token.split(",")
        points.append((float(x), float(y)))
    return points


def rasterize(vector: bytes, config: RenderConfig | None = None) -> bytes:
    """Rasterize a vector map produced by render_map into a PNG.

    The raster is exactly config.width_px by config.height_px; content is
    scaled if the vector was rendered at a different size. Raises
    RasterUnsupportedError when the imaging backend is unavailable, so
    callers can fall back to vector output instead of crashing.
    """
    if not _RASTER_AVAILABLE:
        raise RasterUnsupportedError("raster output requires the Pillow imaging backend")
    config = (config or RenderConfig()).validated()
    try:
        root = ET.fromstring(vector.decode("utf-8"))
    except (ET.ParseError, UnicodeDecodeError) as exc:
        raise ValidationError(f"vector input is not parseable SVG: {exc}") from exc

    source_w = float(root.get("width", config.width_px))
    source_h = float(root.get("height", config.height_px))
    sx = config.width_px / source_w
    sy = config.height_px / source_h

    image = Image.new("RGB", (config.width_px, config.height_px), "#ffffff")
    draw = ImageDraw.Draw(image)
    svg_ns = "{http://www.w3.org/2000/svg}"

    for element in root:
        tag = element.tag.removeprefix(svg_ns)
        if tag == "rect":
            x = float(element.get("x", 0)) * sx
            y = float(element.get("y", 0)) * sy
            w = float(element.get("width", 0)) * sx
            h = float(element.get("height", 0)) * sy
            draw.rectangle([x, y, x + w, y + h], fill=element.get("fill", "#000000"))
        elif tag == "polyline":
            points = [(px * sx, py * sy) for px, py in _parse_points(element.get("points", ""))]
            if len(points) < 2:
                continue
            stroke = element.get("stroke", "#000000")
            width = max(1, round(float(element.get("stroke-width", 1)) * max(sx, sy)))
            draw.line(points, fill=stroke, width=width, joint="curve")
        elif tag == "text":
            x = float(element.get("x", 0)) * sx
            y = float(element.get("y", 0)) * sy
            draw.text((x, y), element.text or "", fill=element.get("fill", "#000000"),
                      font=ImageFont.load_default())

    out = io.BytesIO()
    image.save(out, format="PNG")
    return out.getvalue()
