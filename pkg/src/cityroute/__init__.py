"""Time-aware route planning for a city road network.

The package models a road network, lets scheduled condition rules (closures,
one-way restrictions, congestion) reshape it per instant, plans shortest
routes with turn-by-turn directions, renders maps, and alerts trip owners
when a rule change touches their planned route.
"""

from .accounts import (
    PlannedTrip,
    Session,
    SessionStore,
    TripStore,
    UserAccount,
    UserStore,
    authorize_query,
    create_trip,
    hash_password,
    verify_password,
)
from .alerts import (
    AlertEngine,
    ChangeKind,
    NotificationEvent,
    RuleChangeEvent,
    compose_alert,
    dispatch,
    evaluate_trips,
)
from .conditions import (
    ConditionRule,
    RuleKind,
    RuleStore,
    Schedule,
    ScheduleKind,
    SegmentStatus,
    parse_rule,
    resolve_segment_status,
    rule_active_at,
    serialize_rule,
    validate_rule,
)
from .errors import (
    CityRouteError,
    DuplicateUsernameError,
    EmptyNetworkError,
    ForbiddenError,
    InvalidPathError,
    MixedSegmentsError,
    NoRouteError,
    ParseError,
    PathNotInNetworkError,
    RasterUnsupportedError,
    SessionExpiredError,
    UnknownChannelError,
    UnknownVertexError,
    ValidationError,
    WeakPasswordError,
)
from .network import (
    RoadNetwork,
    RoadSegment,
    Vertex,
    ingest_network,
    nearest_vertex,
    network_extent,
    serialize_network,
)
from .render import MapTransform, RenderConfig, rasterize, render_map
from .routing import (
    Arc,
    ArcDirection,
    DirectionStep,
    GraphSnapshot,
    Instruction,
    Mode,
    RoutePath,
    RouteResult,
    build_snapshot,
    generate_directions,
    plan_route,
    shortest_path,
)
from .service import ServiceConfig, create_app, serve

__version__ = "0.1.0"
