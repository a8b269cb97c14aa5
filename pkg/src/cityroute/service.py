"""HTTP JSON API tying the pieces together: routing queries, account and
session management, admin rule mutations with synchronous alert evaluation,
and rendered route maps.

Rule reads are generation-stamped: every response that depends on the rule
set carries an ``X-Rules-Generation`` header naming the exact rule state it
observed, and each query works from one consistent snapshot.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import accounts, alerts
from .conditions import RuleStore, parse_rule, serialize_rule, validate_rule
from .errors import (
    CityRouteError,
    DuplicateUsernameError,
    EmptyNetworkError,
    ForbiddenError,
    NoRouteError,
    ParseError,
    RasterUnsupportedError,
    SessionExpiredError,
    UnknownChannelError,
    UnknownVertexError,
    ValidationError,
    WeakPasswordError,
    ADMIN_REQUIRED,
)
from .network import RoadNetwork, ingest_network, serialize_network
from .render import RenderConfig, render_map
from .routing import Mode, plan_route, route_path_from_sequences

logger = logging.getLogger(__name__)

MAP_CACHE_LIMIT = 512


@dataclass
class ServiceConfig:
    """Startup configuration; ``from_file`` reads the JSON form and resolves
    relative paths against the config file's directory."""

    data_dir: Path = Path("data")
    host: str = "127.0.0.1"
    port: int = 8000
    network_file: Path | None = None
    default_mode: Mode = Mode.STRICT
    penalty_factor: float = 1e6
    render_width: int = 800
    render_height: int = 600
    admin_bootstrap: Path | None = None
    alert_on_improvement: bool = True
    session_ttl_minutes: int = 24 * 60

    _KEYS = {
        "data_dir", "host", "port", "network_file", "default_mode", "penalty_factor",
        "render", "admin_bootstrap", "alert_on_improvement", "session_ttl_minutes",
    }

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        path = Path(path)
        try:
            decoded = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ParseError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(decoded, dict):
            raise ParseError("config file must contain a JSON object")
        unknown = set(decoded) - cls._KEYS
        if unknown:
            raise ParseError(f"config: unknown key {sorted(unknown)[0]!r}")
        base = path.resolve().parent
        config = cls()
        if "data_dir" in decoded:
            config.data_dir = _resolve(base, decoded["data_dir"])
        if "host" in decoded:
            config.host = str(decoded["host"])
        if "port" in decoded:
            config.port = decoded["port"]
        if "network_file" in decoded and decoded["network_file"] is not None:
            config.network_file = _resolve(base, decoded["network_file"])
        if "default_mode" in decoded:
            config.default_mode = parse_mode(decoded["default_mode"])
        if "penalty_factor" in decoded:
            config.penalty_factor = float(decoded["penalty_factor"])
        render = decoded.get("render", {})
        if not isinstance(render, dict):
            raise ParseError("config: render must be an object")
        config.render_width = render.get("width_px", config.render_width)
        config.render_height = render.get("height_px", config.render_height)
        if "admin_bootstrap" in decoded and decoded["admin_bootstrap"] is not None:
            config.admin_bootstrap = _resolve(base, decoded["admin_bootstrap"])
        if "alert_on_improvement" in decoded:
            config.alert_on_improvement = bool(decoded["alert_on_improvement"])
        if "session_ttl_minutes" in decoded:
            config.session_ttl_minutes = int(decoded["session_ttl_minutes"])
        return config

    def apply_env(self, environ) -> "ServiceConfig":
        data_dir = environ.get("ROUTE_DATA_DIR")
        if data_dir:
            self.data_dir = Path(data_dir)
        return self

    def resolved_network_file(self) -> Path:
        return self.network_file if self.network_file is not None else self.data_dir / "network.json"

    def validate(self) -> "ServiceConfig":
        if not isinstance(self.port, int) or not 1 <= self.port <= 65535:
            raise ValidationError(f"config: port {self.port!r} out of range")
        if not self.data_dir.is_dir():
            raise ValidationError(f"config: data_dir {self.data_dir} does not exist")
        network_file = self.resolved_network_file()
        if not network_file.is_file():
            raise ValidationError(f"config: network file {network_file} does not exist")
        if self.admin_bootstrap is not None and not self.admin_bootstrap.is_file():
            raise ValidationError(f"config: admin bootstrap {self.admin_bootstrap} does not exist")
        if self.penalty_factor <= 1.0:
            raise ValidationError("config: penalty_factor must be greater than 1")
        if self.render_width < 16 or self.render_height < 16:
            raise ValidationError("config: render size must be at least 16x16")
        if self.session_ttl_minutes <= 0:
            raise ValidationError("config: session_ttl_minutes must be positive")
        return self


def _resolve(base: Path, value) -> Path:
    p = Path(str(value))
    return p if p.is_absolute() else base / p


def parse_mode(value) -> Mode:
    if isinstance(value, str):
        try:
            return Mode(value.upper())
        except ValueError:
            pass
    raise ParseError(f"mode must be 'strict' or 'faithful', got {value!r}")


def load_admin_bootstrap(path: Path) -> list[tuple[str, str]]:
    try:
        decoded = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"admin bootstrap is not valid JSON: {exc}") from exc
    if not isinstance(decoded, dict) or not isinstance(decoded.get("admin_users"), list):
        raise ParseError("admin bootstrap must be an object with an 'admin_users' array")
    out = []
    for entry in decoded["admin_users"]:
        if not isinstance(entry, dict) or "username" not in entry or "credential_digest" not in entry:
            raise ParseError("each admin_users entry needs 'username' and 'credential_digest'")
        out.append((str(entry["username"]), str(entry["credential_digest"])))
    return out


class ServiceState:
    """Everything the handlers share: stores, the network, the alert engine,
    and a bounded cache of rendered route maps."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.network: RoadNetwork = ingest_network(config.resolved_network_file().read_bytes())
        self.rules = RuleStore(config.data_dir / "rules.jsonl")
        self.users = accounts.UserStore(config.data_dir / "users.jsonl")
        self.trips = accounts.TripStore(config.data_dir / "trips.jsonl")
        self.sessions = accounts.SessionStore(dt.timedelta(minutes=config.session_ttl_minutes))
        self.engine = alerts.AlertEngine(
            trips=self.trips,
            users=self.users,
            channels=alerts.default_channels(config.data_dir / "outbox"),
            log_path=config.data_dir / "alerts.jsonl",
            alert_on_improvement=config.alert_on_improvement,
            mode=config.default_mode,
            penalty_factor=config.penalty_factor,
        )
        self.write_lock = threading.RLock()
        self._map_cache: OrderedDict[str, bytes] = OrderedDict()
        self._map_lock = threading.Lock()
        if config.admin_bootstrap is not None:
            for username, digest in load_admin_bootstrap(config.admin_bootstrap):
                self.users.ensure_admin(username, digest)

    def render_config(self) -> RenderConfig:
        return RenderConfig(width_px=self.config.render_width, height_px=self.config.render_height)

    def cache_map(self, key: str, payload: bytes) -> None:
        with self._map_lock:
            self._map_cache[key] = payload
            self._map_cache.move_to_end(key)
            while len(self._map_cache) > MAP_CACHE_LIMIT:
                self._map_cache.popitem(last=False)

    def cached_map(self, key: str) -> bytes | None:
        with self._map_lock:
            return self._map_cache.get(key)


_ERROR_STATUS: list[tuple[type, int, str]] = [
    (ParseError, 400, "malformed"),
    (ForbiddenError, 403, "forbidden"),
    (SessionExpiredError, 401, "session_expired"),
    (NoRouteError, 404, "no_route"),
    (UnknownVertexError, 422, "unknown_vertex"),
    (DuplicateUsernameError, 409, "duplicate_username"),
    (WeakPasswordError, 422, "weak_password"),
    (UnknownChannelError, 422, "unknown_channel"),
    (EmptyNetworkError, 503, "empty_network"),
    (RasterUnsupportedError, 501, "raster_unsupported"),
    (ValidationError, 422, "validation"),
    (CityRouteError, 500, "internal"),
]


def _error_response(exc: CityRouteError) -> JSONResponse:
    for cls, status, slug in _ERROR_STATUS:
        if isinstance(exc, cls):
            payload = {"error": slug, "detail": str(exc)}
            if isinstance(exc, ForbiddenError):
                payload["code"] = exc.code
            return JSONResponse(payload, status_code=status)
    return JSONResponse({"error": "internal", "detail": str(exc)}, status_code=500)


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise ParseError(f"request body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise ParseError("request body must be a JSON object")
    return body


def _reject_unknown(body: dict, allowed: set, where: str) -> None:
    unknown = set(body) - allowed
    if unknown:
        raise ParseError(f"{where}: unknown key {sorted(unknown)[0]!r}")


def _optional_instant(body: dict, key: str) -> dt.datetime | None:
    raw = body.get(key)
    if raw is None:
        return None
    if not isinstance(raw, str):
        raise ParseError(f"{key} must be an ISO-8601 datetime string")
    try:
        return dt.datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ParseError(f"{key}: bad datetime {raw!r}") from exc


def create_app(config: ServiceConfig) -> FastAPI:
    """Build the application around a validated configuration."""
    state = ServiceState(config)
    app = FastAPI(title="cityroute", openapi_url=None, docs_url=None, redoc_url=None)
    app.state.ctx = state

    @app.exception_handler(CityRouteError)
    async def _domain_error(request: Request, exc: CityRouteError):
        return _error_response(exc)

    def current_session(request: Request, now: dt.datetime) -> accounts.Session | None:
        header = request.headers.get("authorization")
        if not header:
            return None
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token.strip():
            raise SessionExpiredError("authorization header must be 'Bearer <token>'")
        return state.sessions.resolve(token.strip(), now)

    def require_session(request: Request, now: dt.datetime) -> accounts.Session:
        session = current_session(request, now)
        if session is None:
            raise SessionExpiredError("this endpoint requires a session token")
        return session

    def require_admin(request: Request, now: dt.datetime) -> accounts.Session:
        session = require_session(request, now)
        account = state.users.get(session.user_id)
        if account is None or account.role != accounts.ROLE_ADMIN:
            raise ForbiddenError(ADMIN_REQUIRED, "rule mutations require an admin account")
        return session

    @app.get("/api/network")
    async def get_network():
        return JSONResponse(serialize_network(state.network))

    @app.post("/api/route")
    async def post_route(request: Request):
        body = await _json_body(request)
        _reject_unknown(body, {"origin", "destination", "when", "mode", "compact"}, "route request")
        for key in ("origin", "destination"):
            if key not in body:
                raise ParseError(f"route request: missing key {key!r}")
        compact = body.get("compact", False)
        if not isinstance(compact, bool):
            raise ParseError("route request: compact must be a boolean")
        mode = parse_mode(body["mode"]) if "mode" in body else state.config.default_mode
        requested_t = _optional_instant(body, "when")
        now = dt.datetime.now()
        session = current_session(request, now)
        effective_t = accounts.authorize_query(session, requested_t, now)
        generation, rules = state.rules.snapshot()
        result = plan_route(
            state.network, rules, body["origin"], body["destination"], effective_t,
            mode=mode, penalty_factor=state.config.penalty_factor,
        )
        map_key = hashlib.sha256(
            result.canonical_json() + f"|{generation}|{mode.value}".encode()
        ).hexdigest()[:16]
        if state.cached_map(map_key) is None:
            path = route_path_from_sequences(
                state.network, result.vertices, result.segments, effective_t
            )
            state.cache_map(
                map_key,
                render_map(state.network, rules, effective_t, path, state.render_config()),
            )
        payload = result.to_payload()
        if compact:
            payload.pop("steps", None)
        payload["map_url"] = f"/api/maps/{map_key}.svg"
        return JSONResponse(payload, headers={"X-Rules-Generation": str(generation)})

    @app.get("/api/maps/network.svg")
    async def get_network_map():
        generation, rules = state.rules.snapshot()
        svg = render_map(state.network, rules, dt.datetime.now(), None, state.render_config())
        return Response(
            svg, media_type="image/svg+xml",
            headers={"X-Rules-Generation": str(generation)},
        )

    @app.get("/api/maps/{map_id}.svg")
    async def get_map(map_id: str):
        svg = state.cached_map(map_id)
        if svg is None:
            return JSONResponse({"error": "unknown_map", "detail": map_id}, status_code=404)
        return Response(svg, media_type="image/svg+xml")

    @app.post("/api/users")
    async def post_users(request: Request):
        body = await _json_body(request)
        allowed = {"username", "password", *accounts.PROFILE_FIELDS}
        _reject_unknown(body, allowed, "registration")
        for key in ("username", "password"):
            if key not in body:
                raise ParseError(f"registration: missing key {key!r}")
        profile = {k: body[k] for k in accounts.PROFILE_FIELDS if k in body}
        account = state.users.register(str(body["username"]), str(body["password"]), **profile)
        return JSONResponse(account.public_payload(), status_code=201)

    @app.post("/api/sessions")
    async def post_sessions(request: Request):
        body = await _json_body(request)
        _reject_unknown(body, {"username", "password"}, "login")
        account = state.users.verify_credentials(
            str(body.get("username", "")), str(body.get("password", ""))
        )
        if account is None:
            return JSONResponse(
                {"error": "bad_credentials", "detail": "username or password is wrong"},
                status_code=401,
            )
        session = state.sessions.issue(account.id, dt.datetime.now())
        return JSONResponse(
            {
                "token": session.token,
                "expires_at": session.expires_at.isoformat(),
                "user": account.public_payload(),
            },
            status_code=201,
        )

    @app.patch("/api/users/me")
    async def patch_me(request: Request):
        now = dt.datetime.now()
        session = require_session(request, now)
        body = await _json_body(request)
        account = state.users.update_profile(session.user_id, body)
        return JSONResponse(account.public_payload())

    @app.get("/api/rules")
    async def get_rules():
        generation, rules = state.rules.snapshot()
        return JSONResponse(
            [serialize_rule(rule) for rule in sorted(rules, key=lambda r: r.id)],
            headers={"X-Rules-Generation": str(generation)},
        )

    def _mutate_rules(session: accounts.Session, change: alerts.ChangeKind, rule, remove_id=None):
        """Apply one mutation under the write lock, then evaluate alerts
        synchronously against the post-change rule set."""
        with state.write_lock:
            if change is alerts.ChangeKind.CREATED:
                generation = state.rules.add(rule)
            elif change is alerts.ChangeKind.UPDATED:
                generation = state.rules.replace(rule)
            else:
                generation, rule = state.rules.remove(remove_id)
            _, rules_after = state.rules.snapshot()
            event = alerts.RuleChangeEvent(
                id=generation, change=change, rule=rule,
                at=dt.datetime.now(), actor=session.user_id,
            )
            state.engine.process_event(event, state.network, rules_after)
            return generation, rule

    @app.post("/api/rules")
    async def post_rules(request: Request):
        now = dt.datetime.now()
        session = require_admin(request, now)
        rule = parse_rule(await _json_body(request))
        validate_rule(rule, state.network)
        generation, _ = _mutate_rules(session, alerts.ChangeKind.CREATED, rule)
        return JSONResponse(
            serialize_rule(rule), status_code=201,
            headers={"X-Rules-Generation": str(generation)},
        )

    @app.put("/api/rules/{rule_id}")
    async def put_rule(rule_id: int, request: Request):
        now = dt.datetime.now()
        session = require_admin(request, now)
        rule = parse_rule(await _json_body(request))
        if rule.id != rule_id:
            raise ValidationError(f"rule id {rule.id} does not match path id {rule_id}")
        validate_rule(rule, state.network)
        generation, _ = _mutate_rules(session, alerts.ChangeKind.UPDATED, rule)
        return JSONResponse(
            serialize_rule(rule),
            headers={"X-Rules-Generation": str(generation)},
        )

    @app.delete("/api/rules/{rule_id}")
    async def delete_rule(rule_id: int, request: Request):
        now = dt.datetime.now()
        session = require_admin(request, now)
        generation, _ = _mutate_rules(session, alerts.ChangeKind.DELETED, None, remove_id=rule_id)
        return Response(status_code=204, headers={"X-Rules-Generation": str(generation)})

    @app.post("/api/trips")
    async def post_trips(request: Request):
        now = dt.datetime.now()
        session = current_session(request, now)
        body = await _json_body(request)
        _reject_unknown(body, {"origin", "destination", "travel_at", "channels"}, "trip request")
        for key in ("origin", "destination", "travel_at"):
            if key not in body:
                raise ParseError(f"trip request: missing key {key!r}")
        travel_at = _optional_instant(body, "travel_at")
        channels = body.get("channels", ["CONSOLE"])
        if not isinstance(channels, list):
            raise ParseError("trip request: channels must be an array")
        generation, rules = state.rules.snapshot()

        def plan(origin, destination, t):
            return plan_route(
                state.network, rules, origin, destination, t,
                mode=state.config.default_mode, penalty_factor=state.config.penalty_factor,
            )

        trip = accounts.create_trip(
            state.trips, session,
            origin=body["origin"], destination=body["destination"],
            travel_at=travel_at, channels=channels, now=now, plan=plan,
        )
        return JSONResponse(
            trip.public_payload(), status_code=201,
            headers={"X-Rules-Generation": str(generation)},
        )

    @app.get("/api/trips")
    async def get_trips(request: Request):
        now = dt.datetime.now()
        session = require_session(request, now)
        trips = state.trips.for_owner(session.user_id)
        return JSONResponse([trip.public_payload() for trip in trips])

    @app.get("/api/alerts")
    async def get_alerts(request: Request):
        now = dt.datetime.now()
        session = require_session(request, now)
        own = [t.id for t in state.trips.for_owner(session.user_id)]
        notes = state.engine.notifications(own)
        return JSONResponse([n.to_record() for n in notes])

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service under uvicorn until interrupted."""
    import uvicorn

    app = create_app(config.validate())
    logger.info("serving on %s:%s", config.host, config.port)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
