"""User accounts, sessions, role policy, and planned trips.

Two roles exist. Anyone may register and gets REGISTERED; ADMIN accounts are
seeded from a bootstrap config, never via self-registration. Anonymous
callers may only ask about the present moment; signed-in users may plan for
any instant, including the past.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import hmac
import secrets
import threading
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import (
    DuplicateUsernameError,
    ForbiddenError,
    FUTURE_QUERY_REQUIRES_ACCOUNT,
    ParseError,
    SessionExpiredError,
    TRIP_REQUIRES_ACCOUNT,
    ValidationError,
    WeakPasswordError,
)
from .storage import JsonlTable

ROLE_REGISTERED = "REGISTERED"
ROLE_ADMIN = "ADMIN"

MIN_PASSWORD_LENGTH = 8
ANONYMOUS_NOW_TOLERANCE = dt.timedelta(seconds=60)
DEFAULT_SESSION_TTL = dt.timedelta(hours=24)
SESSION_TOKEN_BYTES = 32  # 256-bit tokens

PBKDF2_ITERATIONS = 60_000
PROFILE_FIELDS = ("full_name", "email", "phone", "address", "closest_city")
NOTIFICATION_CHANNELS = ("EMAIL", "SMS", "CONSOLE")


def hash_password(password: str, salt: str | None = None, iterations: int = PBKDF2_ITERATIONS) -> str:
    """Salted one-way digest in a self-describing format."""
    if salt is None:
        salt = secrets.token_hex(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), bytes.fromhex(salt), iterations)
    return f"pbkdf2_sha256${iterations}${salt}${digest.hex()}"


def verify_password(stored: str, password: str) -> bool:
    try:
        scheme, iterations, salt, expected = stored.split("$")
        if scheme != "pbkdf2_sha256":
            return False
        candidate = hashlib.pbkdf2_hmac(
            "sha256", password.encode("utf-8"), bytes.fromhex(salt), int(iterations)
        )
        return hmac.compare_digest(candidate.hex(), expected)
    except (ValueError, TypeError):
        return False


@dataclass(frozen=True)
class UserAccount:
    id: int
    username: str
    credential_digest: str
    role: str = ROLE_REGISTERED
    full_name: str = ""
    email: str = ""
    phone: str = ""
    address: str = ""
    closest_city: str = ""

    def public_payload(self) -> dict:
        """Account as shown to its owner; the digest never leaves the store."""
        return {
            "id": self.id,
            "username": self.username,
            "role": self.role,
            "full_name": self.full_name,
            "email": self.email,
            "phone": self.phone,
            "address": self.address,
            "closest_city": self.closest_city,
        }


@dataclass(frozen=True)
class Session:
    token: str
    user_id: int
    expires_at: dt.datetime


@dataclass(frozen=True)
class PlannedTrip:
    id: int
    owner: int
    origin: dict
    destination: dict
    travel_at: dt.datetime
    channels: tuple[str, ...]
    last_result: dict | None = None

    def public_payload(self) -> dict:
        return {
            "id": self.id,
            "origin": self.origin,
            "destination": self.destination,
            "travel_at": self.travel_at.isoformat(),
            "channels": list(self.channels),
            "last_result": self.last_result,
        }


def _account_from_record(record: dict) -> UserAccount:
    return UserAccount(
        id=record["id"],
        username=record["username"],
        credential_digest=record["credential_digest"],
        role=record["role"],
        full_name=record.get("full_name", ""),
        email=record.get("email", ""),
        phone=record.get("phone", ""),
        address=record.get("address", ""),
        closest_city=record.get("closest_city", ""),
    )


def _account_to_record(account: UserAccount) -> dict:
    return {
        "id": account.id,
        "username": account.username,
        "credential_digest": account.credential_digest,
        "role": account.role,
        "full_name": account.full_name,
        "email": account.email,
        "phone": account.phone,
        "address": account.address,
        "closest_city": account.closest_city,
    }


class UserStore:
    """Accounts persisted as JSON lines; usernames are unique."""

    def __init__(self, path: str | Path | None = None):
        self._table = JsonlTable(path)
        self._lock = threading.RLock()

    def _next_id(self) -> int:
        records = self._table.all_records()
        return 1 + max((r["id"] for r in records), default=0)

    def register(self, username: str, password: str, **profile) -> UserAccount:
        """Create a REGISTERED account. Raises DuplicateUsernameError or
        WeakPasswordError."""
        unknown = set(profile) - set(PROFILE_FIELDS)
        if unknown:
            raise ParseError(f"unknown profile field {sorted(unknown)[0]!r}")
        if not username or not isinstance(username, str):
            raise ValidationError("username must be a non-empty string")
        if len(password) < MIN_PASSWORD_LENGTH:
            raise WeakPasswordError(
                f"password must be at least {MIN_PASSWORD_LENGTH} characters"
            )
        with self._lock:
            if self.get_by_username(username) is not None:
                raise DuplicateUsernameError(f"username {username!r} is taken")
            account = UserAccount(
                id=self._next_id(),
                username=username,
                credential_digest=hash_password(password),
                role=ROLE_REGISTERED,
                **{k: str(profile.get(k, "")) for k in PROFILE_FIELDS},
            )
            self._table.put(_account_to_record(account))
            return account

    def ensure_admin(self, username: str, credential_digest: str) -> UserAccount:
        """Seed an ADMIN account from bootstrap config; existing accounts with
        that username are promoted but keep their own credentials."""
        with self._lock:
            existing = self.get_by_username(username)
            if existing is not None:
                if existing.role != ROLE_ADMIN:
                    promoted = replace(existing, role=ROLE_ADMIN)
                    self._table.put(_account_to_record(promoted))
                    return promoted
                return existing
            account = UserAccount(
                id=self._next_id(),
                username=username,
                credential_digest=credential_digest,
                role=ROLE_ADMIN,
            )
            self._table.put(_account_to_record(account))
            return account

    def get(self, user_id: int) -> UserAccount | None:
        record = self._table.get(user_id)
        return _account_from_record(record) if record else None

    def get_by_username(self, username: str) -> UserAccount | None:
        for record in self._table.all_records():
            if record["username"] == username:
                return _account_from_record(record)
        return None

    def verify_credentials(self, username: str, password: str) -> UserAccount | None:
        account = self.get_by_username(username)
        if account is None or not verify_password(account.credential_digest, password):
            return None
        return account

    def update_profile(self, user_id: int, fields: dict) -> UserAccount:
        """Apply profile changes; username, role, and id silently stay as
        they are, whatever the caller sends."""
        with self._lock:
            account = self.get(user_id)
            if account is None:
                raise ValidationError(f"unknown user {user_id}")
            changes = {
                key: str(value)
                for key, value in fields.items()
                if key in PROFILE_FIELDS and value is not None
            }
            updated = replace(account, **changes)
            self._table.put(_account_to_record(updated))
            return updated


class SessionStore:
    """Opaque bearer tokens held in memory; they do not survive a restart."""

    def __init__(self, ttl: dt.timedelta = DEFAULT_SESSION_TTL):
        self._ttl = ttl
        self._sessions: dict[str, Session] = {}
        self._lock = threading.RLock()

    def issue(self, user_id: int, now: dt.datetime) -> Session:
        token = secrets.token_hex(SESSION_TOKEN_BYTES)
        session = Session(token=token, user_id=user_id, expires_at=now + self._ttl)
        with self._lock:
            self._sessions[token] = session
        return session

    def resolve(self, token: str, now: dt.datetime) -> Session:
        """Raises SessionExpiredError for unknown as well as expired tokens,
        so callers cannot distinguish the two."""
        with self._lock:
            session = self._sessions.get(token)
        if session is None or session.expires_at <= now:
            raise SessionExpiredError("session token is expired or unknown")
        return session

    def drop(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)


def authorize_query(
    session: Session | None,
    requested_t: dt.datetime | None,
    now: dt.datetime,
) -> dt.datetime:
    """Resolve the effective query instant under the role policy.

    Anonymous callers get ``now``, or ``requested_t`` when it is within
    sixty seconds of now; anything else raises ForbiddenError. A valid
    session unlocks any instant, past included.
    """
    if session is not None:
        if session.expires_at <= now:
            raise SessionExpiredError("session token is expired")
        return requested_t if requested_t is not None else now
    if requested_t is None:
        return now
    if abs(requested_t - now) <= ANONYMOUS_NOW_TOLERANCE:
        return requested_t
    raise ForbiddenError(
        FUTURE_QUERY_REQUIRES_ACCOUNT,
        "time-shifted queries require a signed-in account",
    )


def _trip_from_record(record: dict) -> PlannedTrip:
    return PlannedTrip(
        id=record["id"],
        owner=record["owner"],
        origin=record["origin"],
        destination=record["destination"],
        travel_at=dt.datetime.fromisoformat(record["travel_at"]),
        channels=tuple(record["channels"]),
        last_result=record.get("last_result"),
    )


class TripStore:
    """Planned trips persisted as JSON lines, keyed by trip id."""

    def __init__(self, path: str | Path | None = None):
        self._table = JsonlTable(path)
        self._lock = threading.RLock()

    def _next_id(self) -> int:
        return 1 + max((r["id"] for r in self._table.all_records()), default=0)

    def add(self, owner: int, origin: dict, destination: dict,
            travel_at: dt.datetime, channels, last_result: dict | None) -> PlannedTrip:
        with self._lock:
            trip = PlannedTrip(
                id=self._next_id(), owner=owner, origin=origin, destination=destination,
                travel_at=travel_at, channels=tuple(channels), last_result=last_result,
            )
            self._table.put({
                "id": trip.id, "owner": trip.owner, "origin": trip.origin,
                "destination": trip.destination, "travel_at": trip.travel_at.isoformat(),
                "channels": list(trip.channels), "last_result": trip.last_result,
            })
            return trip

    def update_result(self, trip_id: int, result: dict | None) -> PlannedTrip:
        with self._lock:
            record = self._table.get(trip_id)
            if record is None:
                raise ValidationError(f"unknown trip {trip_id}")
            record["last_result"] = result
            self._table.put(record)
            return _trip_from_record(record)

    def get(self, trip_id: int) -> PlannedTrip | None:
        record = self._table.get(trip_id)
        return _trip_from_record(record) if record else None

    def all_trips(self) -> list[PlannedTrip]:
        return [_trip_from_record(r) for r in self._table.all_records()]

    def for_owner(self, user_id: int) -> list[PlannedTrip]:
        return [t for t in self.all_trips() if t.owner == user_id]


def create_trip(
    trips: TripStore,
    session: Session | None,
    *,
    origin: dict,
    destination: dict,
    travel_at: dt.datetime,
    channels,
    now: dt.datetime,
    plan,
) -> PlannedTrip:
    """Store a future trip and its immediately planned route.

    Args:
        plan: callable (origin, destination, travel_at) -> RouteResult; the
            caller supplies routing so this module stays independent of it.

    Raises:
        ForbiddenError: no session; trips belong to accounts.
        ValidationError: travel_at is not in the future or a channel is unknown.
    """
    if session is None:
        raise ForbiddenError(TRIP_REQUIRES_ACCOUNT, "planned trips require a signed-in account")
    if session.expires_at <= now:
        raise SessionExpiredError("session token is expired")
    if travel_at <= now:
        raise ValidationError("travel_at must lie in the future")
    channels = tuple(channels)
    for channel in channels:
        if channel not in NOTIFICATION_CHANNELS:
            raise ValidationError(f"unknown notification channel {channel!r}")
    result = plan(origin, destination, travel_at)
    return trips.add(
        owner=session.user_id, origin=origin, destination=destination,
        travel_at=travel_at, channels=channels, last_result=result.to_payload(),
    )
