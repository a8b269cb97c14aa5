"""Alerting: when a condition rule changes, find affected planned trips and
notify their owners exactly once per channel.

A trip counts as affected when the changed rule is active at its travel time
and sits on its planned route, or when re-planning at the travel time yields
a different segment sequence or a cost shifted by more than half a percent.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .accounts import PlannedTrip, TripStore, UserStore
from .conditions import ConditionRule, RuleKind, rule_active_at
from .errors import NoRouteError, UnknownChannelError
from .network import RoadNetwork
from .routing import Mode, RouteResult, plan_route

logger = logging.getLogger(__name__)

COST_CHANGE_THRESHOLD = 0.005  # relative


class ChangeKind(str, Enum):
    CREATED = "CREATED"
    UPDATED = "UPDATED"
    DELETED = "DELETED"


class DeliveryState(str, Enum):
    PENDING = "PENDING"
    SENT = "SENT"
    FAILED = "FAILED"


@dataclass(frozen=True)
class RuleChangeEvent:
    """One admin mutation of the rule set. The id makes replays detectable;
    the service uses the rule-store generation for it."""

    id: int
    change: ChangeKind
    rule: ConditionRule
    at: dt.datetime
    actor: int


@dataclass(frozen=True)
class NotificationEvent:
    id: str
    trip_id: int
    event_id: int
    channel: str
    body: str
    created_at: dt.datetime
    delivery_state: DeliveryState = DeliveryState.PENDING
    failure_reason: str = ""

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "trip_id": self.trip_id,
            "event_id": self.event_id,
            "channel": self.channel,
            "body": self.body,
            "created_at": self.created_at.isoformat(),
            "delivery_state": self.delivery_state.value,
            "failure_reason": self.failure_reason,
        }


def evaluate_trips(
    event: RuleChangeEvent,
    trips,
    network: RoadNetwork,
    rules_after,
    *,
    mode: Mode = Mode.STRICT,
    penalty_factor: float | None = None,
) -> list[tuple[PlannedTrip, RouteResult]]:
    """Re-plan every trip against the post-change rules and report the
    affected ones with their new results."""
    kwargs = {"mode": mode}
    if penalty_factor is not None:
        kwargs["penalty_factor"] = penalty_factor
    affected: list[tuple[PlannedTrip, RouteResult]] = []
    for trip in trips:
        old = trip.last_result or {}
        try:
            new = plan_route(
                network, rules_after, trip.origin, trip.destination, trip.travel_at, **kwargs
            )
        except NoRouteError:
            new = RouteResult.unreachable(trip.travel_at)
        if _is_affected(event, trip, old, new):
            affected.append((trip, new))
    return affected


def _is_affected(event: RuleChangeEvent, trip: PlannedTrip, old: dict, new: RouteResult) -> bool:
    old_no_route = bool(old.get("no_route"))
    if new.no_route:
        return not old_no_route
    if old_no_route:
        return True
    if rule_active_at(event.rule, trip.travel_at) and event.rule.segment_id in old.get("segments", []):
        return True
    if list(new.segments) != list(old.get("segments", [])):
        return True
    old_cost = old.get("cost")
    if old_cost is None:
        return True
    if old_cost == 0.0:
        return new.cost != 0.0
    return abs(new.cost - old_cost) > COST_CHANGE_THRESHOLD * abs(old_cost)


_KIND_PHRASES = {
    RuleKind.CLOSED: "closed",
    RuleKind.ONE_WAY_FORWARD: "restricted to one-way travel",
    RuleKind.ONE_WAY_REVERSE: "restricted to one-way travel",
    RuleKind.CONGESTION: "congested, delay expected",
}


def compose_alert(
    trip: PlannedTrip,
    old: dict,
    new: RouteResult,
    event: RuleChangeEvent,
    *,
    road_name: str,
) -> str:
    """Human-readable alert body naming the rule kind, the road, the travel
    time, and the old versus new cost."""
    if event.change is ChangeKind.DELETED:
        condition = f"The {event.rule.kind.value.lower().replace('_', ' ')} condition on {road_name} has been lifted."
    else:
        condition = f"{road_name} is now {_KIND_PHRASES[event.rule.kind]}."
    when = trip.travel_at.isoformat(sep=" ")
    old_cost = old.get("cost")
    old_text = f"{old_cost:.1f}" if isinstance(old_cost, (int, float)) else "unknown"
    if new.no_route:
        outcome = f"no route available for your trip on {when} (previous cost {old_text})."
    elif old.get("no_route"):
        outcome = f"a route is available again for your trip on {when}: cost {new.cost:.1f}."
    else:
        delta = new.cost - (old_cost if isinstance(old_cost, (int, float)) else new.cost)
        outcome = (
            f"your trip on {when} changes from cost {old_text} to {new.cost:.1f} "
            f"(delta {delta:+.1f})."
        )
    return f"{condition} Effect: {outcome}"


class NotificationChannel:
    """Adapter interface: deliver one notification or raise."""

    def deliver(self, notification: NotificationEvent, recipient: str) -> None:
        raise NotImplementedError


class ConsoleChannel(NotificationChannel):
    """Writes the body to the application log; delivery is the log line."""

    def deliver(self, notification: NotificationEvent, recipient: str) -> None:
        logger.info("alert %s: %s", notification.id, notification.body)


class OutboxChannel(NotificationChannel):
    """File-backed stand-in for an email or SMS gateway: drops one message
    file per notification into an outbox directory."""

    def __init__(self, outbox_dir: str | Path, channel: str):
        self._dir = Path(outbox_dir)
        self._channel = channel

    def deliver(self, notification: NotificationEvent, recipient: str) -> None:
        self._dir.mkdir(parents=True, exist_ok=True)
        target = self._dir / f"{notification.id}.{self._channel.lower()}.msg"
        lines = [
            f"To: {recipient or 'unknown'}",
            f"Channel: {self._channel}",
            f"Notification: {notification.id}",
            "",
            notification.body,
            "",
        ]
        target.write_text("\n".join(lines), encoding="utf-8")


def default_channels(outbox_dir: str | Path) -> dict[str, NotificationChannel]:
    return {
        "CONSOLE": ConsoleChannel(),
        "EMAIL": OutboxChannel(outbox_dir, "EMAIL"),
        "SMS": OutboxChannel(outbox_dir, "SMS"),
    }


def dispatch(
    notification: NotificationEvent,
    channels: dict[str, NotificationChannel],
    recipient: str = "",
) -> NotificationEvent:
    """Deliver through the named channel at most once and return the
    notification with its final delivery state."""
    adapter = channels.get(notification.channel)
    if adapter is None:
        raise UnknownChannelError(f"no adapter for channel {notification.channel!r}")
    try:
        adapter.deliver(notification, recipient)
    except Exception as exc:  # a channel failure must not break evaluation
        logger.warning("delivery failed for %s: %s", notification.id, exc)
        return replace(notification, delivery_state=DeliveryState.FAILED, failure_reason=str(exc))
    return replace(notification, delivery_state=DeliveryState.SENT)


class AlertEngine:
    """Synchronous evaluation of rule-change events against stored trips.

    Sent notifications are appended to a JSON-lines log; the (trip, event,
    channel) keys already in the log are never sent again, which makes event
    replay harmless.
    """

    def __init__(
        self,
        *,
        trips: TripStore,
        users: UserStore | None = None,
        channels: dict[str, NotificationChannel],
        log_path: str | Path | None = None,
        alert_on_improvement: bool = True,
        mode: Mode = Mode.STRICT,
        penalty_factor: float | None = None,
    ):
        self._trips = trips
        self._users = users
        self._channels = channels
        self._log_path = Path(log_path) if log_path else None
        self._alert_on_improvement = alert_on_improvement
        self._mode = mode
        self._penalty_factor = penalty_factor
        self._lock = threading.RLock()
        self._sent_keys: set[tuple[int, int, str]] = set()
        self._processed_events: set[int] = set()
        self._log: list[NotificationEvent] = []
        if self._log_path is not None and self._log_path.exists():
            self._reload_log()

    def _reload_log(self) -> None:
        for line in self._log_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            self._sent_keys.add((record["trip_id"], record["event_id"], record["channel"]))
            self._processed_events.add(record["event_id"])
            self._log.append(
                NotificationEvent(
                    id=record["id"],
                    trip_id=record["trip_id"],
                    event_id=record["event_id"],
                    channel=record["channel"],
                    body=record["body"],
                    created_at=dt.datetime.fromisoformat(record["created_at"]),
                    delivery_state=DeliveryState(record["delivery_state"]),
                    failure_reason=record.get("failure_reason", ""),
                )
            )

    def _append_log(self, notification: NotificationEvent) -> None:
        self._log.append(notification)
        if self._log_path is not None:
            self._log_path.parent.mkdir(parents=True, exist_ok=True)
            with self._log_path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(notification.to_record(), sort_keys=True) + "\n")

    def _recipient(self, trip: PlannedTrip, channel: str) -> str:
        if self._users is None:
            return ""
        account = self._users.get(trip.owner)
        if account is None:
            return ""
        return account.phone if channel == "SMS" else account.email

    def notifications(self, trip_ids=None) -> list[NotificationEvent]:
        with self._lock:
            if trip_ids is None:
                return list(self._log)
            wanted = set(trip_ids)
            return [n for n in self._log if n.trip_id in wanted]

    def process_event(
        self, event: RuleChangeEvent, network: RoadNetwork, rules_after
    ) -> list[NotificationEvent]:
        """Evaluate one rule change: update affected trips' stored results and
        dispatch one notification per (trip, channel). Replaying an already
        processed event id does nothing."""
        with self._lock:
            if event.id in self._processed_events:
                return []
            self._processed_events.add(event.id)
            pairs = evaluate_trips(
                event, self._trips.all_trips(), network, rules_after,
                mode=self._mode, penalty_factor=self._penalty_factor,
            )
            produced: list[NotificationEvent] = []
            now = dt.datetime.now()
            for trip, new_result in pairs:
                old_payload = trip.last_result or {}
                self._trips.update_result(trip.id, new_result.to_payload())
                if not self._alert_on_improvement and _is_improvement(old_payload, new_result):
                    continue
                body = compose_alert(
                    trip, old_payload, new_result, event,
                    road_name=_road_name(network, event.rule.segment_id),
                )
                for channel in trip.channels:
                    key = (trip.id, event.id, channel)
                    if key in self._sent_keys:
                        continue
                    self._sent_keys.add(key)
                    pending = NotificationEvent(
                        id=f"n{event.id}-t{trip.id}-{channel.lower()}",
                        trip_id=trip.id,
                        event_id=event.id,
                        channel=channel,
                        body=body,
                        created_at=now,
                    )
                    final = dispatch(pending, self._channels, self._recipient(trip, channel))
                    self._append_log(final)
                    produced.append(final)
            return produced


def _road_name(network: RoadNetwork, segment_id: int) -> str:
    segment = network.segments.get(segment_id)
    return segment.name if segment is not None else f"segment {segment_id}"


def _is_improvement(old: dict, new: RouteResult) -> bool:
    if new.no_route:
        return False
    if old.get("no_route"):
        return True
    old_cost = old.get("cost")
    return isinstance(old_cost, (int, float)) and new.cost < old_cost


__all__ = [
    "AlertEngine",
    "ChangeKind",
    "ConsoleChannel",
    "DeliveryState",
    "NotificationChannel",
    "NotificationEvent",
    "OutboxChannel",
    "RuleChangeEvent",
    "compose_alert",
    "default_channels",
    "dispatch",
    "evaluate_trips",
]
