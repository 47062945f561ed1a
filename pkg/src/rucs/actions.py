"""Action forwarding: resolve the target's listen topic (cache first, trip
record fallback), publish the command, and relay the answer back to the
requester. Every exchange resolves exactly once: forwarded response XOR
timeout notice.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from typing import Any, Optional

from .broker import Broker, Envelope
from .clock import Clock, SystemClock
from .domain import ACTION_CATALOG, InvalidTimeout, NotFound, PermissionDenied, RucsError
from .store import Directory, TtlCache

TOPIC_CACHE_PREFIX = "topic:"
MAX_TIMEOUT_S = 30.0


class NoTopic(RucsError):
    code = "no_topic"  # maps to the 400-class response


class UnknownCorrelation(RucsError):
    code = "unknown_correlation"


class Expired(RucsError):
    code = "expired"


@dataclass(frozen=True)
class ActionRequest:
    requester_trip: str
    target_trip: str
    action: str
    payload: Any
    timeout: float = 5.0


@dataclass(frozen=True)
class PendingExchange:
    correlation_id: str
    requester_reply_topic: str
    action: str
    deadline: float


class ActionRouter:
    def __init__(
        self,
        broker: Broker,
        cache: TtlCache,
        directory: Directory,
        clock: Optional[Clock] = None,
        topic_cache_ttl: float = 300.0,
        default_timeout: float = 5.0,
    ):
        self._broker = broker
        self._cache = cache
        self._directory = directory
        self._clock = clock or SystemClock()
        self._topic_cache_ttl = topic_cache_ttl
        self.default_timeout = default_timeout
        self._pending: dict[str, PendingExchange] = {}
        self._lock = threading.Lock()
        self.expiries = 0

    def resolve_topic(self, target_trip: str) -> str:
        """Target's listen topic, cache first with trip-record fallback."""
        key = TOPIC_CACHE_PREFIX + target_trip
        topic = self._cache.get(key)
        if topic is None:
            topic = self._directory.read_listen_topic(target_trip)
            if not topic:
                raise NoTopic(f"no active trip {target_trip}")
            self._cache.put(key, topic, self._topic_cache_ttl)
        return topic

    def evict_topic(self, trip_id: str) -> None:
        self._cache.delete(TOPIC_CACHE_PREFIX + trip_id)

    def dispatch_action(self, req: ActionRequest) -> str:
        """Forward the action; returns the correlation id immediately.

        Acceptance here means the command was published, not completed.
        """
        if not 0 < req.timeout <= MAX_TIMEOUT_S:
            raise InvalidTimeout(f"timeout {req.timeout} outside (0, {MAX_TIMEOUT_S}]")
        if req.action not in ACTION_CATALOG:
            raise NotFound(f"unknown action {req.action!r}")
        target_vehicle = self._directory.get_vehicle(
            self._directory.get_trip(req.target_trip).vehicle
        )
        if req.action not in target_vehicle.exposed_actions:
            raise PermissionDenied(f"{req.action!r} is not exposed by the target")
        target_topic = self.resolve_topic(req.target_trip)
        reply_topic = self._directory.get_trip(req.requester_trip).listen_topic

        correlation_id = uuid.uuid4().hex
        now = self._clock.now()
        env = Envelope(
            topic=target_topic,
            correlation_id=correlation_id,
            kind="action_request",
            action=req.action,
            payload=req.payload,
            published_at=now,
            reply_to=reply_topic,
        )
        with self._lock:
            self._pending[correlation_id] = PendingExchange(
                correlation_id=correlation_id,
                requester_reply_topic=reply_topic,
                action=req.action,
                deadline=now + req.timeout,
            )
        self._broker.publish(env)
        return correlation_id

    def complete_action(self, response: Envelope) -> None:
        """Relay a target's answer to the requester's listen topic."""
        if response.kind != "action_response":
            raise ValueError("complete_action requires an action_response envelope")
        with self._lock:
            pending = self._pending.get(response.correlation_id)
            if pending is None:
                raise UnknownCorrelation(f"no pending exchange {response.correlation_id!r}")
            overdue = self._clock.now() > pending.deadline
            del self._pending[response.correlation_id]
            if overdue:
                self.expiries += 1
        if overdue:
            # Late response is dropped; the requester gets the timeout
            # notice (if the sweeper has not already sent it).
            self._publish_timeout_notice(pending)
            raise Expired(f"exchange {response.correlation_id!r} past deadline")
        forwarded = Envelope(
            topic=pending.requester_reply_topic,
            correlation_id=response.correlation_id,
            kind="action_response",
            action=response.action,
            payload=response.payload,
            published_at=self._clock.now(),
        )
        self._broker.publish(forwarded)

    def expire_due(self) -> int:
        """Expire overdue exchanges, delivering one timeout notice each."""
        now = self._clock.now()
        with self._lock:
            due = [p for p in self._pending.values() if now > p.deadline]
            for p in due:
                del self._pending[p.correlation_id]
                self.expiries += 1
        for p in due:
            self._publish_timeout_notice(p)
        return len(due)

    def _publish_timeout_notice(self, p: PendingExchange) -> None:
        notice = Envelope(
            topic=p.requester_reply_topic,
            correlation_id=p.correlation_id,
            kind="action_response",
            action=p.action,
            payload={"error": "timeout"},
            published_at=self._clock.now(),
        )
        try:
            self._broker.publish(notice)
        except Exception:
            pass  # requester's topic gone (trip completed); nothing to notify

    def pending_count(self) -> int:
        with self._lock:
            return len(self._pending)
