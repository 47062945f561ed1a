"""In-process topic-based publish/subscribe broker.

At-most-once, non-persistent delivery with no retained messages. Each
subscriber has a bounded queue; overflow drops the oldest envelope and
increments a counter so a slow consumer never stalls publishers.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from typing import Any, Optional

from .domain import RucsError, is_valid_topic, str_to_ts, ts_to_str


class PatternViolation(RucsError):
    code = "pattern_violation"


class NoSuchTopic(RucsError):
    code = "no_such_topic"


@dataclass(frozen=True)
class Envelope:
    topic: str
    correlation_id: str
    kind: str  # "action_request" | "action_response"
    action: str
    payload: Any
    published_at: float
    reply_to: Optional[str] = None  # required on requests

    def __post_init__(self):
        if self.kind not in ("action_request", "action_response"):
            raise ValueError(f"bad envelope kind {self.kind!r}")
        if self.kind == "action_request" and not self.reply_to:
            raise ValueError("action_request envelope requires reply_to")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "topic": self.topic,
            "correlation_id": self.correlation_id,
            "kind": self.kind,
            "action": self.action,
            "payload": self.payload,
            "published_at": ts_to_str(self.published_at),
        }
        if self.reply_to is not None:
            d["reply_to"] = self.reply_to
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Envelope":
        return cls(
            topic=d["topic"],
            correlation_id=d["correlation_id"],
            kind=d["kind"],
            action=d["action"],
            payload=d["payload"],
            published_at=str_to_ts(d["published_at"]),
            reply_to=d.get("reply_to"),
        )


class Subscription:
    """FIFO stream of envelopes for one subscriber; one consumer at a time."""

    def __init__(self, topic: str, maxlen: int):
        self.topic = topic
        self._queue: deque[Envelope] = deque()
        self._maxlen = maxlen
        self._cond = threading.Condition()
        self._closed = False
        self.overflows = 0

    def _push(self, env: Envelope) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._queue) >= self._maxlen:
                self._queue.popleft()
                self.overflows += 1
            self._queue.append(env)
            self._cond.notify()

    def get(self, timeout: Optional[float] = None) -> Optional[Envelope]:
        """Next envelope, or None on timeout or after close."""
        with self._cond:
            if not self._queue:
                self._cond.wait(timeout)
            if self._queue:
                return self._queue.popleft()
            return None

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        with self._cond:
            return self._closed

    def __iter__(self):
        while True:
            env = self.get(timeout=0.5)
            if env is not None:
                yield env
            elif self.closed:
                return


class Broker:
    def __init__(self, queue_size: int = 1024):
        self._queue_size = queue_size
        self._topics: dict[str, list[Subscription]] = {}
        self._lock = threading.Lock()
        self.published = 0
        self.delivered = 0

    def declare_topic(self, name: str) -> None:
        if not is_valid_topic(name):
            raise PatternViolation(f"topic {name!r} does not match trip.<id>.in/out")
        with self._lock:
            self._topics.setdefault(name, [])

    def remove_topic(self, name: str) -> None:
        with self._lock:
            subs = self._topics.pop(name, [])
        for sub in subs:
            sub.close()

    def topic_exists(self, name: str) -> bool:
        with self._lock:
            return name in self._topics

    def publish(self, env: Envelope) -> None:
        with self._lock:
            if env.topic not in self._topics:
                raise NoSuchTopic(f"topic {env.topic!r} not declared")
            subs = list(self._topics[env.topic])
            self.published += 1
        for sub in subs:
            sub._push(env)
            with self._lock:
                self.delivered += 1

    def subscribe(self, topic: str) -> Subscription:
        with self._lock:
            if topic not in self._topics:
                raise NoSuchTopic(f"topic {topic!r} not declared")
            sub = Subscription(topic, self._queue_size)
            self._topics[topic].append(sub)
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            subs = self._topics.get(sub.topic)
            if subs and sub in subs:
                subs.remove(sub)
        sub.close()
