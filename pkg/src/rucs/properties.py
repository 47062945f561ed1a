"""Property request handling: chain of responsibility plus a deferred pool.

A request walks the registered handler chain in registration order; the
first handler that accepts the property runs. Every result is validated
against the property's JSON schema before it leaves the module. Deferred
execution runs the same handler on a small worker pool and caches results
by (target_trip, property, source_seq).
"""

from __future__ import annotations

import queue
import threading
import uuid
from dataclasses import dataclass
from typing import Any, Callable, Optional

import jsonschema

from .clock import Clock, SystemClock
from .domain import (
    AutomationLevel,
    Drowsiness,
    NoData,
    NotFound,
    PermissionDenied,
    RucsError,
    drowsiness_binary,
)
from .store import StateStore


class NoHandler(RucsError):
    code = "no_handler"


class SchemaInvalid(RucsError):
    code = "schema_invalid"


class UnknownTask(RucsError):
    code = "unknown_task"


@dataclass(frozen=True)
class PropertyRequest:
    requester_trip: str
    target_trip: str
    property: str
    params: Any = None


@dataclass(frozen=True)
class PropertyResult:
    property: str
    value: Any
    computed_at: float
    source_seq: int

    def to_dict(self) -> dict:
        from .domain import ts_to_str

        return {
            "property": self.property,
            "value": self.value,
            "computed_at": ts_to_str(self.computed_at),
            "source_seq": self.source_seq,
        }


RESULT_SCHEMAS: dict[str, dict] = {
    "drowsiness": {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "drowsiness",
        "type": "object",
        "properties": {
            "level": {"enum": ["none", "low", "medium", "high"]},
            "binary": {"enum": ["drowsy", "non-drowsy"]},
        },
        "required": ["level", "binary"],
        "additionalProperties": False,
    },
    "automation_level": {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "automation_level",
        "type": "object",
        "properties": {"level": {"enum": ["manual", "assisted", "autonomous"]}},
        "required": ["level"],
        "additionalProperties": False,
    },
}


class Handler:
    """Base property handler. Subclasses implement accepts() and run()."""

    def accepts(self, property_name: str) -> bool:
        raise NotImplementedError

    def run(self, req: PropertyRequest, store: StateStore) -> tuple[Any, int]:
        """Compute the value; returns (value, seq of newest record consulted)."""
        raise NotImplementedError

    def source_seq(self, req: PropertyRequest, store: StateStore) -> Optional[int]:
        """Seq the result would be computed from; used as the deferred cache key."""
        return None


class DrowsinessHandler(Handler):
    def accepts(self, property_name: str) -> bool:
        return property_name == "drowsiness"

    def run(self, req: PropertyRequest, store: StateStore) -> tuple[Any, int]:
        driver, seq = store.latest_state(req.target_trip, "driver")
        level: Drowsiness = driver.drowsiness
        return {"level": level.value, "binary": drowsiness_binary(level)}, seq

    def source_seq(self, req: PropertyRequest, store: StateStore) -> Optional[int]:
        try:
            _, seq = store.latest_state(req.target_trip, "driver")
            return seq
        except NoData:
            return None


class AutomationLevelHandler(Handler):
    def accepts(self, property_name: str) -> bool:
        return property_name == "automation_level"

    def run(self, req: PropertyRequest, store: StateStore) -> tuple[Any, int]:
        control, seq = store.latest_state(req.target_trip, "control")
        level: AutomationLevel = control.automation_level
        return {"level": level.value}, seq

    def source_seq(self, req: PropertyRequest, store: StateStore) -> Optional[int]:
        try:
            _, seq = store.latest_state(req.target_trip, "control")
            return seq
        except NoData:
            return None


@dataclass
class _Task:
    task_id: str
    req: PropertyRequest
    done: threading.Event
    result: Optional[PropertyResult] = None
    error: Optional[Exception] = None


class PropertyEngine:
    """Chain of handlers plus the deferred worker pool (the task-queue role)."""

    def __init__(
        self,
        store: StateStore,
        exposure_lookup: Callable[[str], frozenset[str]],
        clock: Optional[Clock] = None,
        workers: int = 2,
        schemas: Optional[dict[str, dict]] = None,
    ):
        self._store = store
        self._exposure_lookup = exposure_lookup
        self._clock = clock or SystemClock()
        self._schemas = dict(RESULT_SCHEMAS if schemas is None else schemas)
        self._chain: list[Handler] = []
        self._tasks: dict[str, _Task] = {}
        self._task_lock = threading.Lock()
        self._result_cache: dict[tuple[str, str, int], PropertyResult] = {}
        self._queue: "queue.Queue[_Task]" = queue.Queue()
        self._workers: list[threading.Thread] = []
        self._stopping = False
        self.executor_invocations = 0
        for _ in range(workers):
            t = threading.Thread(target=self._worker_loop, daemon=True)
            t.start()
            self._workers.append(t)

    # -- chain ------------------------------------------------------------

    def register(self, handler: Handler, schema: Optional[dict] = None, name: Optional[str] = None):
        """Append a handler to the chain; earlier registrations win ties."""
        self._chain.append(handler)
        if schema is not None and name is not None:
            self._schemas[name] = schema

    def register_builtin_handlers(self) -> None:
        self.register(DrowsinessHandler())
        self.register(AutomationLevelHandler())

    def get_handler(self, property_name: str) -> Handler:
        for handler in self._chain:
            if handler.accepts(property_name):
                return handler
        raise NoHandler(f"no handler accepts {property_name!r}")

    # -- synchronous path (Algorithm 1) ------------------------------------

    def handle_property(self, req: PropertyRequest) -> PropertyResult:
        exposed = self._exposure_lookup(req.target_trip)
        if req.property not in exposed:
            raise PermissionDenied(f"{req.property!r} is not exposed by the target")
        handler = self.get_handler(req.property)
        value, source_seq = handler.run(req, self._store)
        self._validate(req.property, value)
        return PropertyResult(
            property=req.property,
            value=value,
            computed_at=self._clock.now(),
            source_seq=source_seq,
        )

    def _validate(self, property_name: str, value: Any) -> None:
        schema = self._schemas.get(property_name)
        if schema is None:
            raise SchemaInvalid(f"no result schema registered for {property_name!r}")
        try:
            jsonschema.validate(value, schema)
        except jsonschema.ValidationError as e:
            raise SchemaInvalid(f"{property_name}: {e.message}") from e

    # -- deferred path ------------------------------------------------------

    def submit_deferred(self, req: PropertyRequest) -> str:
        task_id = uuid.uuid4().hex
        task = _Task(task_id=task_id, req=req, done=threading.Event())

        # Resolve from cache without touching the executor when the
        # relevant state has not advanced. Non-exposed properties always
        # go through the queue so the permission error surfaces on poll.
        key = None
        if req.property in self._exposure_lookup(req.target_trip):
            key = self._cache_key(req)
        if key is not None:
            cached = self._result_cache.get(key)
            if cached is not None:
                task.result = cached
                task.done.set()
                with self._task_lock:
                    self._tasks[task_id] = task
                return task_id

        with self._task_lock:
            self._tasks[task_id] = task
        self._queue.put(task)
        return task_id

    def poll_deferred(self, task_id: str):
        """Returns "pending", a PropertyResult, or raises the task's error."""
        with self._task_lock:
            task = self._tasks.get(task_id)
        if task is None:
            raise UnknownTask(f"no task {task_id!r}")
        if not task.done.is_set():
            return "pending"
        if task.error is not None:
            raise task.error
        return task.result

    def wait_deferred(self, task_id: str, timeout: float = 10.0):
        with self._task_lock:
            task = self._tasks.get(task_id)
        if task is None:
            raise UnknownTask(f"no task {task_id!r}")
        task.done.wait(timeout)
        return self.poll_deferred(task_id)

    def _cache_key(self, req: PropertyRequest) -> Optional[tuple[str, str, int]]:
        try:
            handler = self.get_handler(req.property)
        except NoHandler:
            return None
        seq = handler.source_seq(req, self._store)
        if seq is None:
            return None
        return (req.target_trip, req.property, seq)

    def _worker_loop(self) -> None:
        while not self._stopping:
            try:
                task = self._queue.get(timeout=0.5)
            except queue.Empty:
                continue
            try:
                self.executor_invocations += 1
                result = self.handle_property(task.req)
                key = (task.req.target_trip, task.req.property, result.source_seq)
                self._result_cache[key] = result
                task.result = result
            except Exception as e:  # surfaced via poll_deferred
                task.error = e
            finally:
                task.done.set()
                self._queue.task_done()

    def shutdown(self) -> None:
        self._stopping = True
