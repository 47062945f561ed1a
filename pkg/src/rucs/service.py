"""HTTP/JSON service: the six request types, auth, and the listen-topic
stream bridge. Wires the directory, state store, geo index, broker,
property engine, and action router behind one core object.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from . import domain
from .actions import ActionRequest, ActionRouter, Expired, NoTopic, UnknownCorrelation
from .broker import Broker, Envelope, NoSuchTopic, PatternViolation
from .clock import Clock, SystemClock
from .domain import (
    NeighborInfo,
    NoData,
    NotFound,
    PermissionDenied,
    RucsError,
    StateRecord,
    Unauthorized,
    UserAccount,
    ValidationError,
    VehicleProfile,
)
from .geo import NoOwnPosition, PositionIndex
from .properties import NoHandler, PropertyEngine, PropertyRequest, SchemaInvalid, UnknownTask
from .store import Directory, StateStore, TtlCache


@dataclass
class Config:
    port: int = 8420
    data_dir: str = "rucs-data"
    default_radius_m: float = 300.0
    default_max_age_s: float = 10.0
    action_timeout_s: float = 5.0
    topic_cache_ttl_s: float = 300.0
    deferred_workers: int = 2
    inject_sleep_ms: float = 0.0  # artificial service delay, for latency tests

    @classmethod
    def load(cls, path: Optional[str] = None) -> "Config":
        """Load from a JSON file; RUCS_CONFIG overrides the path."""
        path = os.environ.get("RUCS_CONFIG", path)
        cfg = cls()
        if path and Path(path).exists():
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            for key, value in raw.items():
                if hasattr(cfg, key):
                    setattr(cfg, key, value)
        return cfg


class ServiceCore:
    """All service behavior behind a process-internal API; the HTTP layer
    is a thin translation on top."""

    def __init__(self, config: Optional[Config] = None, clock: Optional[Clock] = None):
        self.config = config or Config()
        self.clock = clock or SystemClock()
        self.directory = Directory(clock=self.clock)
        self.geo = PositionIndex(is_active=self.directory.is_active)
        self.store = StateStore(
            data_dir=Path(self.config.data_dir) if self.config.data_dir else None,
            clock=self.clock,
            trip_status=self.directory.trip_status,
            position_sink=self.geo.upsert_position,
        )
        self.cache = TtlCache(clock=self.clock)
        self.broker = Broker()
        self.engine = PropertyEngine(
            store=self.store,
            exposure_lookup=self._exposed_properties,
            clock=self.clock,
            workers=self.config.deferred_workers,
        )
        self.engine.register_builtin_handlers()
        self.router = ActionRouter(
            broker=self.broker,
            cache=self.cache,
            directory=self.directory,
            clock=self.clock,
            topic_cache_ttl=self.config.topic_cache_ttl_s,
            default_timeout=self.config.action_timeout_s,
        )
        self._tokens: dict[str, str] = {}  # bearer token -> user_id
        self._lock = threading.Lock()
        self._sweeper: Optional[threading.Thread] = None
        self._stopping = False

    # -- background deadline sweeper (real-clock deployments) -------------

    def start_sweeper(self, period: float = 0.05) -> None:
        if self._sweeper is not None:
            return

        def loop():
            while not self._stopping:
                self.router.expire_due()
                time.sleep(period)

        self._sweeper = threading.Thread(target=loop, daemon=True)
        self._sweeper.start()

    def shutdown(self) -> None:
        self._stopping = True
        self.engine.shutdown()

    # -- auth ----------------------------------------------------------------

    def authenticate(self, token: Optional[str]) -> str:
        with self._lock:
            user_id = self._tokens.get(token or "")
        if user_id is None:
            raise Unauthorized("missing or invalid token")
        return user_id

    def _require_owner(self, user_id: str, trip_id: str):
        trip = self.directory.get_trip(trip_id)
        vehicle = self.directory.get_vehicle(trip.vehicle)
        if vehicle.owner != user_id:
            raise Unauthorized(f"trip {trip_id} is not owned by the caller")
        return trip

    def _exposed_properties(self, trip_id: str) -> frozenset[str]:
        trip = self.directory.get_trip(trip_id)
        return self.directory.get_vehicle(trip.vehicle).exposed_properties

    # -- the six request types -------------------------------------------

    def register(
        self,
        display_name: str,
        credential: str,
        vehicle: dict,
    ) -> dict:
        user = UserAccount(
            user_id=uuid.uuid4().hex, credential=credential, display_name=display_name
        )
        profile = VehicleProfile(
            vehicle_id=uuid.uuid4().hex,
            owner=user.user_id,
            model=str(vehicle["model"]),
            year=int(vehicle["year"]),
            plate_number=str(vehicle["plate_number"]),
            color=str(vehicle["color"]),
            exposed_properties=frozenset(vehicle.get("exposed_properties", ())),
            exposed_actions=frozenset(vehicle.get("exposed_actions", ())),
        )
        self.directory.add_user(user)
        self.directory.add_vehicle(profile)
        token = secrets.token_urlsafe(24)
        with self._lock:
            self._tokens[token] = user.user_id
        return {"token": token, "vehicle_id": profile.vehicle_id}

    def start_trip(self, user_id: str, vehicle_id: str) -> dict:
        vehicle = self.directory.get_vehicle(vehicle_id)
        if vehicle.owner != user_id:
            raise Unauthorized(f"vehicle {vehicle_id} is not owned by the caller")
        trip = self.directory.start_trip(uuid.uuid4().hex, vehicle_id)
        self.broker.declare_topic(trip.listen_topic)
        self.broker.declare_topic(trip.send_topic)
        return {
            "trip_id": trip.trip_id,
            "listen_topic": trip.listen_topic,
            "send_topic": trip.send_topic,
        }

    def post_state(self, user_id: str, trip_id: str, body: dict) -> dict:
        self._require_owner(user_id, trip_id)
        body = dict(body)
        body["trip"] = trip_id
        body["recorded_at"] = domain.ts_to_str(self.clock.now())
        record = StateRecord.from_dict(body)
        self.store.append_state(record)
        return {"seq": record.seq}

    def get_neighbors(
        self,
        user_id: str,
        trip_id: str,
        radius: Optional[float] = None,
        max_age: Optional[float] = None,
    ) -> list[NeighborInfo]:
        self._require_owner(user_id, trip_id)
        radius = self.config.default_radius_m if radius is None else float(radius)
        max_age = self.config.default_max_age_s if max_age is None else float(max_age)
        candidates = self.geo.neighbors(trip_id, radius, max_age, self.clock.now())
        out = []
        for c in candidates:
            trip = self.directory.get_trip(c.trip)
            vehicle = self.directory.get_vehicle(trip.vehicle)
            out.append(
                NeighborInfo(
                    trip=c.trip,
                    vehicle_description={
                        "model": vehicle.model,
                        "year": vehicle.year,
                        "color": vehicle.color,
                    },
                    location=c.location,
                    distance=c.distance,
                    requestable_properties=vehicle.exposed_properties,
                    requestable_actions=vehicle.exposed_actions,
                )
            )
        return out

    def request_property(
        self, user_id: str, trip_id: str, target_trip: str, prop: str, params: Any = None
    ) -> dict:
        self._require_owner(user_id, trip_id)
        if not self.directory.is_active(trip_id):
            raise domain.TripNotActive(f"trip {trip_id} is not active")
        if not self.directory.is_active(target_trip):
            raise NoTopic(f"no active trip {target_trip}")
        req = PropertyRequest(
            requester_trip=trip_id, target_trip=target_trip, property=prop, params=params
        )
        result = self.engine.handle_property(req)
        return result.to_dict()

    def request_action(
        self,
        user_id: str,
        trip_id: str,
        target_trip: str,
        action: str,
        payload: Any,
        timeout: Optional[float] = None,
    ) -> dict:
        trip = self._require_owner(user_id, trip_id)
        if not self.directory.is_active(trip_id):
            raise domain.TripNotActive(f"trip {trip_id} is not active")
        req = ActionRequest(
            requester_trip=trip_id,
            target_trip=target_trip,
            action=action,
            payload=payload,
            timeout=self.config.action_timeout_s if timeout is None else float(timeout),
        )
        correlation_id = self.router.dispatch_action(req)
        return {"correlation_id": correlation_id}

    def respond_action(
        self, user_id: str, trip_id: str, correlation_id: str, action: str, payload: Any
    ) -> dict:
        """Answer an action previously delivered to this trip's listen topic."""
        trip = self._require_owner(user_id, trip_id)
        response = Envelope(
            topic=trip.send_topic,
            correlation_id=correlation_id,
            kind="action_response",
            action=action,
            payload=payload,
            published_at=self.clock.now(),
        )
        self.router.complete_action(response)
        return {"forwarded": True}

    def complete_trip(self, user_id: str, trip_id: str) -> dict:
        trip = self._require_owner(user_id, trip_id)
        done = self.directory.complete_trip(trip_id)
        self.router.evict_topic(trip_id)
        self.geo.evict(trip_id)
        self.broker.remove_topic(done.listen_topic)
        self.broker.remove_topic(done.send_topic)
        return {"status": done.status.value}

    def subscribe_listen(self, user_id: str, trip_id: str):
        trip = self._require_owner(user_id, trip_id)
        return self.broker.subscribe(trip.listen_topic)


# ---------------------------------------------------------------------------
# HTTP layer


STATUS_BY_ERROR: list[tuple[type, int]] = [
    (Unauthorized, 401),
    (PermissionDenied, 403),
    (NoData, 404),
    (NoHandler, 404),
    (UnknownTask, 404),
    (NotFound, 404),
    # Everything else in the 400 class, matching the two-exit-code scheme.
    (RucsError, 400),
]


def status_for(error: RucsError) -> int:
    for cls, status in STATUS_BY_ERROR:
        if isinstance(error, cls):
            return status
    return 400


def create_app(core: ServiceCore) -> FastAPI:
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app):
        # Streaming connections hold worker threads; keep headroom.
        from anyio import to_thread

        to_thread.current_default_thread_limiter().total_tokens = 160
        yield

    app = FastAPI(title="rucs", lifespan=lifespan)
    app.state.core = core

    @app.middleware("http")
    async def timing(request: Request, call_next):
        start = time.perf_counter()
        if core.config.inject_sleep_ms > 0:
            time.sleep(core.config.inject_sleep_ms / 1000.0)
        response = await call_next(request)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        response.headers["X-Processing-Time-Ms"] = f"{elapsed_ms:.3f}"
        return response

    @app.exception_handler(RucsError)
    async def rucs_error_handler(request: Request, exc: RucsError):
        return JSONResponse(
            status_code=status_for(exc), content={"error": exc.code, "detail": str(exc)}
        )

    def bearer(request: Request) -> str:
        header = request.headers.get("authorization", "")
        token = header.removeprefix("Bearer ").strip() if header else ""
        return core.authenticate(token)

    async def body_of(request: Request) -> dict:
        try:
            data = await request.json()
        except Exception:
            raise RucsError("malformed JSON body")
        if not isinstance(data, dict):
            raise RucsError("body must be a JSON object")
        return data

    @app.post("/api/register")
    async def register(request: Request):
        body = await body_of(request)
        try:
            return core.register(
                display_name=str(body["display_name"]),
                credential=str(body["credential"]),
                vehicle=dict(body["vehicle"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"bad registration body: {e}") from e

    @app.post("/api/trips")
    async def start_trip(request: Request):
        user_id = bearer(request)
        body = await body_of(request)
        try:
            vehicle_id = str(body["vehicle_id"])
        except KeyError as e:
            raise ValidationError(f"missing field {e}") from e
        return core.start_trip(user_id, vehicle_id)

    @app.post("/api/trips/{trip_id}/state")
    async def post_state(trip_id: str, request: Request):
        user_id = bearer(request)
        body = await body_of(request)
        return core.post_state(user_id, trip_id, body)

    @app.get("/api/trips/{trip_id}/neighbors")
    async def get_neighbors(
        trip_id: str,
        request: Request,
        radius: Optional[float] = None,
        max_age: Optional[float] = None,
    ):
        user_id = bearer(request)
        neighbors = core.get_neighbors(user_id, trip_id, radius, max_age)
        return {"neighbors": [n.to_dict() for n in neighbors]}

    @app.post("/api/trips/{trip_id}/requests/property")
    async def request_property(trip_id: str, request: Request):
        user_id = bearer(request)
        body = await body_of(request)
        try:
            target = str(body["target_trip"])
            prop = str(body["property"])
        except KeyError as e:
            raise ValidationError(f"missing field {e}") from e
        return core.request_property(user_id, trip_id, target, prop, body.get("params"))

    @app.post("/api/trips/{trip_id}/requests/action")
    async def request_action(trip_id: str, request: Request):
        user_id = bearer(request)
        body = await body_of(request)
        try:
            target = str(body["target_trip"])
            action = str(body["action"])
        except KeyError as e:
            raise ValidationError(f"missing field {e}") from e
        return core.request_action(
            user_id, trip_id, target, action, body.get("payload"), body.get("timeout")
        )

    @app.post("/api/trips/{trip_id}/respond")
    async def respond_action(trip_id: str, request: Request):
        user_id = bearer(request)
        body = await body_of(request)
        try:
            correlation_id = str(body["correlation_id"])
            action = str(body["action"])
        except KeyError as e:
            raise ValidationError(f"missing field {e}") from e
        return core.respond_action(user_id, trip_id, correlation_id, action, body.get("payload"))

    @app.post("/api/trips/{trip_id}/complete")
    async def complete_trip(trip_id: str, request: Request):
        user_id = bearer(request)
        return core.complete_trip(user_id, trip_id)

    @app.get("/api/trips/{trip_id}/listen")
    async def listen(trip_id: str, request: Request):
        user_id = bearer(request)
        sub = core.subscribe_listen(user_id, trip_id)

        def frames():
            try:
                while True:
                    env = sub.get(timeout=0.5)
                    if env is not None:
                        yield domain.encode(env.to_dict()) + "\n"
                    elif sub.closed:
                        return
            finally:
                core.broker.unsubscribe(sub)

        return StreamingResponse(frames(), media_type="application/x-ndjson")

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    return app


def serve(config: Config, in_thread: bool = False):
    """Run the service on the loopback interface."""
    import uvicorn

    core = ServiceCore(config)
    core.start_sweeper()
    app = create_app(core)
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=config.port, log_level="warning")
    )
    if in_thread:
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        return core, server, thread
    server.run()
    return core, server, None


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="rucs-serve", description="Run the RUCS service")
    parser.add_argument("--config", help="path to JSON config (RUCS_CONFIG overrides)")
    parser.add_argument("--port", type=int, help="override the configured port")
    args = parser.parse_args(argv)
    config = Config.load(args.config)
    if args.port is not None:
        config.port = args.port
    serve(config)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
