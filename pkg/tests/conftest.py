import socket
import time

import pytest

from rucs.clock import FakeClock
from rucs.service import Config, ServiceCore, create_app


def make_core(data_dir=None, clock=None, **config_overrides) -> ServiceCore:
    config = Config(data_dir=str(data_dir) if data_dir else "", **config_overrides)
    return ServiceCore(config, clock=clock)


def register_vehicle(
    core,
    name="driver",
    plate=None,
    exposed_properties=("drowsiness", "automation_level"),
    exposed_actions=("yield_request",),
):
    """Register an account + vehicle and start a trip; returns a dict of ids."""
    out = core.register(
        display_name=name,
        credential=f"secret-{name}",
        vehicle={
            "model": "research vehicle",
            "year": 2021,
            "plate_number": plate or f"plate-{name}",
            "color": "white",
            "exposed_properties": list(exposed_properties),
            "exposed_actions": list(exposed_actions),
        },
    )
    user_id = core.authenticate(out["token"])
    trip = core.start_trip(user_id, out["vehicle_id"])
    return {
        "token": out["token"],
        "user_id": user_id,
        "vehicle_id": out["vehicle_id"],
        **trip,
    }


def location(lat=48.19, lon=14.11, speed=13.9, heading=90.0) -> dict:
    return {"latitude": lat, "longitude": lon, "speed": speed, "heading": heading}


def state_body(seq, lat=48.19, lon=14.11, speed=13.9, heading=90.0, drowsiness=None, control=None):
    body = {"seq": seq, "location": location(lat, lon, speed, heading)}
    if drowsiness is not None:
        body["driver"] = {"drowsiness": drowsiness, "measured_at": "2026-08-23T00:00:00.000+00:00"}
    if control is not None:
        body["control"] = control
    return body


@pytest.fixture
def fake_clock():
    return FakeClock()


@pytest.fixture
def core(fake_clock, tmp_path):
    c = make_core(data_dir=tmp_path / "data", clock=fake_clock)
    yield c
    c.shutdown()


@pytest.fixture
def rt_core():
    """Core on the system clock, for API/threading tests."""
    c = make_core()
    c.start_sweeper()
    yield c
    c.shutdown()


@pytest.fixture
def api(rt_core):
    from fastapi.testclient import TestClient

    with TestClient(create_app(rt_core), raise_server_exceptions=False) as client:
        yield client


class LiveServer:
    """uvicorn on an ephemeral loopback port, shared helper for tests that
    need a real HTTP endpoint (streams, the harness)."""

    def __init__(self, **config_overrides):
        import uvicorn

        config_overrides.setdefault("data_dir", "")
        self.config = Config(port=0, **config_overrides)
        self.core = ServiceCore(self.config)
        self.core.start_sweeper()
        app = create_app(self.core)
        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        )
        import threading

        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self._thread.start()
        deadline = time.time() + 15
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server failed to start")
            time.sleep(0.02)
        self.port = self._server.servers[0].sockets[0].getsockname()[1]
        self.url = f"http://127.0.0.1:{self.port}"

    def stop(self):
        self._server.should_exit = True
        self._thread.join(timeout=10)
        self.core.shutdown()


@pytest.fixture
def live_server():
    server = LiveServer()
    yield server
    server.stop()


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]
