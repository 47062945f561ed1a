"""HTTP client used by simulated vehicles, with latency sampling and an
optional injected network delay (fixed + jitter) modeling the cellular link."""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Optional

import requests

from ..domain import RucsError, ts_to_str


class ClientError(RucsError):
    code = "client_error"

    def __init__(self, status: int, body: Any):
        super().__init__(f"HTTP {status}: {body}")
        self.status = status
        self.body = body


@dataclass(frozen=True)
class LatencySample:
    request_kind: str  # neighbors | state | property | action
    sent_at: float
    received_at: float
    rtt: float
    server_processing: float
    vehicle: str

    def to_dict(self) -> dict:
        return {
            "request_kind": self.request_kind,
            "sent_at": ts_to_str(self.sent_at),
            "received_at": ts_to_str(self.received_at),
            "rtt": self.rtt,
            "server_processing": self.server_processing,
            "vehicle": self.vehicle,
        }


class VehicleClient:
    """One simulated vehicle's connection to the service."""

    def __init__(
        self,
        base_url: str,
        label: str,
        rng: Optional[random.Random] = None,
        latency_fixed_ms: float = 0.0,
        latency_jitter_ms: float = 0.0,
        on_sample: Optional[Callable[[LatencySample], None]] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.label = label
        self._rng = rng or random.Random()
        self._fixed = latency_fixed_ms / 1000.0
        self._jitter = latency_jitter_ms / 1000.0
        self._on_sample = on_sample
        self._session = requests.Session()
        self.token: Optional[str] = None
        self.trip_id: Optional[str] = None
        self._listener: Optional[threading.Thread] = None
        self._listen_response = None

    # -- plumbing ----------------------------------------------------------

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self.token}"} if self.token else {}

    def _inject_delay(self) -> None:
        if self._fixed <= 0 and self._jitter <= 0:
            return
        delay = self._fixed + self._rng.uniform(-self._jitter, self._jitter)
        if delay > 0:
            time.sleep(delay)

    def _call(
        self,
        kind: Optional[str],
        method: str,
        path: str,
        body: Any = None,
        params: Optional[dict] = None,
    ) -> Any:
        sent_at = time.time()
        self._inject_delay()  # modeled uplink delay counts toward the RTT
        resp = self._session.request(
            method,
            self.base_url + path,
            json=body,
            params=params,
            headers=self._headers(),
            timeout=30,
        )
        received_at = time.time()
        if kind is not None and self._on_sample is not None:
            processing = float(resp.headers.get("X-Processing-Time-Ms", "0")) / 1000.0
            self._on_sample(
                LatencySample(
                    request_kind=kind,
                    sent_at=sent_at,
                    received_at=received_at,
                    rtt=received_at - sent_at,
                    server_processing=processing,
                    vehicle=self.label,
                )
            )
        try:
            payload = resp.json()
        except ValueError:
            payload = resp.text
        if resp.status_code >= 400:
            raise ClientError(resp.status_code, payload)
        return payload

    # -- the service surface ------------------------------------------------

    def register(self, display_name: str, credential: str, vehicle: dict) -> dict:
        out = self._call(
            None,
            "POST",
            "/api/register",
            {"display_name": display_name, "credential": credential, "vehicle": vehicle},
        )
        self.token = out["token"]
        self.vehicle_id = out["vehicle_id"]
        return out

    def start_trip(self) -> dict:
        out = self._call(None, "POST", "/api/trips", {"vehicle_id": self.vehicle_id})
        self.trip_id = out["trip_id"]
        return out

    def post_state(self, body: dict) -> dict:
        return self._call("state", "POST", f"/api/trips/{self.trip_id}/state", body)

    def neighbors(self, radius: Optional[float] = None, max_age: Optional[float] = None) -> list:
        params = {}
        if radius is not None:
            params["radius"] = radius
        if max_age is not None:
            params["max_age"] = max_age
        out = self._call(
            "neighbors", "GET", f"/api/trips/{self.trip_id}/neighbors", params=params
        )
        return out["neighbors"]

    def request_property(self, target_trip: str, prop: str, params: Any = None) -> dict:
        return self._call(
            "property",
            "POST",
            f"/api/trips/{self.trip_id}/requests/property",
            {"target_trip": target_trip, "property": prop, "params": params},
        )

    def request_action(
        self, target_trip: str, action: str, payload: Any = None, timeout: Optional[float] = None
    ) -> dict:
        body: dict = {"target_trip": target_trip, "action": action, "payload": payload}
        if timeout is not None:
            body["timeout"] = timeout
        return self._call(
            "action", "POST", f"/api/trips/{self.trip_id}/requests/action", body
        )

    def respond_action(self, correlation_id: str, action: str, payload: Any) -> dict:
        return self._call(
            None,
            "POST",
            f"/api/trips/{self.trip_id}/respond",
            {"correlation_id": correlation_id, "action": action, "payload": payload},
        )

    def complete_trip(self) -> dict:
        return self._call(None, "POST", f"/api/trips/{self.trip_id}/complete")

    # -- listen-topic stream -------------------------------------------------

    def start_listener(self, on_envelope: Callable[[dict], None]) -> None:
        """Consume the trip's listen topic on a background thread."""

        def loop():
            try:
                resp = self._session.get(
                    self.base_url + f"/api/trips/{self.trip_id}/listen",
                    headers=self._headers(),
                    stream=True,
                    timeout=(5, None),
                )
                self._listen_response = resp
                for line in resp.iter_lines():
                    if line:
                        on_envelope(json.loads(line))
            except Exception:
                pass  # stream torn down at trip completion

        self._listener = threading.Thread(target=loop, daemon=True)
        self._listener.start()

    def stop_listener(self) -> None:
        if self._listen_response is not None:
            try:
                self._listen_response.close()
            except Exception:
                pass
        if self._listener is not None:
            self._listener.join(timeout=2)
