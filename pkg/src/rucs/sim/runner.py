"""Scenario execution: each vehicle is an independent client thread; a
single collector serializes all log writing into the run directory."""

from __future__ import annotations

import json
import random
import threading
import time
import uuid
import zlib
from pathlib import Path
from typing import Any, Optional

import requests

from ..domain import RucsError, encode
from .client import ClientError, LatencySample, VehicleClient
from .decision import lane_change_decision
from .scenario import RequestSpec, ScenarioConfig, VehicleSpec
from .traces import point_at, write_trace


class ServiceUnreachable(RucsError):
    code = "service_unreachable"


class Collector:
    """Thread-safe sink for samples, events, and counts."""

    def __init__(self):
        self._lock = threading.Lock()
        self.samples: list[LatencySample] = []
        self.events: list[dict] = []
        self.errors = 0
        self.sequences: dict[str, list[str]] = {}

    def add_sample(self, sample: LatencySample) -> None:
        with self._lock:
            self.samples.append(sample)
            self.sequences.setdefault(sample.vehicle, []).append(sample.request_kind)

    def add_event(self, event: dict) -> None:
        with self._lock:
            self.events.append(dict(event))

    def add_error(self) -> None:
        with self._lock:
            self.errors += 1

    def counts(self) -> dict:
        with self._lock:
            by_kind = {"neighbors": 0, "state": 0, "property": 0, "action": 0}
            for s in self.samples:
                by_kind[s.request_kind] = by_kind.get(s.request_kind, 0) + 1
        return {
            "neighbor_requests": by_kind["neighbors"],
            "state_messages": by_kind["state"],
            "property_requests": by_kind["property"],
            "action_requests": by_kind["action"],
            "request_errors": self.errors,
        }


class VehicleSim(threading.Thread):
    def __init__(
        self,
        spec: VehicleSpec,
        config: ScenarioConfig,
        service_url: str,
        seed: int,
        collector: Collector,
        barrier: threading.Barrier,
        trip_ids: dict[str, str],
        requests_for_me: list[RequestSpec],
    ):
        super().__init__(daemon=True)
        self.spec = spec
        self.config = config
        self.collector = collector
        self.barrier = barrier
        self.trip_ids = trip_ids
        self.requests_for_me = requests_for_me
        self.failure: Optional[Exception] = None
        self.client = VehicleClient(
            service_url,
            spec.label,
            rng=random.Random(zlib.crc32(f"{seed}:{spec.label}".encode())),
            latency_fixed_ms=config.latency_fixed_ms,
            latency_jitter_ms=config.latency_jitter_ms,
            on_sample=collector.add_sample,
        )
        self._seq = 0
        self._fired: set[int] = set()

    # -- state assembly ------------------------------------------------------

    def _state_body(self, t: float) -> dict:
        p = point_at(self.spec.trace, t)
        self._seq += 1
        body: dict[str, Any] = {
            "seq": self._seq,
            "location": {
                "latitude": p.lat,
                "longitude": p.lon,
                "speed": p.speed_mps,
                "heading": p.heading_deg,
            },
            "control": {
                "automation_level": "autonomous"
                if self.spec.role == "autonomous"
                else "manual"
            },
        }
        if self.spec.drowsiness is not None:
            body["driver"] = {
                "drowsiness": self.spec.drowsiness,
                "measured_at": _now_rfc3339(),
            }
        return body

    def _on_envelope(self, env: dict) -> None:
        self.collector.add_event(
            {"type": "envelope_received", "vehicle": self.spec.label, "envelope": env}
        )
        if env.get("kind") == "action_request":
            try:
                self.client.respond_action(
                    env["correlation_id"], env["action"], {"result": "accept"}
                )
                self.collector.add_event(
                    {
                        "type": "action_accepted",
                        "vehicle": self.spec.label,
                        "action": env["action"],
                        "correlation_id": env["correlation_id"],
                    }
                )
            except ClientError:
                self.collector.add_error()

    # -- scripted requests -----------------------------------------------

    def _maybe_fire_requests(self, t: float, neighbor_trips: set[str]) -> None:
        for i, req in enumerate(self.requests_for_me):
            if i in self._fired:
                continue
            target_trip = self.trip_ids.get(req.target)
            if target_trip is None:
                continue
            if req.trigger == "first_neighbor":
                ready = target_trip in neighbor_trips
            elif isinstance(req.trigger, dict) and "at_s" in req.trigger:
                ready = t >= float(req.trigger["at_s"]) and target_trip in neighbor_trips
            else:
                ready = target_trip in neighbor_trips
            if not ready:
                continue
            self._fired.add(i)
            self._fire(req, target_trip)

    def _fire(self, req: RequestSpec, target_trip: str) -> None:
        try:
            if req.kind == "property":
                result = self.client.request_property(target_trip, req.name, req.payload)
                self.collector.add_event(
                    {
                        "type": "property_result",
                        "vehicle": self.spec.label,
                        "target": req.target,
                        "property": req.name,
                        "result": result,
                    }
                )
                if req.decide_lane_change:
                    decision = lane_change_decision(result.get("value"))
                    self.collector.add_event(
                        {
                            "type": "lane_change_decision",
                            "vehicle": self.spec.label,
                            "decision": decision,
                        }
                    )
                    if req.then_action and decision == "change_ahead":
                        out = self.client.request_action(target_trip, req.then_action)
                        self.collector.add_event(
                            {
                                "type": "action_dispatched",
                                "vehicle": self.spec.label,
                                "target": req.target,
                                "action": req.then_action,
                                "correlation_id": out["correlation_id"],
                            }
                        )
            elif req.kind == "action":
                out = self.client.request_action(target_trip, req.name, req.payload)
                self.collector.add_event(
                    {
                        "type": "action_dispatched",
                        "vehicle": self.spec.label,
                        "target": req.target,
                        "action": req.name,
                        "correlation_id": out["correlation_id"],
                    }
                )
        except ClientError as e:
            self.collector.add_error()
            self.collector.add_event(
                {
                    "type": "request_failed",
                    "vehicle": self.spec.label,
                    "request": req.to_dict(),
                    "error": str(e),
                }
            )

    # -- main loop ----------------------------------------------------------

    def run(self) -> None:
        try:
            self.client.register(
                display_name=self.spec.label,
                credential=uuid.uuid4().hex,
                vehicle={
                    "model": f"sim {self.spec.role}",
                    "year": 2021,
                    "plate_number": f"{self.spec.label}-{uuid.uuid4().hex[:8]}",
                    "color": "white" if self.spec.role == "autonomous" else "blue",
                    "exposed_properties": self.spec.exposed_properties,
                    "exposed_actions": self.spec.exposed_actions,
                },
            )
            self.client.start_trip()
            self.trip_ids[self.spec.label] = self.client.trip_id
            self.client.post_state(self._state_body(0.0))  # seq 1 before the barrier
            self.client.start_listener(self._on_envelope)
            self.barrier.wait(timeout=30)

            # Precomputed tick schedule keeps the request sequence
            # deterministic across runs.
            events: list[tuple[float, int]] = []
            k = 1
            while k * self.config.state_period_s <= self.config.duration_s:
                events.append((k * self.config.state_period_s, 0))
                k += 1
            k = 0
            while k * self.config.neighbor_period_s <= self.config.duration_s:
                events.append((k * self.config.neighbor_period_s, 1))
                k += 1
            events.sort()

            start = time.monotonic()
            for t, what in events:
                delay = start + t - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                try:
                    if what == 0:
                        self.client.post_state(self._state_body(t))
                    else:
                        neighbors = self.client.neighbors(
                            radius=self.config.radius_m, max_age=self.config.max_age_s
                        )
                        self._maybe_fire_requests(t, {n["trip"] for n in neighbors})
                except ClientError:
                    self.collector.add_error()

            self.client.complete_trip()
            self.client.stop_listener()
        except Exception as e:  # surfaced by the coordinator
            self.failure = e


def _now_rfc3339() -> str:
    from ..domain import ts_to_str

    return ts_to_str(time.time())


def run_scenario(
    config: ScenarioConfig, service_url: str, seed: int = 0, out_dir: Path = Path("run")
) -> Path:
    """Execute the scenario; returns the run directory with all logs."""
    config.validate()

    try:
        resp = requests.get(service_url.rstrip("/") + "/api/health", timeout=3)
        resp.raise_for_status()
    except Exception as e:
        raise ServiceUnreachable(f"service at {service_url} not reachable: {e}") from e

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "scenario.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    (out_dir / "seed.txt").write_text(str(seed), encoding="utf-8")
    traces_dir = out_dir / "traces"
    for spec in config.vehicles:
        write_trace(spec.trace, traces_dir / f"{spec.label}.csv")

    collector = Collector()
    trip_ids: dict[str, str] = {}
    barrier = threading.Barrier(len(config.vehicles))
    sims = [
        VehicleSim(
            spec=spec,
            config=config,
            service_url=service_url,
            seed=seed,
            collector=collector,
            barrier=barrier,
            trip_ids=trip_ids,
            requests_for_me=[r for r in config.requests if r.vehicle == spec.label],
        )
        for spec in config.vehicles
    ]
    for sim in sims:
        sim.start()
    for sim in sims:
        sim.join(timeout=config.duration_s + 60)
    failures = [s.failure for s in sims if s.failure is not None]
    if failures:
        raise failures[0]

    with (out_dir / "latency.jsonl").open("w", encoding="utf-8") as f:
        for sample in collector.samples:
            f.write(encode(sample.to_dict()) + "\n")
    with (out_dir / "events.jsonl").open("w", encoding="utf-8") as f:
        for event in collector.events:
            f.write(json.dumps(event, sort_keys=True) + "\n")
    (out_dir / "counts.json").write_text(
        json.dumps(collector.counts(), indent=2, sort_keys=True), encoding="utf-8"
    )
    (out_dir / "request_sequences.json").write_text(
        json.dumps(collector.sequences, indent=2, sort_keys=True), encoding="utf-8"
    )
    return out_dir
