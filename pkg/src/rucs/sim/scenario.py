"""Scenario configuration: vehicles, cadences, and scripted requests."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from ..domain import RucsError
from .traces import TracePoint, field_test_traces, read_trace


class ScenarioInvalid(RucsError):
    code = "scenario_invalid"


@dataclass
class VehicleSpec:
    label: str
    trace: list[TracePoint]
    role: str = "manual"  # "autonomous" | "manual"
    drowsiness: Optional[str] = None  # constant level reported in driver state
    exposed_properties: list[str] = field(default_factory=list)
    exposed_actions: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "role": self.role,
            "drowsiness": self.drowsiness,
            "exposed_properties": list(self.exposed_properties),
            "exposed_actions": list(self.exposed_actions),
            "trace": [[p.t_s, p.lat, p.lon, p.speed_mps, p.heading_deg] for p in self.trace],
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "VehicleSpec":
        if "trace" in d and isinstance(d["trace"], list):
            trace = [TracePoint(*row) for row in d["trace"]]
        elif "trace_file" in d:
            path = Path(d["trace_file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            trace = read_trace(path)
        else:
            raise ScenarioInvalid(f"vehicle {d.get('label')!r} has no trace")
        return cls(
            label=d["label"],
            trace=trace,
            role=d.get("role", "manual"),
            drowsiness=d.get("drowsiness"),
            exposed_properties=list(d.get("exposed_properties", ())),
            exposed_actions=list(d.get("exposed_actions", ())),
        )


@dataclass
class RequestSpec:
    vehicle: str  # requesting vehicle label
    kind: str  # "property" | "action"
    name: str
    target: str  # target vehicle label
    trigger: Any = "first_neighbor"  # or {"at_s": seconds}
    payload: Any = None
    decide_lane_change: bool = False
    then_action: Optional[str] = None  # follow-up action after a property result

    def to_dict(self) -> dict:
        return {
            "vehicle": self.vehicle,
            "kind": self.kind,
            "name": self.name,
            "target": self.target,
            "trigger": self.trigger,
            "payload": self.payload,
            "decide_lane_change": self.decide_lane_change,
            "then_action": self.then_action,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RequestSpec":
        return cls(
            vehicle=d["vehicle"],
            kind=d["kind"],
            name=d["name"],
            target=d["target"],
            trigger=d.get("trigger", "first_neighbor"),
            payload=d.get("payload"),
            decide_lane_change=bool(d.get("decide_lane_change", False)),
            then_action=d.get("then_action"),
        )


@dataclass
class ScenarioConfig:
    name: str
    vehicles: list[VehicleSpec]
    requests: list[RequestSpec] = field(default_factory=list)
    duration_s: float = 10.0
    state_period_s: float = 0.5
    neighbor_period_s: float = 1.0
    radius_m: Optional[float] = None
    max_age_s: Optional[float] = None
    # Network latency injection: a model of the cellular link, not a
    # reproduction of it. The "4g" profile is 100 ms +/- 40 ms.
    latency_fixed_ms: float = 0.0
    latency_jitter_ms: float = 0.0
    analysis_speed_mps: float = 50.0 / 3.6

    def validate(self) -> None:
        if not self.vehicles:
            raise ScenarioInvalid("scenario needs at least one vehicle")
        if self.state_period_s <= 0 or self.neighbor_period_s <= 0:
            raise ScenarioInvalid("periods must be positive")
        if self.duration_s <= 0:
            raise ScenarioInvalid("duration must be positive")
        labels = {v.label for v in self.vehicles}
        if len(labels) != len(self.vehicles):
            raise ScenarioInvalid("duplicate vehicle labels")
        for r in self.requests:
            if r.vehicle not in labels or r.target not in labels:
                raise ScenarioInvalid(f"request references unknown vehicle: {r}")

    def with_4g_profile(self) -> "ScenarioConfig":
        self.latency_fixed_ms = 100.0
        self.latency_jitter_ms = 40.0
        return self

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "vehicles": [v.to_dict() for v in self.vehicles],
            "requests": [r.to_dict() for r in self.requests],
            "duration_s": self.duration_s,
            "state_period_s": self.state_period_s,
            "neighbor_period_s": self.neighbor_period_s,
            "radius_m": self.radius_m,
            "max_age_s": self.max_age_s,
            "latency_fixed_ms": self.latency_fixed_ms,
            "latency_jitter_ms": self.latency_jitter_ms,
            "analysis_speed_mps": self.analysis_speed_mps,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "ScenarioConfig":
        cfg = cls(
            name=d.get("name", "custom"),
            vehicles=[VehicleSpec.from_dict(v, base_dir) for v in d.get("vehicles", ())],
            requests=[RequestSpec.from_dict(r) for r in d.get("requests", ())],
            duration_s=float(d.get("duration_s", 10.0)),
            state_period_s=float(d.get("state_period_s", 0.5)),
            neighbor_period_s=float(d.get("neighbor_period_s", 1.0)),
            radius_m=d.get("radius_m"),
            max_age_s=d.get("max_age_s"),
            latency_fixed_ms=float(d.get("latency_fixed_ms", 0.0)),
            latency_jitter_ms=float(d.get("latency_jitter_ms", 0.0)),
            analysis_speed_mps=float(d.get("analysis_speed_mps", 50.0 / 3.6)),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: Path) -> "ScenarioConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), base_dir=path.parent)


def field_test_scenario(duration_s: float = 10.0) -> ScenarioConfig:
    """Two vehicles, drowsiness-before-lane-change narrative."""
    traces = field_test_traces(duration_s=duration_s)
    cfg = ScenarioConfig(
        name="field-test",
        vehicles=[
            VehicleSpec(
                label="vehicle_a",
                trace=traces["vehicle_a"],
                role="autonomous",
                exposed_properties=["automation_level"],
                exposed_actions=[],
            ),
            VehicleSpec(
                label="vehicle_b",
                trace=traces["vehicle_b"],
                role="manual",
                drowsiness="low",
                exposed_properties=["drowsiness"],
                exposed_actions=["yield_request"],
            ),
        ],
        requests=[
            RequestSpec(
                vehicle="vehicle_a",
                kind="property",
                name="drowsiness",
                target="vehicle_b",
                trigger="first_neighbor",
                decide_lane_change=True,
                then_action="yield_request",
            )
        ],
        duration_s=duration_s,
    )
    cfg.validate()
    return cfg


def load_scenario(ref: str) -> ScenarioConfig:
    """Resolve a scenario by preset name or config-file path."""
    if ref == "field-test":
        return field_test_scenario()
    path = Path(ref)
    if not path.exists():
        raise ScenarioInvalid(f"unknown scenario {ref!r} (not a preset, not a file)")
    return ScenarioConfig.from_file(path)
