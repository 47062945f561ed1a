"""Core domain types, catalogs, and validation shared by every service module.

All values are immutable after construction and carry a canonical JSON
encoding: snake_case field names, RFC-3339 UTC timestamps with millisecond
precision, enums as lowercase strings. Absent optional components are
omitted from the encoding.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Optional


# ---------------------------------------------------------------------------
# Errors


class RucsError(Exception):
    """Base for all service-level errors."""

    code = "error"


class ValidationError(RucsError):
    code = "validation_error"


class MissingLocation(ValidationError):
    code = "missing_location"


class RangeViolation(ValidationError):
    code = "range_violation"


class SequenceRegression(ValidationError):
    code = "sequence_regression"


class TripNotActive(RucsError):
    code = "trip_not_active"


class TripAlreadyActive(RucsError):
    code = "trip_already_active"


class NotFound(RucsError):
    code = "not_found"


class NoData(RucsError):
    code = "no_data"


class PermissionDenied(RucsError):
    code = "permission_denied"


class Unauthorized(RucsError):
    code = "unauthorized"


class DuplicatePlate(RucsError):
    code = "duplicate_plate"


class InvalidExposure(RucsError):
    code = "invalid_exposure"


class InvalidTimeout(RucsError):
    code = "invalid_timeout"


# ---------------------------------------------------------------------------
# Timestamps (floats are epoch seconds; wire format is RFC-3339, ms precision)


def ts_to_str(ts: float) -> str:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return dt.isoformat(timespec="milliseconds")


def str_to_ts(s: str) -> float:
    return datetime.fromisoformat(s).timestamp()


# ---------------------------------------------------------------------------
# Enums


class TripStatus(str, Enum):
    ACTIVE = "active"
    COMPLETED = "completed"


class AutomationLevel(str, Enum):
    MANUAL = "manual"
    ASSISTED = "assisted"
    AUTONOMOUS = "autonomous"


class LaneChangeIntent(str, Enum):
    NONE = "none"
    LEFT = "left"
    RIGHT = "right"


class Drowsiness(str, Enum):
    NONE = "none"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


#: Mapping from the 4-level drowsiness scale to the binary decision value.
def drowsiness_binary(level: Drowsiness) -> str:
    return "drowsy" if level in (Drowsiness.MEDIUM, Drowsiness.HIGH) else "non-drowsy"


# ---------------------------------------------------------------------------
# Topics


TOPIC_PATTERN = re.compile(r"^trip\.[A-Za-z0-9_-]+\.(in|out)$")


def listen_topic(trip_id: str) -> str:
    return f"trip.{trip_id}.in"


def send_topic(trip_id: str) -> str:
    return f"trip.{trip_id}.out"


def is_valid_topic(name: str) -> bool:
    return bool(TOPIC_PATTERN.match(name))


# ---------------------------------------------------------------------------
# Identity and vehicle types


@dataclass(frozen=True)
class UserAccount:
    user_id: str
    credential: str
    display_name: str


@dataclass(frozen=True)
class VehicleProfile:
    vehicle_id: str
    owner: str  # user_id; never serialized into any cross-user payload
    model: str
    year: int
    plate_number: str
    color: str
    exposed_properties: frozenset[str] = frozenset()
    exposed_actions: frozenset[str] = frozenset()

    def __post_init__(self):
        unknown_p = self.exposed_properties - set(PROPERTY_CATALOG)
        unknown_a = self.exposed_actions - set(ACTION_CATALOG)
        if unknown_p or unknown_a:
            raise InvalidExposure(
                f"not in catalog: {sorted(unknown_p | unknown_a)}"
            )


@dataclass(frozen=True)
class Trip:
    trip_id: str
    vehicle: str  # vehicle_id
    status: TripStatus
    listen_topic: str
    send_topic: str
    started_at: float
    completed_at: Optional[float] = None

    def __post_init__(self):
        if self.listen_topic == self.send_topic:
            raise ValidationError("listen and send topics must differ")
        if not (is_valid_topic(self.listen_topic) and is_valid_topic(self.send_topic)):
            raise ValidationError("topic does not match trip.<id>.in/out pattern")

    def to_dict(self) -> dict:
        d = {
            "trip_id": self.trip_id,
            "vehicle": self.vehicle,
            "status": self.status.value,
            "listen_topic": self.listen_topic,
            "send_topic": self.send_topic,
            "started_at": ts_to_str(self.started_at),
        }
        if self.completed_at is not None:
            d["completed_at"] = ts_to_str(self.completed_at)
        return d


# ---------------------------------------------------------------------------
# Vehicle state components


@dataclass(frozen=True)
class LocationState:
    latitude: float  # WGS84 degrees
    longitude: float
    speed: float  # m/s
    heading: float  # degrees, [0, 360)

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise RangeViolation(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise RangeViolation(f"longitude {self.longitude} outside [-180, 180]")
        if self.speed < 0.0:
            raise RangeViolation(f"speed {self.speed} negative")
        if not 0.0 <= self.heading < 360.0:
            raise RangeViolation(f"heading {self.heading} outside [0, 360)")

    def to_dict(self) -> dict:
        return {
            "latitude": self.latitude,
            "longitude": self.longitude,
            "speed": self.speed,
            "heading": self.heading,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LocationState":
        try:
            return cls(
                latitude=float(d["latitude"]),
                longitude=float(d["longitude"]),
                speed=float(d["speed"]),
                heading=float(d["heading"]),
            )
        except KeyError as e:
            raise ValidationError(f"location missing field {e}") from e
        except (TypeError, ValueError) as e:
            raise ValidationError(f"location field not numeric: {e}") from e


@dataclass(frozen=True)
class ControlState:
    automation_level: AutomationLevel
    lane_change_intent: Optional[LaneChangeIntent] = None

    def to_dict(self) -> dict:
        d = {"automation_level": self.automation_level.value}
        if self.lane_change_intent is not None:
            d["lane_change_intent"] = self.lane_change_intent.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ControlState":
        try:
            intent = d.get("lane_change_intent")
            return cls(
                automation_level=AutomationLevel(d["automation_level"]),
                lane_change_intent=LaneChangeIntent(intent) if intent is not None else None,
            )
        except (KeyError, ValueError) as e:
            raise ValidationError(f"bad control state: {e}") from e


@dataclass(frozen=True)
class EngineState:
    # Field set is a minimal subset; the data model leaves it open-ended.
    rpm: float
    fuel_level: Optional[float] = None  # fraction of tank, [0, 1]

    def __post_init__(self):
        if self.rpm < 0:
            raise RangeViolation(f"rpm {self.rpm} negative")
        if self.fuel_level is not None and not 0.0 <= self.fuel_level <= 1.0:
            raise RangeViolation(f"fuel_level {self.fuel_level} outside [0, 1]")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"rpm": self.rpm}
        if self.fuel_level is not None:
            d["fuel_level"] = self.fuel_level
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EngineState":
        try:
            fl = d.get("fuel_level")
            return cls(rpm=float(d["rpm"]), fuel_level=float(fl) if fl is not None else None)
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"bad engine state: {e}") from e


@dataclass(frozen=True)
class DriverState:
    drowsiness: Drowsiness
    measured_at: float

    def to_dict(self) -> dict:
        return {
            "drowsiness": self.drowsiness.value,
            "measured_at": ts_to_str(self.measured_at),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DriverState":
        try:
            return cls(
                drowsiness=Drowsiness(d["drowsiness"]),
                measured_at=str_to_ts(d["measured_at"]),
            )
        except (KeyError, ValueError) as e:
            raise ValidationError(f"bad driver state: {e}") from e


@dataclass(frozen=True)
class StateRecord:
    trip: str  # trip_id
    seq: int
    recorded_at: float  # service-assigned; the single latency clock
    location: LocationState
    control: Optional[ControlState] = None
    engine: Optional[EngineState] = None
    driver: Optional[DriverState] = None
    client_recorded_at: Optional[float] = None  # auxiliary only, never used for ordering

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "trip": self.trip,
            "seq": self.seq,
            "recorded_at": ts_to_str(self.recorded_at),
            "location": self.location.to_dict(),
        }
        if self.control is not None:
            d["control"] = self.control.to_dict()
        if self.engine is not None:
            d["engine"] = self.engine.to_dict()
        if self.driver is not None:
            d["driver"] = self.driver.to_dict()
        if self.client_recorded_at is not None:
            d["client_recorded_at"] = ts_to_str(self.client_recorded_at)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StateRecord":
        if "location" not in d or d["location"] is None:
            raise MissingLocation("state record without location")
        try:
            trip = d["trip"]
            seq = int(d["seq"])
            recorded_at = str_to_ts(d["recorded_at"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"bad state record: {e}") from e
        cra = d.get("client_recorded_at")
        return cls(
            trip=trip,
            seq=seq,
            recorded_at=recorded_at,
            location=LocationState.from_dict(d["location"]),
            control=ControlState.from_dict(d["control"]) if d.get("control") else None,
            engine=EngineState.from_dict(d["engine"]) if d.get("engine") else None,
            driver=DriverState.from_dict(d["driver"]) if d.get("driver") else None,
            client_recorded_at=str_to_ts(cra) if cra else None,
        )


@dataclass(frozen=True)
class NeighborInfo:
    trip: str  # trip_id; the only cross-user identity
    vehicle_description: dict  # {model, year, color}; plate deliberately excluded
    location: LocationState
    distance: float  # meters from the querying trip
    requestable_properties: frozenset[str] = frozenset()
    requestable_actions: frozenset[str] = frozenset()

    def to_dict(self) -> dict:
        return {
            "trip": self.trip,
            "vehicle_description": self.vehicle_description,
            "location": self.location.to_dict(),
            "distance": self.distance,
            "requestable_properties": sorted(self.requestable_properties),
            "requestable_actions": sorted(self.requestable_actions),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NeighborInfo":
        return cls(
            trip=d["trip"],
            vehicle_description=dict(d["vehicle_description"]),
            location=LocationState.from_dict(d["location"]),
            distance=float(d["distance"]),
            requestable_properties=frozenset(d.get("requestable_properties", ())),
            requestable_actions=frozenset(d.get("requestable_actions", ())),
        )


# ---------------------------------------------------------------------------
# Catalogs


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kind: str  # "property" | "action"
    handler: str  # binding name resolved by the property engine / router
    deferred: bool = False  # property may run on the deferred worker pool


PROPERTY_CATALOG: dict[str, CatalogEntry] = {
    "drowsiness": CatalogEntry("drowsiness", "property", "drowsiness", deferred=True),
    "automation_level": CatalogEntry(
        "automation_level", "property", "automation_level", deferred=True
    ),
}

ACTION_CATALOG: dict[str, CatalogEntry] = {
    "yield_request": CatalogEntry("yield_request", "action", "yield_request"),
}


def catalog_lookup(name: str) -> CatalogEntry:
    """Resolve a property or action name against the registered catalogs."""
    entry = PROPERTY_CATALOG.get(name) or ACTION_CATALOG.get(name)
    if entry is None:
        raise NotFound(f"no catalog entry for {name!r}")
    return entry


# ---------------------------------------------------------------------------
# Validation


def validate_state_record(
    record: StateRecord, *, trip_status: TripStatus, last_seq: Optional[int]
) -> None:
    """Check a state record against its trip context; raises on violation.

    Field-level range checks already run at construction; this adds the
    contextual rules: trip must be active, seq strictly increasing.
    """
    if record.location is None:
        raise MissingLocation("state record without location")
    if trip_status is not TripStatus.ACTIVE:
        raise TripNotActive(f"trip {record.trip} is not active")
    if last_seq is not None and record.seq <= last_seq:
        raise SequenceRegression(f"seq {record.seq} <= last seq {last_seq}")


# ---------------------------------------------------------------------------
# Canonical JSON


def encode(d: dict) -> str:
    """Canonical JSON: sorted keys, compact separators."""
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def decode(s: str) -> dict:
    return json.loads(s)
