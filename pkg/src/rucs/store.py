"""Append-only state logs, the TTL key-value cache, and the identity directory.

The state log persists as newline-delimited JSON per trip under
`<root>/trips/<trip_id>/states.jsonl`; an in-memory index serves reads.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Callable, Optional

from .clock import Clock, SystemClock
from .domain import (
    DuplicatePlate,
    LocationState,
    NoData,
    NotFound,
    StateRecord,
    Trip,
    TripAlreadyActive,
    TripNotActive,
    TripStatus,
    UserAccount,
    VehicleProfile,
    encode,
    listen_topic,
    send_topic,
    validate_state_record,
)

STATE_KINDS = ("location", "control", "engine", "driver")


class StateStore:
    """Per-trip append-only log of StateRecords with seq enforcement."""

    def __init__(
        self,
        data_dir: Optional[Path] = None,
        clock: Optional[Clock] = None,
        trip_status: Optional[Callable[[str], TripStatus]] = None,
        position_sink: Optional[Callable[[str, LocationState, float], None]] = None,
    ):
        self._data_dir = Path(data_dir) if data_dir else None
        self._clock = clock or SystemClock()
        self._trip_status = trip_status or (lambda trip_id: TripStatus.ACTIVE)
        self._position_sink = position_sink
        self._logs: dict[str, list[StateRecord]] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _trip_lock(self, trip_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(trip_id, threading.Lock())

    def append_state(self, record: StateRecord) -> None:
        lock = self._trip_lock(record.trip)
        with lock:
            log = self._logs.setdefault(record.trip, [])
            last_seq = log[-1].seq if log else None
            validate_state_record(
                record, trip_status=self._trip_status(record.trip), last_seq=last_seq
            )
            log.append(record)
            if self._data_dir is not None:
                path = self._data_dir / "trips" / record.trip / "states.jsonl"
                path.parent.mkdir(parents=True, exist_ok=True)
                with path.open("a", encoding="utf-8") as f:
                    f.write(encode(record.to_dict()) + "\n")
        if self._position_sink is not None:
            self._position_sink(record.trip, record.location, record.recorded_at)

    def log_length(self, trip_id: str) -> int:
        with self._trip_lock(trip_id):
            return len(self._logs.get(trip_id, ()))

    def records(self, trip_id: str) -> list[StateRecord]:
        with self._trip_lock(trip_id):
            return list(self._logs.get(trip_id, ()))

    def latest_state(self, trip_id: str, kind: str):
        """Component from the highest-seq record in which it is present."""
        if kind not in STATE_KINDS:
            raise NotFound(f"unknown state kind {kind!r}")
        with self._trip_lock(trip_id):
            log = self._logs.get(trip_id, ())
            for record in reversed(log):
                component = getattr(record, kind)
                if component is not None:
                    return component, record.seq
        raise NoData(f"trip {trip_id} has no {kind} state")


class TtlCache:
    """Key-value cache with per-entry TTL and hit/miss counters.

    Expired entries are never returned; hits + misses == total gets.
    """

    def __init__(self, clock: Optional[Clock] = None):
        self._clock = clock or SystemClock()
        self._entries: dict[str, tuple[object, float]] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def put(self, key: str, value, ttl: float) -> None:
        if ttl <= 0:
            raise ValueError("ttl must be positive")
        with self._lock:
            self._entries[key] = (value, self._clock.now() + ttl)

    def get(self, key: str):
        """Returns the value or None on miss; every call counts."""
        with self._lock:
            entry = self._entries.get(key)
            if entry is not None and self._clock.now() < entry[1]:
                self.hits += 1
                return entry[0]
            if entry is not None:
                del self._entries[key]
            self.misses += 1
            return None

    def exists(self, key: str) -> bool:
        with self._lock:
            entry = self._entries.get(key)
            return entry is not None and self._clock.now() < entry[1]

    def delete(self, key: str) -> None:
        with self._lock:
            self._entries.pop(key, None)

    @property
    def total_gets(self) -> int:
        return self.hits + self.misses


class Directory:
    """In-memory registry of accounts, vehicles, and trips.

    Trip reads performed as the cache-miss fallback of topic resolution are
    counted so tests can assert the warm-cache path touches no trip records.
    """

    def __init__(self, clock: Optional[Clock] = None):
        self._clock = clock or SystemClock()
        self._users: dict[str, UserAccount] = {}
        self._vehicles: dict[str, VehicleProfile] = {}
        self._trips: dict[str, Trip] = {}
        self._active_by_vehicle: dict[str, str] = {}
        self._plates: set[str] = set()
        self._lock = threading.RLock()
        self.trip_reads = 0

    def add_user(self, user: UserAccount) -> None:
        with self._lock:
            if user.user_id in self._users:
                raise ValueError(f"duplicate user id {user.user_id}")
            self._users[user.user_id] = user

    def add_vehicle(self, vehicle: VehicleProfile) -> None:
        with self._lock:
            if vehicle.owner not in self._users:
                raise NotFound(f"unknown owner {vehicle.owner}")
            if vehicle.plate_number in self._plates:
                raise DuplicatePlate(f"plate {vehicle.plate_number} already registered")
            self._vehicles[vehicle.vehicle_id] = vehicle
            self._plates.add(vehicle.plate_number)

    def get_user(self, user_id: str) -> UserAccount:
        with self._lock:
            try:
                return self._users[user_id]
            except KeyError:
                raise NotFound(f"unknown user {user_id}") from None

    def get_vehicle(self, vehicle_id: str) -> VehicleProfile:
        with self._lock:
            try:
                return self._vehicles[vehicle_id]
            except KeyError:
                raise NotFound(f"unknown vehicle {vehicle_id}") from None

    def start_trip(self, trip_id: str, vehicle_id: str) -> Trip:
        with self._lock:
            if vehicle_id not in self._vehicles:
                raise NotFound(f"unknown vehicle {vehicle_id}")
            if vehicle_id in self._active_by_vehicle:
                raise TripAlreadyActive(f"vehicle {vehicle_id} already on a trip")
            trip = Trip(
                trip_id=trip_id,
                vehicle=vehicle_id,
                status=TripStatus.ACTIVE,
                listen_topic=listen_topic(trip_id),
                send_topic=send_topic(trip_id),
                started_at=self._clock.now(),
            )
            self._trips[trip_id] = trip
            self._active_by_vehicle[vehicle_id] = trip_id
            return trip

    def complete_trip(self, trip_id: str) -> Trip:
        with self._lock:
            trip = self._trips.get(trip_id)
            if trip is None or trip.status is not TripStatus.ACTIVE:
                raise TripNotActive(f"trip {trip_id} is not active")
            done = Trip(
                trip_id=trip.trip_id,
                vehicle=trip.vehicle,
                status=TripStatus.COMPLETED,
                listen_topic=trip.listen_topic,
                send_topic=trip.send_topic,
                started_at=trip.started_at,
                completed_at=self._clock.now(),
            )
            self._trips[trip_id] = done
            self._active_by_vehicle.pop(trip.vehicle, None)
            return done

    def get_trip(self, trip_id: str) -> Trip:
        with self._lock:
            try:
                return self._trips[trip_id]
            except KeyError:
                raise NotFound(f"unknown trip {trip_id}") from None

    def trip_status(self, trip_id: str) -> TripStatus:
        with self._lock:
            trip = self._trips.get(trip_id)
            return trip.status if trip is not None else TripStatus.COMPLETED

    def is_active(self, trip_id: str) -> bool:
        with self._lock:
            trip = self._trips.get(trip_id)
            return trip is not None and trip.status is TripStatus.ACTIVE

    def read_listen_topic(self, trip_id: str) -> Optional[str]:
        """Fallback read used on topic-cache misses; counted."""
        with self._lock:
            self.trip_reads += 1
            trip = self._trips.get(trip_id)
            if trip is None or trip.status is not TripStatus.ACTIVE:
                return None
            return trip.listen_topic
