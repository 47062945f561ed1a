"""Latest-position index per active trip and radius neighbor queries."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Optional

from .domain import LocationState, RucsError, TripNotActive

EARTH_RADIUS_M = 6_371_000.0


class NoOwnPosition(RucsError):
    code = "no_own_position"


def haversine_distance(a: LocationState, b: LocationState) -> float:
    """Great-circle distance in meters on the spherical earth model."""
    lat1, lon1 = math.radians(a.latitude), math.radians(a.longitude)
    lat2, lon2 = math.radians(b.latitude), math.radians(b.longitude)
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class PositionSnapshot:
    trip: str
    location: LocationState
    observed_at: float


@dataclass(frozen=True)
class NeighborCandidate:
    trip: str
    location: LocationState
    distance: float
    observed_at: float


class PositionIndex:
    """Keeps at most one snapshot per trip; queries see a consistent view.

    Correctness is defined by the brute-force linear scan; at desk scale
    the scan is the implementation.
    """

    def __init__(self, is_active: Optional[Callable[[str], bool]] = None):
        self._is_active = is_active or (lambda trip_id: True)
        self._snapshots: dict[str, PositionSnapshot] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._snapshots)

    def upsert_position(self, trip: str, location: LocationState, observed_at: float) -> None:
        if not self._is_active(trip):
            raise TripNotActive(f"trip {trip} is not active")
        snap = PositionSnapshot(trip, location, observed_at)
        with self._lock:
            self._snapshots[trip] = snap

    def evict(self, trip: str) -> None:
        with self._lock:
            self._snapshots.pop(trip, None)

    def get(self, trip: str) -> Optional[PositionSnapshot]:
        with self._lock:
            return self._snapshots.get(trip)

    def neighbors(
        self, of: str, radius: float, max_age: float, now: float
    ) -> list[NeighborCandidate]:
        """Trips within `radius` meters of `of`, snapshots no older than
        `max_age` seconds, sorted by ascending distance then trip id."""
        with self._lock:
            own = self._snapshots.get(of)
            snaps = list(self._snapshots.values())
        if own is None:
            raise NoOwnPosition(f"trip {of} has no position snapshot")
        out = []
        for snap in snaps:
            if snap.trip == of:
                continue
            if now - snap.observed_at > max_age:
                continue
            if not self._is_active(snap.trip):
                continue
            d = haversine_distance(own.location, snap.location)
            if d <= radius:
                out.append(NeighborCandidate(snap.trip, snap.location, d, snap.observed_at))
        out.sort(key=lambda c: (c.distance, c.trip))
        return out
