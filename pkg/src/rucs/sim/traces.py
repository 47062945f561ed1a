"""GPS trace generation and parsing.

Trace files are CSV with header `t_s,lat,lon,speed_mps,heading_deg`.
The field-test preset produces two parallel-lane straight segments:
vehicle A slightly ahead in the left lane, vehicle B behind in the
right lane, both at roughly 50 km/h heading east.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from ..geo import EARTH_RADIUS_M

TRACE_HEADER = ["t_s", "lat", "lon", "speed_mps", "heading_deg"]

# Test-track-like geometry defaults.
BASE_LAT = 48.19
BASE_LON = 14.11
LANE_SEPARATION_M = 3.5
FIELD_TEST_SPEED_MPS = 50.0 / 3.6


@dataclass(frozen=True)
class TracePoint:
    t_s: float
    lat: float
    lon: float
    speed_mps: float
    heading_deg: float


def meters_to_dlat(m: float) -> float:
    return math.degrees(m / EARTH_RADIUS_M)


def meters_to_dlon(m: float, at_lat: float) -> float:
    return math.degrees(m / (EARTH_RADIUS_M * math.cos(math.radians(at_lat))))


def straight_trace(
    duration_s: float,
    dt_s: float = 0.5,
    speed_mps: float = FIELD_TEST_SPEED_MPS,
    lat0: float = BASE_LAT,
    lon0: float = BASE_LON,
    along_offset_m: float = 0.0,
    lateral_offset_m: float = 0.0,
) -> list[TracePoint]:
    """Eastbound straight segment; offsets place vehicles in lane and order."""
    points = []
    steps = int(round(duration_s / dt_s)) + 1
    lat = lat0 + meters_to_dlat(lateral_offset_m)
    for i in range(steps):
        t = i * dt_s
        east_m = along_offset_m + speed_mps * t
        points.append(
            TracePoint(
                t_s=round(t, 3),
                lat=lat,
                lon=lon0 + meters_to_dlon(east_m, lat),
                speed_mps=speed_mps,
                heading_deg=90.0,
            )
        )
    return points


def field_test_traces(duration_s: float = 20.0, dt_s: float = 0.5) -> dict[str, list[TracePoint]]:
    """Two vehicles: A in the left lane slightly ahead, B in the right lane behind."""
    return {
        "vehicle_a": straight_trace(
            duration_s, dt_s, along_offset_m=10.0, lateral_offset_m=LANE_SEPARATION_M
        ),
        "vehicle_b": straight_trace(duration_s, dt_s, along_offset_m=0.0, lateral_offset_m=0.0),
    }


def write_trace(points: list[TracePoint], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_HEADER)
        for p in points:
            writer.writerow([p.t_s, f"{p.lat:.8f}", f"{p.lon:.8f}", p.speed_mps, p.heading_deg])


def read_trace(path: Path) -> list[TracePoint]:
    points = []
    with Path(path).open(newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            points.append(
                TracePoint(
                    t_s=float(row["t_s"]),
                    lat=float(row["lat"]),
                    lon=float(row["lon"]),
                    speed_mps=float(row["speed_mps"]),
                    heading_deg=float(row["heading_deg"]),
                )
            )
    return points


def point_at(points: list[TracePoint], t: float) -> TracePoint:
    """Latest trace point at or before t (clamped to the ends)."""
    if not points:
        raise ValueError("empty trace")
    idx = 0
    for i, p in enumerate(points):
        if p.t_s <= t:
            idx = i
        else:
            break
    return points[idx]
