// Local-coordinate projection around the user's own position: meters on a
// spherical earth, then meters-per-pixel to the canvas. No tile service —
// the map works offline against a loopback deployment.

import type { LocationState, NeighborInfo } from "./types.js";

const EARTH_RADIUS_M = 6_371_000;
const DEG = Math.PI / 180;

/** East/north offset in meters from `origin` to `point` (local tangent plane). */
export function metersFrom(
  origin: { latitude: number; longitude: number },
  point: { latitude: number; longitude: number },
): { east: number; north: number } {
  const north = (point.latitude - origin.latitude) * DEG * EARTH_RADIUS_M;
  const east =
    (point.longitude - origin.longitude) * DEG * EARTH_RADIUS_M * Math.cos(origin.latitude * DEG);
  return { east, north };
}

export interface Marker {
  trip: string | null; // null for the own-position marker
  x: number; // canvas px
  y: number;
  color: "red" | "blue";
  label: string;
  selected: boolean;
}

export interface Viewport {
  width: number;
  height: number;
  metersPerPixel: number;
}

/**
 * One red marker per neighbor plus the own position in blue at the center.
 * Pure: rendering and hit-testing both consume this list.
 */
export function computeMarkers(
  own: LocationState | null,
  neighbors: NeighborInfo[],
  selectedTrip: string | null,
  viewport: Viewport,
): Marker[] {
  if (!own) return [];
  const cx = viewport.width / 2;
  const cy = viewport.height / 2;
  const markers: Marker[] = [
    { trip: null, x: cx, y: cy, color: "blue", label: "you", selected: false },
  ];
  for (const n of neighbors) {
    const { east, north } = metersFrom(own, n.location);
    markers.push({
      trip: n.trip,
      x: cx + east / viewport.metersPerPixel,
      y: cy - north / viewport.metersPerPixel, // north is up
      color: "red",
      label: describeVehicle(n),
      selected: n.trip === selectedTrip,
    });
  }
  return markers;
}

/** Neighbors are labeled by vehicle description and trip id only — never a user id. */
export function describeVehicle(n: NeighborInfo): string {
  const v = n.vehicle_description;
  return `${v.color} ${v.model} (${v.year}) · trip ${n.trip.slice(0, 8)}`;
}

export function markerAt(markers: Marker[], x: number, y: number, radiusPx = 10): Marker | null {
  let best: Marker | null = null;
  let bestDist = radiusPx;
  for (const m of markers) {
    if (m.trip === null) continue;
    const d = Math.hypot(m.x - x, m.y - y);
    if (d <= bestDist) {
      best = m;
      bestDist = d;
    }
  }
  return best;
}

export function ownLocation(lat: number, lon: number): LocationState {
  return { latitude: lat, longitude: lon, speed: 0, heading: 0 };
}
