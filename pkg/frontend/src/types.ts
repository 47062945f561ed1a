// Wire types mirroring the service's canonical JSON encoding
// (snake_case keys, lowercase enums, optional components omitted).

export interface LocationState {
  latitude: number;
  longitude: number;
  speed: number;
  heading: number;
}

export interface NeighborInfo {
  trip: string;
  vehicle_description: { model: string; year: number; color: string };
  location: LocationState;
  distance: number;
  requestable_properties: string[];
  requestable_actions: string[];
}

export interface PropertyResult {
  property: string;
  value: Record<string, unknown>;
  computed_at: string;
  source_seq: number;
}

export interface DrowsinessValue {
  level: "none" | "low" | "medium" | "high";
  binary: "drowsy" | "non-drowsy";
}

export interface Envelope {
  topic: string;
  correlation_id: string;
  kind: "action_request" | "action_response" | "notice";
  action: string | null;
  payload: Record<string, unknown> | null;
  published_at: string;
  reply_to?: string;
}

export interface VehicleForm {
  model: string;
  year: number;
  plate_number: string;
  color: string;
  exposed_properties: string[];
  exposed_actions: string[];
}

export interface Session {
  token: string;
  vehicleId: string;
  tripId: string;
  listenTopic: string;
  sendTopic: string;
}

export interface ServiceError {
  error: string;
  detail?: string;
}
