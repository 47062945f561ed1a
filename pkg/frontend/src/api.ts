// Thin typed wrapper over the service's HTTP endpoints. Every call goes
// through request() so errors carry the service's error code and the
// round-trip time is measured in one place.

import type {
  Envelope,
  NeighborInfo,
  PropertyResult,
  Session,
  VehicleForm,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export interface TimedResult<T> {
  body: T;
  rttMs: number;
}

export class RucsClient {
  token: string | null = null;

  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<TimedResult<T>> {
    const started = performance.now();
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const rttMs = performance.now() - started;
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, payload.error ?? "error", payload.detail ?? resp.statusText);
    }
    return { body: payload as T, rttMs };
  }

  async health(): Promise<void> {
    await this.request("GET", "/api/health");
  }

  async register(
    displayName: string,
    credential: string,
    vehicle: VehicleForm,
  ): Promise<{ token: string; vehicle_id: string }> {
    const { body } = await this.request<{ token: string; vehicle_id: string }>(
      "POST",
      "/api/register",
      { display_name: displayName, credential, vehicle },
    );
    this.token = body.token;
    return body;
  }

  async startTrip(vehicleId: string): Promise<Session> {
    const { body } = await this.request<{
      trip_id: string;
      listen_topic: string;
      send_topic: string;
    }>("POST", "/api/trips", { vehicle_id: vehicleId });
    return {
      token: this.token ?? "",
      vehicleId,
      tripId: body.trip_id,
      listenTopic: body.listen_topic,
      sendTopic: body.send_topic,
    };
  }

  async postState(tripId: string, state: Record<string, unknown>): Promise<void> {
    await this.request("POST", `/api/trips/${tripId}/state`, state);
  }

  async neighbors(tripId: string): Promise<NeighborInfo[]> {
    const { body } = await this.request<{ neighbors: NeighborInfo[] }>(
      "GET",
      `/api/trips/${tripId}/neighbors`,
    );
    return body.neighbors;
  }

  async requestProperty(
    tripId: string,
    targetTrip: string,
    property: string,
  ): Promise<TimedResult<PropertyResult>> {
    return this.request<PropertyResult>("POST", `/api/trips/${tripId}/requests/property`, {
      target_trip: targetTrip,
      property,
    });
  }

  async requestAction(
    tripId: string,
    targetTrip: string,
    action: string,
    payload: Record<string, unknown> = {},
  ): Promise<{ correlation_id: string }> {
    const { body } = await this.request<{ correlation_id: string }>(
      "POST",
      `/api/trips/${tripId}/requests/action`,
      { target_trip: targetTrip, action, payload },
    );
    return body;
  }

  async respondAction(
    tripId: string,
    correlationId: string,
    action: string,
    payload: Record<string, unknown>,
  ): Promise<void> {
    await this.request("POST", `/api/trips/${tripId}/respond`, {
      correlation_id: correlationId,
      action,
      payload,
    });
  }

  async completeTrip(tripId: string): Promise<void> {
    await this.request("POST", `/api/trips/${tripId}/complete`);
  }

  listenUrl(tripId: string): string {
    return `${this.baseUrl}/api/trips/${tripId}/listen`;
  }
}

export type { Envelope };
