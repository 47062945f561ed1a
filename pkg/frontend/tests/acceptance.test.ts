// Web client contract against a live loopback service with two scripted
// vehicles: login, two red markers, "non-drowsy (low)" badge, and a
// yield_request modal that round-trips an accept.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { App } from "../src/app.js";
import { RucsClient } from "../src/api.js";
import { computeMarkers } from "../src/projection.js";
import { ListenStream } from "../src/stream.js";
import type { Envelope, Session } from "../src/types.js";
import { startService, waitFor, type LiveService } from "./service.js";

const VIEWPORT = { width: 640, height: 480, metersPerPixel: 1 };

function rfc3339Now(): string {
  return new Date().toISOString().replace("Z", "+00:00");
}

interface ScriptedVehicle {
  client: RucsClient;
  session: Session;
  received: Envelope[];
  stream: ListenStream;
}

async function scriptVehicle(
  url: string,
  name: string,
  lat: number,
  lon: number,
  opts: { drowsiness?: string; properties?: string[]; actions?: string[] } = {},
): Promise<ScriptedVehicle> {
  const client = new RucsClient(url);
  const { vehicle_id } = await client.register(name, `pw-${name}`, {
    model: "scripted",
    year: 2021,
    plate_number: `plate-${name}`,
    color: "black",
    exposed_properties: opts.properties ?? [],
    exposed_actions: opts.actions ?? [],
  });
  const session = await client.startTrip(vehicle_id);
  const state: Record<string, unknown> = {
    seq: 1,
    location: { latitude: lat, longitude: lon, speed: 10, heading: 90 },
  };
  if (opts.drowsiness) {
    state["driver"] = { drowsiness: opts.drowsiness, measured_at: rfc3339Now() };
  }
  await client.postState(session.tripId, state);
  const received: Envelope[] = [];
  const stream = new ListenStream(client.listenUrl(session.tripId), session.token, {
    onEnvelope: (env) => received.push(env),
  });
  stream.start();
  return { client, session, received, stream };
}

describe("web client against a live service", () => {
  let service: LiveService;
  let drowsy: ScriptedVehicle; // vehicle with a reported driver state
  let other: ScriptedVehicle;
  let app: App;

  beforeAll(async () => {
    service = await startService();
    drowsy = await scriptVehicle(service.url, "scripted-b", 48.1901, 14.11, {
      drowsiness: "low",
      properties: ["drowsiness"],
    });
    other = await scriptVehicle(service.url, "scripted-c", 48.19, 14.1102);
    app = new App(service.url);
  }, 30_000);

  afterAll(async () => {
    drowsy.stream.stop();
    other.stream.stop();
    app.stopPolling();
    await app.endTrip().catch(() => {});
    await drowsy.client.completeTrip(drowsy.session.tripId).catch(() => {});
    await other.client.completeTrip(other.session.tripId).catch(() => {});
    service.stop();
  });

  it("logs in and lands on the map screen", async () => {
    await app.loginAndStartTrip({
      displayName: "web-driver",
      credential: "pw-web",
      vehicle: {
        model: "web client",
        year: 2026,
        plate_number: "WEB-1",
        color: "silver",
        exposed_properties: [],
        exposed_actions: ["yield_request"],
      },
      position: { latitude: 48.19, longitude: 14.11 },
    });
    expect(app.store.state.screen).toBe("map");
    expect(app.store.state.session?.tripId).toBeTruthy();
  });

  it("renders the two scripted vehicles as red markers", async () => {
    await app.pollOnce();
    expect(app.store.state.neighbors).toHaveLength(2);
    const markers = computeMarkers(
      app.store.state.ownLocation,
      app.store.state.neighbors,
      null,
      VIEWPORT,
    );
    expect(markers.filter((m) => m.color === "red")).toHaveLength(2);
    expect(markers.filter((m) => m.color === "blue")).toHaveLength(1); // own position
  });

  it('drowsiness request shows "non-drowsy (low)"', async () => {
    app.selectNeighbor(drowsy.session.tripId);
    expect(app.store.canRequestDrowsiness()).toBe(true);
    await app.requestDrowsiness();
    const badge = app.store.state.propertyBadge;
    expect(badge?.kind).toBe("ok");
    expect(badge?.text).toBe("non-drowsy (low)");
    expect(badge?.rttMs).toBeGreaterThan(0);
  });

  it("drowsiness button stays disabled for a non-exposing neighbor", () => {
    app.selectNeighbor(other.session.tripId);
    expect(app.store.canRequestDrowsiness()).toBe(false);
  });

  it("incoming yield_request modal round-trips an accept", async () => {
    const webTrip = app.store.state.session!.tripId;
    const { correlation_id } = await drowsy.client.requestAction(
      drowsy.session.tripId,
      webTrip,
      "yield_request",
      { reason: "lane change ahead" },
    );

    // The web client's stream surfaces the request as a pending modal.
    await waitFor(() => app.store.state.pendingAction !== null, 5_000, "modal");
    expect(app.store.state.pendingAction?.action).toBe("yield_request");
    expect(app.store.state.pendingAction?.correlation_id).toBe(correlation_id);

    await app.respondToPendingAction("accept");
    expect(app.store.state.pendingAction).toBeNull();

    // The scripted requester receives the correlated accept.
    await waitFor(
      () => drowsy.received.some((e) => e.kind === "action_response"),
      5_000,
      "action response",
    );
    const response = drowsy.received.find((e) => e.kind === "action_response")!;
    expect(response.correlation_id).toBe(correlation_id);
    expect(response.payload).toEqual({ result: "accept" });
  });

  it("never exposes a user id or credential", async () => {
    const neighbors = JSON.stringify(app.store.state.neighbors);
    expect(neighbors).not.toContain("pw-");
    expect(neighbors).not.toContain("user_id");
    expect(neighbors).not.toContain("credential");
  });
});
