// Application logic, DOM-free: session lifecycle, the 1 s poll cycle,
// property/action requests, and the incoming-action modal round-trip.
// The UI layer subscribes to the store; tests drive this class directly.

import { ApiError, RucsClient } from "./api.js";
import { ListenStream } from "./stream.js";
import { Store } from "./store.js";
import type { Envelope, LocationState, VehicleForm } from "./types.js";

export interface LoginForm {
  displayName: string;
  credential: string;
  vehicle: VehicleForm;
  /** Where this road user is; a real deployment would use geolocation. */
  position: { latitude: number; longitude: number };
}

export class App {
  readonly store = new Store();
  private client: RucsClient;
  private stream: ListenStream | null = null;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0;

  constructor(baseUrl: string) {
    this.client = new RucsClient(baseUrl);
  }

  // -- session -------------------------------------------------------------

  async loginAndStartTrip(form: LoginForm): Promise<void> {
    this.store.update({ loginError: null });
    try {
      const { vehicle_id } = await this.client.register(
        form.displayName,
        form.credential,
        form.vehicle,
      );
      const session = await this.client.startTrip(vehicle_id);
      const ownLocation: LocationState = {
        latitude: form.position.latitude,
        longitude: form.position.longitude,
        speed: 0,
        heading: 0,
      };
      this.store.update({ session, ownLocation, screen: "map" });
      await this.reportState();
      this.openStream();
    } catch (e) {
      this.store.update({ loginError: errorText(e) });
      throw e;
    }
  }

  async endTrip(): Promise<void> {
    const session = this.store.state.session;
    this.stopPolling();
    this.stream?.stop();
    if (session) await this.client.completeTrip(session.tripId).catch(() => {});
    this.store.update({ ...this.store.state, session: null, screen: "login", neighbors: [] });
  }

  private openStream(): void {
    const session = this.store.state.session;
    if (!session) return;
    this.stream = new ListenStream(this.client.listenUrl(session.tripId), session.token, {
      onEnvelope: (env) => this.onEnvelope(env),
      onDown: () => this.store.update({ reconnecting: true }),
      onUp: () => this.store.update({ reconnecting: false }),
    });
    this.stream.start();
  }

  // -- state reporting + neighbor polling -----------------------------------

  moveTo(latitude: number, longitude: number): void {
    const own = this.store.state.ownLocation;
    if (own) this.store.update({ ownLocation: { ...own, latitude, longitude } });
  }

  async reportState(): Promise<void> {
    const { session, ownLocation } = this.store.state;
    if (!session || !ownLocation) return;
    this.seq += 1;
    await this.client.postState(session.tripId, { seq: this.seq, location: ownLocation });
  }

  /** One poll cycle: report own state, then refresh the neighbor list. */
  async pollOnce(): Promise<void> {
    const session = this.store.state.session;
    if (!session) return;
    try {
      await this.reportState();
      const neighbors = await this.client.neighbors(session.tripId);
      this.store.setNeighbors(neighbors);
      if (this.store.state.reconnecting && !this.stream) {
        this.store.update({ reconnecting: false });
      }
    } catch {
      // Keep the last markers; flag them as stale.
      this.store.update({ stale: true });
    }
  }

  startPolling(): void {
    this.stopPolling();
    const tick = async () => {
      await this.pollOnce();
      this.pollTimer = setTimeout(tick, this.store.state.pollPeriodMs);
    };
    void tick();
  }

  stopPolling(): void {
    if (this.pollTimer !== null) clearTimeout(this.pollTimer);
    this.pollTimer = null;
  }

  setPollPeriod(ms: number): void {
    this.store.update({ pollPeriodMs: Math.max(200, ms) });
  }

  // -- property requests -----------------------------------------------------

  selectNeighbor(trip: string | null): void {
    this.store.update({ selectedTrip: trip, propertyBadge: null });
  }

  async requestDrowsiness(): Promise<void> {
    const { session, selectedTrip } = this.store.state;
    if (!session || !selectedTrip || !this.store.canRequestDrowsiness()) return;
    try {
      const { body, rttMs } = await this.client.requestProperty(
        session.tripId,
        selectedTrip,
        "drowsiness",
      );
      const value = body.value as { level: string; binary: string };
      this.store.update({
        propertyBadge: { kind: "ok", text: `${value.binary} (${value.level})`, rttMs },
      });
    } catch (e) {
      this.store.update({ propertyBadge: { kind: "error", text: propertyError(e), rttMs: null } });
    }
  }

  // -- actions ---------------------------------------------------------------

  async sendYieldRequest(): Promise<void> {
    const { session, selectedTrip } = this.store.state;
    if (!session || !selectedTrip || !this.store.canSendYield()) return;
    const { correlation_id } = await this.client.requestAction(
      session.tripId,
      selectedTrip,
      "yield_request",
    );
    this.store.log(`yield_request sent (${correlation_id.slice(0, 8)})`);
  }

  private onEnvelope(env: Envelope): void {
    if (env.kind === "action_request") {
      this.store.update({ pendingAction: env });
    } else if (env.kind === "action_response") {
      const payload = env.payload ?? {};
      const outcome = "error" in payload ? `failed: ${payload["error"]}` : String(payload["result"]);
      this.store.log(`${env.action} → ${outcome}`);
    }
  }

  /** The driver pressed accept/decline on the incoming-action modal. */
  async respondToPendingAction(result: "accept" | "decline"): Promise<void> {
    const { session, pendingAction } = this.store.state;
    if (!session || !pendingAction) return;
    await this.client.respondAction(
      session.tripId,
      pendingAction.correlation_id,
      pendingAction.action ?? "",
      { result },
    );
    this.store.log(`${pendingAction.action} ${result}ed`);
    this.store.update({ pendingAction: null });
  }
}

function errorText(e: unknown): string {
  if (e instanceof ApiError) return `${e.code}: ${e.message}`;
  return e instanceof Error ? e.message : String(e);
}

function propertyError(e: unknown): string {
  if (e instanceof ApiError) {
    if (e.code === "no_data") return "no driver state reported";
    if (e.code === "permission_denied") return "not exposed by this vehicle";
  }
  return errorText(e);
}
