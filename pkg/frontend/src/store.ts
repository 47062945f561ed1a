// Single observable app state. The UI renders from this and nothing else,
// which keeps the DOM layer thin and the logic testable without a browser.

import type { Envelope, NeighborInfo, LocationState, Session } from "./types.js";

export type Screen = "login" | "map";

export interface PropertyBadge {
  kind: "ok" | "error";
  text: string; // e.g. "non-drowsy (low)"
  rttMs: number | null;
}

export interface AppState {
  screen: Screen;
  session: Session | null;
  ownLocation: LocationState | null;
  neighbors: NeighborInfo[];
  selectedTrip: string | null;
  propertyBadge: PropertyBadge | null;
  /** Incoming action awaiting the driver's accept/decline. */
  pendingAction: Envelope | null;
  /** Login/validation errors, rendered inline on the login screen. */
  loginError: string | null;
  /** Network trouble mid-session: stream down or poll failing. */
  reconnecting: boolean;
  /** Last poll failed; markers shown are from the previous cycle. */
  stale: boolean;
  pollPeriodMs: number;
  actionLog: string[];
}

export function initialState(): AppState {
  return {
    screen: "login",
    session: null,
    ownLocation: null,
    neighbors: [],
    selectedTrip: null,
    propertyBadge: null,
    pendingAction: null,
    loginError: null,
    reconnecting: false,
    stale: false,
    pollPeriodMs: 1000,
    actionLog: [],
  };
}

export type Listener = (state: AppState) => void;

export class Store {
  private listeners: Listener[] = [];
  state: AppState = initialState();

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  update(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  /** Replace the neighbor list; drop the selection if it disappeared. */
  setNeighbors(neighbors: NeighborInfo[]): void {
    const selected = neighbors.some((n) => n.trip === this.state.selectedTrip)
      ? this.state.selectedTrip
      : null;
    this.update({ neighbors, selectedTrip: selected, stale: false });
  }

  selectedNeighbor(): NeighborInfo | null {
    return this.state.neighbors.find((n) => n.trip === this.state.selectedTrip) ?? null;
  }

  /** The drowsiness button is enabled only when the selected neighbor exposes it. */
  canRequestDrowsiness(): boolean {
    const n = this.selectedNeighbor();
    return n !== null && n.requestable_properties.includes("drowsiness");
  }

  canSendYield(): boolean {
    const n = this.selectedNeighbor();
    return n !== null && n.requestable_actions.includes("yield_request");
  }

  log(message: string): void {
    this.update({ actionLog: [...this.state.actionLog, message].slice(-50) });
  }
}
