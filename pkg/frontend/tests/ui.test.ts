// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { App } from "../src/app.js";
import { mount } from "../src/ui.js";
import type { Envelope, NeighborInfo } from "../src/types.js";

function neighbor(trip: string, properties: string[] = ["drowsiness"]): NeighborInfo {
  return {
    trip,
    vehicle_description: { model: "sedan", year: 2021, color: "red" },
    location: { latitude: 48.1901, longitude: 14.11, speed: 10, heading: 90 },
    distance: 11,
    requestable_properties: properties,
    requestable_actions: ["yield_request"],
  };
}

describe("ui", () => {
  let app: App;
  let root: HTMLElement;

  beforeEach(() => {
    // jsdom has no 2D canvas; drawMap's null-context guard covers this path.
    HTMLCanvasElement.prototype.getContext = (() => null) as typeof HTMLCanvasElement.prototype.getContext;
    document.body.innerHTML = `<div id="root"></div>`;
    root = document.getElementById("root") as HTMLElement;
    app = new App("http://127.0.0.1:1"); // never reached in these tests
    mount(root, app);
  });

  it("starts on the login screen", () => {
    expect((root.querySelector("#login-screen") as HTMLElement).hidden).toBe(false);
    expect((root.querySelector("#map-screen") as HTMLElement).hidden).toBe(true);
  });

  it("shows login errors inline and stays on login", () => {
    app.store.update({ loginError: "unauthorized: bad credential" });
    const banner = root.querySelector("#login-error") as HTMLElement;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("unauthorized");
    expect((root.querySelector("#login-screen") as HTMLElement).hidden).toBe(false);
  });

  it("switches to the map screen and shows banners from state", () => {
    app.store.update({ screen: "map", reconnecting: true, stale: true });
    expect((root.querySelector("#map-screen") as HTMLElement).hidden).toBe(false);
    expect((root.querySelector("#reconnect-banner") as HTMLElement).hidden).toBe(false);
    expect((root.querySelector("#stale-banner") as HTMLElement).hidden).toBe(false);
  });

  it("enables the drowsiness button only for an exposing selection", () => {
    app.store.update({
      screen: "map",
      ownLocation: { latitude: 48.19, longitude: 14.11, speed: 0, heading: 0 },
    });
    app.store.setNeighbors([neighbor("t-open"), neighbor("t-closed", [])]);
    const button = root.querySelector("#request-drowsiness") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    app.store.update({ selectedTrip: "t-closed" });
    expect(button.disabled).toBe(true);
    app.store.update({ selectedTrip: "t-open" });
    expect(button.disabled).toBe(false);
    expect((root.querySelector("#selected-label") as HTMLElement).textContent).toContain(
      "trip t-open",
    );
  });

  it("renders the property badge with round-trip time", () => {
    app.store.update({
      screen: "map",
      propertyBadge: { kind: "ok", text: "non-drowsy (low)", rttMs: 42.4 },
    });
    const badge = root.querySelector("#property-badge") as HTMLElement;
    expect(badge.hidden).toBe(false);
    expect(badge.textContent).toBe("non-drowsy (low) — 42 ms");
    expect(badge.className).toBe("badge ok");
  });

  it("shows the action modal while a request is pending", () => {
    const env: Envelope = {
      topic: "trip.t.in",
      correlation_id: "c1",
      kind: "action_request",
      action: "yield_request",
      payload: {},
      published_at: "2026-08-23T00:00:00.000+00:00",
    };
    app.store.update({ pendingAction: env });
    const modal = root.querySelector("#action-modal") as HTMLElement;
    expect(modal.hidden).toBe(false);
    expect(root.querySelector("#action-modal-text")!.textContent).toContain("yield_request");
    app.store.update({ pendingAction: null });
    expect(modal.hidden).toBe(true);
  });

  it("renders the action log", () => {
    app.store.log("yield_request accepted");
    const items = root.querySelectorAll("#action-log li");
    expect(items).toHaveLength(1);
    expect(items[0].textContent).toBe("yield_request accepted");
  });
});
