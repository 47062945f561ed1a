import { describe, expect, it } from "vitest";

import { Store } from "../src/store.js";
import type { NeighborInfo } from "../src/types.js";

function neighbor(trip: string, properties: string[] = [], actions: string[] = []): NeighborInfo {
  return {
    trip,
    vehicle_description: { model: "sedan", year: 2021, color: "red" },
    location: { latitude: 48.19, longitude: 14.11, speed: 10, heading: 90 },
    distance: 12,
    requestable_properties: properties,
    requestable_actions: actions,
  };
}

describe("Store", () => {
  it("notifies subscribers on update", () => {
    const store = new Store();
    const seen: string[] = [];
    store.subscribe((s) => seen.push(s.screen));
    store.update({ screen: "map" });
    expect(seen).toEqual(["map"]);
  });

  it("drops the selection when the neighbor disappears", () => {
    const store = new Store();
    store.setNeighbors([neighbor("t1")]);
    store.update({ selectedTrip: "t1" });
    store.setNeighbors([neighbor("t2")]);
    expect(store.state.selectedTrip).toBeNull();
    expect(store.selectedNeighbor()).toBeNull();
  });

  it("keeps the selection while the neighbor is present", () => {
    const store = new Store();
    store.setNeighbors([neighbor("t1")]);
    store.update({ selectedTrip: "t1" });
    store.setNeighbors([neighbor("t1"), neighbor("t2")]);
    expect(store.state.selectedTrip).toBe("t1");
  });

  it("drowsiness button follows the exposure set", () => {
    const store = new Store();
    store.setNeighbors([neighbor("open", ["drowsiness"]), neighbor("closed", [])]);
    store.update({ selectedTrip: "closed" });
    expect(store.canRequestDrowsiness()).toBe(false);
    store.update({ selectedTrip: "open" });
    expect(store.canRequestDrowsiness()).toBe(true);
  });

  it("yield button follows the action exposure set", () => {
    const store = new Store();
    store.setNeighbors([neighbor("t1", [], ["yield_request"])]);
    expect(store.canSendYield()).toBe(false); // nothing selected
    store.update({ selectedTrip: "t1" });
    expect(store.canSendYield()).toBe(true);
  });

  it("a fresh neighbor list clears the stale flag", () => {
    const store = new Store();
    store.update({ stale: true });
    store.setNeighbors([]);
    expect(store.state.stale).toBe(false);
  });

  it("action log is bounded", () => {
    const store = new Store();
    for (let i = 0; i < 60; i++) store.log(`line ${i}`);
    expect(store.state.actionLog).toHaveLength(50);
    expect(store.state.actionLog.at(-1)).toBe("line 59");
  });
});
