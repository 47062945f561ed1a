// DOM layer: renders the store onto the page. The canvas shows the local
// map; interactive chrome (buttons, badge, modal, banners) is plain DOM.

import type { App } from "./app.js";
import { computeMarkers, markerAt, type Marker, type Viewport } from "./projection.js";

const VIEWPORT: Viewport = { width: 640, height: 480, metersPerPixel: 1 };

export function mount(root: HTMLElement, app: App): void {
  root.innerHTML = `
    <div id="login-screen">
      <h1>Road User Client</h1>
      <form id="login-form">
        <input id="display-name" placeholder="display name" value="driver" />
        <input id="credential" type="password" placeholder="credential" value="" />
        <input id="plate" placeholder="plate number" value="" />
        <label><input id="expose-drowsiness" type="checkbox" checked /> share drowsiness</label>
        <label><input id="expose-yield" type="checkbox" checked /> accept yield requests</label>
        <button type="submit">log in & start trip</button>
      </form>
      <div id="login-error" class="error" hidden></div>
    </div>
    <div id="map-screen" hidden>
      <div id="reconnect-banner" class="banner" hidden>connection lost — retrying…</div>
      <div id="stale-banner" class="banner" hidden>showing last known neighbors</div>
      <canvas id="map" width="${VIEWPORT.width}" height="${VIEWPORT.height}"></canvas>
      <div id="side-panel">
        <div id="selected-label">no neighbor selected</div>
        <button id="request-drowsiness" disabled>request drowsiness</button>
        <span id="property-badge" hidden></span>
        <button id="send-yield" disabled>send yield request</button>
        <details>
          <summary>settings</summary>
          <label>poll period (ms) <input id="poll-period" type="number" value="1000" /></label>
        </details>
        <ul id="action-log"></ul>
        <button id="end-trip">end trip</button>
      </div>
    </div>
    <div id="action-modal" class="modal" hidden>
      <p id="action-modal-text"></p>
      <button id="action-accept">accept</button>
      <button id="action-decline">decline</button>
    </div>
  `;

  const el = <T extends HTMLElement>(id: string): T => root.querySelector(`#${id}`) as T;
  let markers: Marker[] = [];

  el<HTMLFormElement>("login-form").addEventListener("submit", (evt) => {
    evt.preventDefault();
    const props = el<HTMLInputElement>("expose-drowsiness").checked ? ["drowsiness"] : [];
    const actions = el<HTMLInputElement>("expose-yield").checked ? ["yield_request"] : [];
    void app
      .loginAndStartTrip({
        displayName: el<HTMLInputElement>("display-name").value,
        credential: el<HTMLInputElement>("credential").value,
        vehicle: {
          model: "web client",
          year: new Date().getFullYear(),
          plate_number: el<HTMLInputElement>("plate").value,
          color: "silver",
          exposed_properties: props,
          exposed_actions: actions,
        },
        position: { latitude: 48.19, longitude: 14.11 },
      })
      .then(() => app.startPolling())
      .catch(() => {}); // error already in the store
  });

  el<HTMLCanvasElement>("map").addEventListener("click", (evt) => {
    const rect = (evt.target as HTMLCanvasElement).getBoundingClientRect();
    const hit = markerAt(markers, evt.clientX - rect.left, evt.clientY - rect.top);
    app.selectNeighbor(hit?.trip ?? null);
  });

  el("request-drowsiness").addEventListener("click", () => void app.requestDrowsiness());
  el("send-yield").addEventListener("click", () => void app.sendYieldRequest());
  el("action-accept").addEventListener("click", () => void app.respondToPendingAction("accept"));
  el("action-decline").addEventListener("click", () => void app.respondToPendingAction("decline"));
  el("end-trip").addEventListener("click", () => void app.endTrip());
  el<HTMLInputElement>("poll-period").addEventListener("change", (evt) => {
    app.setPollPeriod(Number((evt.target as HTMLInputElement).value));
  });

  app.store.subscribe((state) => {
    el("login-screen").hidden = state.screen !== "login";
    el("map-screen").hidden = state.screen !== "map";

    const loginError = el("login-error");
    loginError.hidden = state.loginError === null;
    loginError.textContent = state.loginError ?? "";

    el("reconnect-banner").hidden = !state.reconnecting;
    el("stale-banner").hidden = !state.stale;

    markers = computeMarkers(state.ownLocation, state.neighbors, state.selectedTrip, VIEWPORT);
    drawMap(el<HTMLCanvasElement>("map"), markers);

    const selected = app.store.selectedNeighbor();
    el("selected-label").textContent = selected
      ? markers.find((m) => m.trip === selected.trip)?.label ?? selected.trip
      : "no neighbor selected";
    el<HTMLButtonElement>("request-drowsiness").disabled = !app.store.canRequestDrowsiness();
    el<HTMLButtonElement>("send-yield").disabled = !app.store.canSendYield();

    const badge = el("property-badge");
    badge.hidden = state.propertyBadge === null;
    if (state.propertyBadge) {
      const rtt =
        state.propertyBadge.rttMs !== null ? ` — ${state.propertyBadge.rttMs.toFixed(0)} ms` : "";
      badge.textContent = state.propertyBadge.text + rtt;
      badge.className = state.propertyBadge.kind === "ok" ? "badge ok" : "badge error";
    }

    const modal = el("action-modal");
    modal.hidden = state.pendingAction === null;
    if (state.pendingAction) {
      el("action-modal-text").textContent =
        `incoming ${state.pendingAction.action} — accept?`;
    }

    el("action-log").innerHTML = state.actionLog
      .map((line) => `<li>${line}</li>`)
      .join("");
  });
}

export function drawMap(canvas: HTMLCanvasElement, markers: Marker[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return; // non-browser environment; marker model still drives tests
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#ddd";
  for (let r = 50; r <= 250; r += 50) {
    ctx.beginPath();
    ctx.arc(canvas.width / 2, canvas.height / 2, r, 0, Math.PI * 2);
    ctx.stroke();
  }
  for (const m of markers) {
    ctx.beginPath();
    ctx.fillStyle = m.color;
    ctx.arc(m.x, m.y, m.trip === null ? 7 : 6, 0, Math.PI * 2);
    ctx.fill();
    if (m.selected) {
      ctx.strokeStyle = "#000";
      ctx.beginPath();
      ctx.arc(m.x, m.y, 10, 0, Math.PI * 2);
      ctx.stroke();
    }
  }
}
