/**
 * Browser entry point: connect to the engine's supervisory port (WebSocket
 * upgrade on the same socket the NDJSON protocol uses) and wire the controls.
 */

import { PRESETS, speechActPreset } from "./presets.js";
import { LayerId } from "./protocol.js";
import { ConsoleSession } from "./session.js";
import { WsTransport } from "./transport.js";
import {
  renderLayerToggles,
  renderStateTable,
  renderStatusLine,
  renderTimeline,
} from "./ui.js";

const RETRY_MS = 2000;

function defaultEndpoint(): string {
  const params = new URLSearchParams(location.search);
  return params.get("server") ?? `ws://${location.hostname || "127.0.0.1"}:8750/`;
}

function mount(): void {
  const app = document.getElementById("app")!;
  app.innerHTML = `
    <div id="status"></div>
    <div id="toggles"></div>
    <div class="controls">
      <button id="pause">pause</button>
      <button id="resume">resume</button>
      <button id="step">step ×1</button>
      <button id="step10">step ×10</button>
      <label>speed <input id="speed" type="number" value="10" min="1" max="100" size="4"/> t/s</label>
      <button id="setspeed">set</button>
      <button id="query">query state</button>
    </div>
    <div id="presets"></div>
    <div class="panes">
      <div><h3>current state</h3><div id="state"></div></div>
      <div><h3>timeline</h3><div id="timeline"></div></div>
    </div>
  `;

  const presetPane = document.getElementById("presets")!;
  presetPane.innerHTML =
    PRESETS.map(
      (p) => `<button class="preset" data-preset="${p.id}">${p.label}</button>`
    ).join("") + `<button class="preset" data-preset="__speech">robot: speech act</button>`;

  connect(defaultEndpoint());
}

function connect(endpoint: string): void {
  const statusPane = document.getElementById("status")!;
  statusPane.innerHTML = `<div class="status connecting">connecting to ${endpoint}…</div>`;

  const transport = new WsTransport(endpoint);
  const session = new ConsoleSession(transport);

  const render = () => {
    document.getElementById("status")!.innerHTML = renderStatusLine(session);
    document.getElementById("toggles")!.innerHTML = renderLayerToggles(session);
    document.getElementById("state")!.innerHTML = renderStateTable(session.latestFrame);
    document.getElementById("timeline")!.innerHTML = renderTimeline(session);
  };
  session.onChange(render);

  transport
    .ready()
    .then(() => {
      session.markConnected();
      session.queryState();
    })
    .catch(() => {
      statusPane.innerHTML = `<div class="status disconnected">unreachable, retrying…</div>`;
      setTimeout(() => connect(endpoint), RETRY_MS);
    });

  transport.onClose(() => {
    session.handleMessage; // state flips via session's own close handler
    setTimeout(() => connect(endpoint), RETRY_MS);
  });

  document.getElementById("toggles")!.addEventListener("click", (ev) => {
    const layer = (ev.target as HTMLElement).dataset?.layer as LayerId | undefined;
    if (layer) session.toggleLayer(layer);
  });
  document.getElementById("presets")!.addEventListener("click", (ev) => {
    const id = (ev.target as HTMLElement).dataset?.preset;
    if (!id) return;
    if (id === "__speech") {
      session.inject(speechActPreset());
    } else {
      const preset = PRESETS.find((p) => p.id === id);
      if (preset) session.inject(preset.event);
    }
  });
  document.getElementById("pause")!.addEventListener("click", () => session.pause());
  document.getElementById("resume")!.addEventListener("click", () => session.resume());
  document.getElementById("step")!.addEventListener("click", () => session.step(1));
  document.getElementById("step10")!.addEventListener("click", () => session.step(10));
  document.getElementById("setspeed")!.addEventListener("click", () => {
    const v = Number((document.getElementById("speed") as HTMLInputElement).value);
    if (v > 0) session.setSpeed(v);
  });
  document.getElementById("query")!.addEventListener("click", () => session.queryState());
}

document.addEventListener("DOMContentLoaded", mount);
