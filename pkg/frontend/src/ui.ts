/**
 * Pure render functions: session state in, HTML strings out. main.ts mounts
 * them into the document; tests compare them against telemetry frames
 * directly, no DOM required.
 */

import { TelemetryFrame } from "./protocol.js";
import { ConsoleSession, TimelineRow } from "./session.js";

function esc(s: unknown): string {
  return String(s)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function describePayload(p: { type: string; [k: string]: unknown }): string {
  switch (p.type) {
    case "facial_expression":
      return `expression ${p.label} (${(p.valence as number) >= 0 ? "+" : ""}${p.valence})`;
    case "speech":
      return `speech "${p.utterance}"`;
    case "gesture":
      return `gesture ${p.gesture_id}`;
    case "gaze_shift":
      return p.azimuth_deg !== undefined
        ? `gaze az ${p.azimuth_deg}`
        : `gaze xy (${p.x}, ${p.y})`;
    case "posture":
      return `posture ${p.posture_id}`;
    case "set_stiffness":
      return `stiffness ${p.level}`;
    case "blink":
      return "blink";
    case "small_motion":
      return `small motion ${p.motion_id}`;
    default:
      return p.type;
  }
}

export function renderStateTable(frame: TelemetryFrame | null): string {
  if (frame === null) {
    return `<table class="state"><tr><td>no telemetry yet</td></tr></table>`;
  }
  const layers = Object.entries(frame.enabled)
    .map(([layer, on]) => `${esc(layer)}=${on ? "on" : "off"}`)
    .join(" ");
  const requests = frame.surviving_requests
    .map((r) => `<li>${esc(r.source)}: ${esc(describePayload(r.payload))} → ${esc(r.channels.join(","))}</li>`)
    .join("");
  const commands = frame.commands
    .map((c) => `<li>${esc(c.channel)} ← ${esc(c.annotation || c.source)}</li>`)
    .join("");
  return `<table class="state">
<tr><th>tick</th><td id="tick">${frame.tick}</td></tr>
<tr><th>layers</th><td id="layers">${layers}</td></tr>
<tr><th>interrupt</th><td id="interrupt">${frame.interrupt ? "ACTIVE" : "no"}</td></tr>
<tr><th>fall state</th><td id="fall">${esc(frame.fall_state.phase)}</td></tr>
<tr><th>situation</th><td id="situation">${esc(frame.situation ? frame.situation.kind : "-")}</td></tr>
<tr><th>signals</th><td id="signals">${esc(frame.signals.join(",") || "-")}</td></tr>
<tr><th>requests</th><td id="requests"><ul>${requests || "<li>none</li>"}</ul></td></tr>
<tr><th>commands</th><td id="commands"><ul>${commands || "<li>none</li>"}</ul></td></tr>
</table>`;
}

export function renderLayerToggles(session: ConsoleSession): string {
  const rows = session
    .layerRows()
    .map(({ layer, enabled }) => {
      const state = enabled === null ? "?" : enabled ? "on" : "off";
      return `<button class="layer ${state}" data-layer="${esc(layer)}">${esc(layer)}: ${state}</button>`;
    })
    .join("");
  return `<div class="toggles">${rows}</div>`;
}

export function renderTimelineRow(row: TimelineRow): string {
  if (row.kind === "gap") {
    return `<div class="row gap">… missed frames ${row.fromTick}–${row.toTick} …</div>`;
  }
  if (row.kind === "error") {
    return `<div class="row error">error: ${esc(row.text)}</div>`;
  }
  const f = row.frame!;
  const bits: string[] = [];
  for (const r of f.surviving_requests) bits.push(describePayload(r.payload));
  for (const s of f.signals) bits.push(s.toUpperCase());
  return `<div class="row frame">t${f.tick}: ${esc(bits.join("; ") || "quiet")}</div>`;
}

export function renderTimeline(session: ConsoleSession, limit = 50): string {
  const rows = session.timeline.slice(-limit).map(renderTimelineRow).join("\n");
  return `<div class="timeline">${rows}</div>`;
}

export function renderStatusLine(session: ConsoleSession): string {
  const pend = session.pending.size ? ` (${session.pending.size} pending)` : "";
  const paused = session.paused === null ? "" : session.paused ? " | paused" : " | running";
  const err = session.lastError ? ` | last error: ${esc(session.lastError)}` : "";
  return `<div class="status ${session.connection}">${session.connection}${paused}${pend}${err}</div>`;
}
