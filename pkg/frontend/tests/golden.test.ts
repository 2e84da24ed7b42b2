/**
 * Scripted round-trip against a live engine server, compared to a committed
 * golden transcript. Run `npm run record-golden` to regenerate after a
 * deliberate engine or protocol change.
 */

import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { PRESETS, resetSpeechCounter, speechActPreset } from "../src/presets.js";
import { ServerMessage } from "../src/protocol.js";
import { ConsoleSession } from "../src/session.js";
import { renderStateTable } from "../src/ui.js";
import { LiveServer, MessageLog, TcpTransport, startEngineServer } from "./helpers.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const GOLDEN_PATH = path.join(HERE, "..", "golden", "console_session.json");
const SEED = 424242;

let server: LiveServer;

beforeAll(async () => {
  server = await startEngineServer(SEED);
}, 30000);

afterAll(async () => {
  await server?.stop();
});

function preset(id: string): Record<string, unknown> {
  const p = PRESETS.find((x) => x.id === id);
  if (!p) throw new Error(`no preset ${id}`);
  return p.event;
}

async function scriptedSession(): Promise<{
  transcript: ServerMessage[];
  session: ConsoleSession;
}> {
  resetSpeechCounter();
  const transport = await TcpTransport.connect(server.host, server.port);
  const session = new ConsoleSession(transport);
  const log = new MessageLog();
  log.attach(transport, (line) => session.handleLine(line));
  session.markConnected();

  // connect: ask for the initial snapshot
  await log.ackOf(session.queryState());
  await log.waitForTelemetryCount(1);

  // toggle two layers
  await log.ackOf(session.setLayer("eye_blink", false));
  await log.ackOf(session.setLayer("conversational_gestures", false));

  // inject three preset events
  await log.ackOf(session.inject(preset("child_smiles")));
  await log.ackOf(session.inject(preset("child_hits")));
  await log.ackOf(session.inject(speechActPreset()));

  // pause (already paused; still acked) and step
  await log.ackOf(session.pause());
  await log.ackOf(session.step(5));
  await log.waitForTelemetryCount(1 + 5);

  // closing snapshot
  await log.ackOf(session.queryState());
  await log.waitForTelemetryCount(1 + 5 + 1);

  transport.close();
  return { transcript: log.all, session };
}

describe("golden console session", () => {
  it("acks and telemetry match the committed transcript", async () => {
    const { transcript, session } = await scriptedSession();

    if (process.env.UPDATE_GOLDEN === "1") {
      mkdirSync(path.dirname(GOLDEN_PATH), { recursive: true });
      writeFileSync(GOLDEN_PATH, JSON.stringify(transcript, null, 2) + "\n");
      console.log(`golden transcript rewritten: ${transcript.length} messages`);
    }

    expect(existsSync(GOLDEN_PATH)).toBe(true);
    const golden = JSON.parse(readFileSync(GOLDEN_PATH, "utf8")) as ServerMessage[];
    expect(transcript).toEqual(golden);

    // sanity on shape, independent of golden content
    const acks = transcript.filter((m) => m.type === "ack");
    const frames = transcript.filter((m) => m.type === "telemetry");
    expect(acks.length).toBe(9);
    expect(frames.length).toBe(7);
    expect(transcript.some((m) => m.type === "error")).toBe(false);

    // the state table renders exactly the last telemetry frame
    const last = frames.at(-1)! as Extract<ServerMessage, { type: "telemetry" }>;
    expect(session.latestFrame).toEqual(last.frame);
    const html = renderStateTable(session.latestFrame);
    expect(html).toContain(`<td id="tick">${last.frame.tick}</td>`);
    expect(html).toContain("eye_blink=off");
    expect(html).toContain("conversational_gestures=off");
    for (const r of last.frame.surviving_requests) {
      expect(html).toContain(r.source);
    }
  }, 40000);

  it("toggled layers stay silent in the stepped frames", async () => {
    const { transcript } = await scriptedSession();
    const frames = transcript.filter(
      (m): m is Extract<ServerMessage, { type: "telemetry" }> => m.type === "telemetry"
    );
    for (const f of frames) {
      if (f.frame.tick < 0) continue;
      for (const r of f.frame.surviving_requests) {
        expect(r.source).not.toBe("eye_blink");
        expect(r.source).not.toBe("conversational_gestures");
      }
    }
  }, 40000);

  it("second client sees the same world", async () => {
    const transport = await TcpTransport.connect(server.host, server.port);
    const session = new ConsoleSession(transport);
    const log = new MessageLog();
    log.attach(transport, (line) => session.handleLine(line));
    await log.ackOf(session.queryState());
    await log.waitForTelemetryCount(1);
    expect(session.latestFrame).not.toBeNull();
    expect(session.layerStates!.eye_blink).toBe(false); // earlier toggles persist
    transport.close();
  }, 40000);
});
