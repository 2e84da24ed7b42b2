import { describe, expect, it } from "vitest";

import { ConsoleSession } from "../src/session.js";
import { TelemetryFrame } from "../src/protocol.js";
import { FakeTransport } from "./helpers.js";

function frame(tick: number, overrides: Partial<TelemetryFrame> = {}): TelemetryFrame {
  return {
    tick,
    enabled: {
      falling_reaction: true,
      social_reaction: true,
      conversational_gestures: true,
      eye_blink: true,
    },
    interrupt: false,
    fall_state: { phase: "monitoring", ticks_in_state: tick },
    situation: { kind: "no_interaction" },
    surviving_requests: [],
    commands: [],
    signals: [],
    ...overrides,
  };
}

describe("ConsoleSession", () => {
  it("is not optimistic: displayed layer state changes only on ack", () => {
    const t = new FakeTransport();
    const session = new ConsoleSession(t);
    t.pushServer({ type: "telemetry", frame: frame(0) });
    expect(session.layerStates!.eye_blink).toBe(true);

    const cmdId = session.setLayer("eye_blink", false);
    expect(session.layerStates!.eye_blink).toBe(true); // still the old truth
    expect(session.pending.size).toBe(1);

    t.pushServer({ type: "ack", cmd_id: cmdId, effective_tick: 1 });
    expect(session.layerStates!.eye_blink).toBe(false);
    expect(session.pending.size).toBe(0);
  });

  it("telemetry is authoritative over acks", () => {
    const t = new FakeTransport();
    const session = new ConsoleSession(t);
    const cmdId = session.setLayer("social_reaction", false);
    t.pushServer({ type: "ack", cmd_id: cmdId, effective_tick: 0 });
    expect(session.layerStates!.social_reaction).toBe(false);
    t.pushServer({
      type: "telemetry",
      frame: frame(3, {
        enabled: {
          falling_reaction: true,
          social_reaction: true,
          conversational_gestures: true,
          eye_blink: true,
        },
      }),
    });
    expect(session.layerStates!.social_reaction).toBe(true);
  });

  it("records gap markers in the timeline", () => {
    const t = new FakeTransport();
    const session = new ConsoleSession(t);
    t.pushServer({ type: "telemetry", frame: frame(1) });
    t.pushServer({ type: "gap", from_tick: 2, to_tick: 9 });
    t.pushServer({ type: "telemetry", frame: frame(10) });
    expect(session.timeline.map((r) => r.kind)).toEqual(["frame", "gap", "frame"]);
    const gap = session.timeline[1];
    expect(gap.fromTick).toBe(2);
    expect(gap.toTick).toBe(9);
  });

  it("renders errors inline and clears the pending command", () => {
    const t = new FakeTransport();
    const session = new ConsoleSession(t);
    const cmdId = session.inject({ type: "emotion_display", valence: 9, arousal: 0, label: "x" });
    t.pushServer({ type: "error", cmd_id: cmdId, reason: "valence out of [-1,1]" });
    expect(session.pending.size).toBe(0);
    expect(session.lastError).toContain("valence");
    expect(session.timeline.at(-1)!.kind).toBe("error");
  });

  it("marks disconnect when the transport drops", () => {
    const t = new FakeTransport();
    const session = new ConsoleSession(t);
    session.markConnected();
    expect(session.connection).toBe("connected");
    t.dropConnection();
    expect(session.connection).toBe("disconnected");
  });

  it("caps the scrollback", () => {
    const t = new FakeTransport();
    const session = new ConsoleSession(t);
    for (let i = 0; i < 700; i++) t.pushServer({ type: "telemetry", frame: frame(i) });
    expect(session.timeline.length).toBe(500);
    expect(session.timeline[0].tick).toBe(200);
    expect(session.latestFrame!.tick).toBe(699);
  });

  it("assigns monotonically increasing cmd ids", () => {
    const t = new FakeTransport();
    const session = new ConsoleSession(t);
    expect(session.pause()).toBe("c1");
    expect(session.step(2)).toBe("c2");
    expect(session.queryState()).toBe("c3");
    expect(t.sent.map((s) => JSON.parse(s).cmd_id)).toEqual(["c1", "c2", "c3"]);
  });

  it("tracks paused state from acked pause/resume", () => {
    const t = new FakeTransport();
    const session = new ConsoleSession(t);
    const p = session.pause();
    expect(session.paused).toBe(null);
    t.pushServer({ type: "ack", cmd_id: p, effective_tick: 4 });
    expect(session.paused).toBe(true);
    const r = session.resume();
    t.pushServer({ type: "ack", cmd_id: r, effective_tick: 4 });
    expect(session.paused).toBe(false);
  });
});
