/**
 * ConsoleSession: the console's entire state, fed exclusively by server
 * messages. Nothing here is optimistic: a layer toggle changes the displayed
 * switchboard only once the server acks it or telemetry reports it.
 */

import {
  Command,
  LayerId,
  LAYERS,
  ServerMessage,
  TelemetryFrame,
  parseServerMessage,
  serializeCommand,
} from "./protocol.js";
import { Transport } from "./transport.js";

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface TimelineRow {
  kind: "frame" | "gap" | "error";
  tick?: number;
  frame?: TelemetryFrame;
  fromTick?: number;
  toTick?: number;
  text?: string;
}

export interface PendingCommand {
  cmdId: string;
  command: Command;
}

const SCROLLBACK_LIMIT = 500;

export class ConsoleSession {
  connection: ConnectionState = "connecting";
  latestFrame: TelemetryFrame | null = null;
  /** last ack'd or telemetry-reported switchboard; null until known */
  layerStates: Record<LayerId, boolean> | null = null;
  timeline: TimelineRow[] = [];
  pending = new Map<string, PendingCommand>();
  lastError: string | null = null;
  paused: boolean | null = null;

  private cmdCounter = 0;
  private listeners: (() => void)[] = [];

  constructor(private transport: Transport) {
    transport.onLine((line) => this.handleLine(line));
    transport.onClose(() => {
      this.connection = "disconnected";
      this.notify();
    });
  }

  onChange(cb: () => void): void {
    this.listeners.push(cb);
  }

  private notify(): void {
    for (const cb of this.listeners) cb();
  }

  markConnected(): void {
    this.connection = "connected";
    this.notify();
  }

  // -- outgoing ---------------------------------------------------------------

  private sendCommand(cmd: Command): string {
    this.cmdCounter += 1;
    const cmdId = `c${this.cmdCounter}`;
    const withId = { ...cmd, cmd_id: cmdId } as Command;
    this.pending.set(cmdId, { cmdId, command: withId });
    this.transport.send(serializeCommand(withId));
    this.notify();
    return cmdId;
  }

  toggleLayer(layer: LayerId): string {
    // request the opposite of the last reported state; default off->on
    const current = this.layerStates ? this.layerStates[layer] : false;
    return this.setLayer(layer, !current);
  }

  setLayer(layer: LayerId, enabled: boolean): string {
    return this.sendCommand({ type: "set_layer", layer, enabled });
  }

  inject(event: Record<string, unknown>): string {
    return this.sendCommand({ type: "inject", event });
  }

  pause(): string {
    return this.sendCommand({ type: "pause" });
  }

  resume(): string {
    return this.sendCommand({ type: "resume" });
  }

  step(n = 1): string {
    return this.sendCommand({ type: "step", n });
  }

  setSpeed(ticksPerSecond: number): string {
    return this.sendCommand({ type: "set_speed", ticks_per_second: ticksPerSecond });
  }

  queryState(): string {
    return this.sendCommand({ type: "query_state" });
  }

  // -- incoming ---------------------------------------------------------------

  handleLine(line: string): void {
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(line);
    } catch (e) {
      this.lastError = String(e);
      this.notify();
      return;
    }
    this.handleMessage(msg);
  }

  handleMessage(msg: ServerMessage): void {
    switch (msg.type) {
      case "ack": {
        const pending = msg.cmd_id ? this.pending.get(msg.cmd_id) : undefined;
        if (pending) {
          this.pending.delete(pending.cmdId);
          this.applyAcked(pending.command);
        }
        break;
      }
      case "error": {
        if (msg.cmd_id) this.pending.delete(msg.cmd_id);
        this.lastError = msg.reason;
        this.timeline.push({ kind: "error", text: msg.reason });
        break;
      }
      case "telemetry": {
        this.latestFrame = msg.frame;
        this.layerStates = { ...msg.frame.enabled };
        this.timeline.push({ kind: "frame", tick: msg.frame.tick, frame: msg.frame });
        break;
      }
      case "gap": {
        this.timeline.push({ kind: "gap", fromTick: msg.from_tick, toTick: msg.to_tick });
        break;
      }
    }
    if (this.timeline.length > SCROLLBACK_LIMIT) {
      this.timeline.splice(0, this.timeline.length - SCROLLBACK_LIMIT);
    }
    this.notify();
  }

  /** The server applied this command at a tick boundary: fold its effect in. */
  private applyAcked(cmd: Command): void {
    if (cmd.type === "set_layer") {
      if (this.layerStates === null) {
        this.layerStates = {
          falling_reaction: true,
          social_reaction: true,
          conversational_gestures: true,
          eye_blink: true,
        };
      }
      this.layerStates[cmd.layer] = cmd.enabled;
    } else if (cmd.type === "pause") {
      this.paused = true;
    } else if (cmd.type === "resume") {
      this.paused = false;
    }
  }

  layerRows(): { layer: LayerId; enabled: boolean | null }[] {
    return LAYERS.map((layer) => ({
      layer,
      enabled: this.layerStates ? this.layerStates[layer] : null,
    }));
  }
}
