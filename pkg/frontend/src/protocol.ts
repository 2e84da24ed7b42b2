/**
 * Wire protocol v1: newline-delimited JSON messages, each with a "type" field.
 *
 * Commands:  set_layer, inject, pause, resume, step, set_speed, query_state
 * Server:    ack{cmd_id, effective_tick}, error{cmd_id, reason},
 *            telemetry{frame}, gap{from_tick, to_tick}
 */

export type LayerId =
  | "falling_reaction"
  | "social_reaction"
  | "conversational_gestures"
  | "eye_blink";

export const LAYERS: LayerId[] = [
  "falling_reaction",
  "social_reaction",
  "conversational_gestures",
  "eye_blink",
];

export interface SurvivingRequest {
  id: string;
  source: LayerId;
  priority: number;
  channels: string[];
  payload: { type: string; [key: string]: unknown };
  duration_ticks: number;
}

export interface MotorCommand {
  channel: string;
  joint_targets: Record<string, number>;
  duration_ticks: number;
  source: LayerId;
  annotation: string;
}

export interface TelemetryFrame {
  tick: number;
  enabled: Record<LayerId, boolean>;
  interrupt: boolean;
  fall_state: { phase: string; ticks_in_state: number };
  situation: { kind: string; [key: string]: unknown } | null;
  surviving_requests: SurvivingRequest[];
  commands: MotorCommand[];
  signals: string[];
}

export type ServerMessage =
  | { type: "ack"; cmd_id: string | null; effective_tick: number }
  | { type: "error"; cmd_id: string | null; reason: string }
  | { type: "telemetry"; frame: TelemetryFrame }
  | { type: "gap"; from_tick: number; to_tick: number };

export type Command =
  | { type: "set_layer"; cmd_id?: string; layer: LayerId; enabled: boolean }
  | { type: "inject"; cmd_id?: string; event: Record<string, unknown> }
  | { type: "pause"; cmd_id?: string }
  | { type: "resume"; cmd_id?: string }
  | { type: "step"; cmd_id?: string; n: number }
  | { type: "set_speed"; cmd_id?: string; ticks_per_second: number }
  | { type: "query_state"; cmd_id?: string };

export function parseServerMessage(line: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (e) {
    throw new Error(`unparseable server line: ${line.slice(0, 120)}`);
  }
  if (typeof raw !== "object" || raw === null || typeof (raw as any).type !== "string") {
    throw new Error("server message missing 'type'");
  }
  const msg = raw as any;
  switch (msg.type) {
    case "ack":
      if (typeof msg.effective_tick !== "number") throw new Error("ack without effective_tick");
      return msg as ServerMessage;
    case "error":
      if (typeof msg.reason !== "string") throw new Error("error without reason");
      return msg as ServerMessage;
    case "telemetry":
      if (typeof msg.frame?.tick !== "number") throw new Error("telemetry without frame.tick");
      return msg as ServerMessage;
    case "gap":
      if (typeof msg.from_tick !== "number" || typeof msg.to_tick !== "number") {
        throw new Error("gap without tick range");
      }
      return msg as ServerMessage;
    default:
      throw new Error(`unknown server message type '${msg.type}'`);
  }
}

export function serializeCommand(cmd: Command): string {
  return JSON.stringify(cmd);
}
