/**
 * Wire protocol (schema session/1): JSON text messages over a WebSocket.
 * The server owns all state; the client renders frames and reports
 * dwell-derived fixations.
 */

export const N_DRONES = 4;
export const N_ATTRS = 8;
export const N_PAIRS = N_DRONES * N_ATTRS;

export type SessionMode = "simulated_user" | "human_user" | "replay";

export interface HelloMessage {
  type: "hello";
  mode: SessionMode;
  seed?: number;
}

export interface FixationMessage {
  type: "fixation";
  drone: number;
  attr: string;
  dwell_ms: number;
}

export interface PauseMessage {
  type: "pause";
}

export interface ResumeMessage {
  type: "resume";
}

export type ClientMessage = HelloMessage | FixationMessage | PauseMessage | ResumeMessage;

export interface FrameMessage {
  type: "frame";
  tick: number;
  att: number[]; // 32 floats, drone-major canonical attribute order
  hlt: number[]; // 32 bits
  score: number;
  events: [number, string][]; // currently critical [drone, attr] pairs
}

export interface AckMessage {
  type: "ack";
  ok: boolean;
  code: string;
  [extra: string]: unknown;
}

export interface EndMessage {
  type: "end";
  report: {
    session: string;
    mode: string;
    ticks: number;
    score: number;
    highlights_shown: number;
    final_belief_distance: number | null;
    trace_path: string | null;
  };
}

export type ServerMessage = FrameMessage | AckMessage | EndMessage;

export function parseServerMessage(raw: string): ServerMessage {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    throw new Error(`not JSON: ${raw.slice(0, 120)}`);
  }
  if (typeof doc !== "object" || doc === null || !("type" in doc)) {
    throw new Error("message must be an object with a type field");
  }
  const msg = doc as Record<string, unknown>;
  switch (msg.type) {
    case "frame":
      return validateFrame(msg);
    case "ack":
      if (typeof msg.ok !== "boolean" || typeof msg.code !== "string") {
        throw new Error("ack requires ok and code");
      }
      return msg as unknown as AckMessage;
    case "end":
      if (typeof msg.report !== "object" || msg.report === null) {
        throw new Error("end requires a report object");
      }
      return msg as unknown as EndMessage;
    default:
      throw new Error(`unknown server message type ${String(msg.type)}`);
  }
}

function validateFrame(msg: Record<string, unknown>): FrameMessage {
  if (typeof msg.tick !== "number") throw new Error("frame.tick must be a number");
  if (!Array.isArray(msg.att) || msg.att.length !== N_PAIRS) {
    throw new Error(`frame.att must have ${N_PAIRS} entries`);
  }
  if (!Array.isArray(msg.hlt) || msg.hlt.length !== N_PAIRS) {
    throw new Error(`frame.hlt must have ${N_PAIRS} entries`);
  }
  if (msg.att.some((v) => typeof v !== "number" || !isFinite(v))) {
    throw new Error("frame.att entries must be finite numbers");
  }
  if (msg.hlt.some((v) => v !== 0 && v !== 1)) {
    throw new Error("frame.hlt entries must be 0 or 1");
  }
  if (typeof msg.score !== "number") throw new Error("frame.score must be a number");
  if (!Array.isArray(msg.events)) throw new Error("frame.events must be an array");
  return msg as unknown as FrameMessage;
}

export function serializeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}
