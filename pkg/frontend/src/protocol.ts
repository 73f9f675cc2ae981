/** Wire protocol spoken with the gesture service: one JSON object per frame. */

export interface ImuMessage {
  type: "imu";
  t: number;
  ax: number;
  ay: number;
  az: number;
  flex: number;
}

export interface ConfigMessage {
  type: "config";
  gate_threshold?: number;
  time_scale?: number;
}

export type ClientMessage = ImuMessage | ConfigMessage;

export interface StateMessage {
  type: "state";
  mode: "idle" | "capturing" | "flying";
}

export interface PredictionMessage {
  type: "prediction";
  label: string;
  posteriors: number[];
}

export interface DroneStateMessage {
  type: "drone_state";
  t: number;
  x: number;
  y: number;
  z: number;
  led: [number, number, number];
  lit: boolean;
}

export interface PaintDoneMessage {
  type: "paint_done";
  encoding: "ppm-base64" | "path";
  data: string;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail: string;
}

export type ServerMessage =
  | StateMessage
  | PredictionMessage
  | DroneStateMessage
  | PaintDoneMessage
  | ErrorMessage;

const SERVER_TYPES = new Set(["state", "prediction", "drone_state", "paint_done", "error"]);

/** Parse a text frame; returns null for anything that is not a known server message. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let value: unknown;
  try {
    value = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof value !== "object" || value === null) return null;
  const msg = value as { type?: unknown };
  if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) return null;
  return value as ServerMessage;
}
