/** Pure view state for the three panels; the DOM layer just paints this.
 *
 * The client renders only what the server sends: no local classification,
 * no local flight model.
 */

import type { PpmImage } from "./ppm.js";
import { decodeBase64Ppm } from "./ppm.js";
import type { ServerMessage } from "./protocol.js";

export interface TrailPoint {
  x: number;
  z: number;
  led: [number, number, number];
  lit: boolean;
}

export interface ViewState {
  mode: "idle" | "capturing" | "flying";
  connected: boolean;
  banner: string | null;
  prediction: { label: string; posteriors: number[] } | null;
  trail: TrailPoint[];
  painting: PpmImage | null;
  lastError: string | null;
}

export function initialViewState(): ViewState {
  return {
    mode: "idle",
    connected: false,
    banner: "connecting...",
    prediction: null,
    trail: [],
    painting: null,
    lastError: null,
  };
}

export function onConnected(state: ViewState): ViewState {
  return { ...state, connected: true, banner: null };
}

export function onDisconnected(state: ViewState, retryInMs: number): ViewState {
  return {
    ...state,
    connected: false,
    mode: "idle",
    banner: `connection lost; retrying in ${(retryInMs / 1000).toFixed(1)}s`,
  };
}

export function onServerMessage(state: ViewState, msg: ServerMessage): ViewState {
  switch (msg.type) {
    case "state": {
      const next: ViewState = { ...state, mode: msg.mode };
      if (msg.mode === "flying") {
        next.trail = [];
        next.painting = null;
      }
      return next;
    }
    case "prediction":
      return { ...state, prediction: { label: msg.label, posteriors: msg.posteriors } };
    case "drone_state":
      return {
        ...state,
        trail: [...state.trail, { x: msg.x, z: msg.z, led: msg.led, lit: msg.lit }],
      };
    case "paint_done": {
      if (msg.encoding !== "ppm-base64") {
        return { ...state, lastError: `unsupported paint encoding ${msg.encoding}` };
      }
      return { ...state, painting: decodeBase64Ppm(msg.data) };
    }
    case "error":
      return { ...state, lastError: msg.code, banner: `server error: ${msg.code}` };
  }
}
