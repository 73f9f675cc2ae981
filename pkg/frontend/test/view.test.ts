import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { encodePpm, decodePpm } from "../src/ppm.js";
import type { DroneStateMessage, ServerMessage } from "../src/protocol.js";
import { parseServerMessage } from "../src/protocol.js";
import { initialViewState, onConnected, onDisconnected, onServerMessage } from "../src/view.js";

function droneState(i: number, lit = true): DroneStateMessage {
  return { type: "drone_state", t: i * 0.1, x: i * 0.01, y: 0, z: 1.5, led: [255, 0, 0], lit };
}

describe("view state", () => {
  it("maps drone_state messages to trail points one-to-one", () => {
    let state = onConnected(initialViewState());
    const n = 25;
    for (let i = 0; i < n; i++) {
      state = onServerMessage(state, droneState(i));
    }
    expect(state.trail.length).toBe(n);
    expect(state.trail[3]).toEqual({ x: 0.03, z: 1.5, led: [255, 0, 0], lit: true });
  });

  it("shows the server error code in the banner", () => {
    const state = onServerMessage(onConnected(initialViewState()), {
      type: "error",
      code: "capture_too_short",
      detail: "5 frames",
    });
    expect(state.lastError).toBe("capture_too_short");
    expect(state.banner).toContain("capture_too_short");
  });

  it("decodes an inline painting on paint_done", () => {
    const golden = readFileSync(new URL("../fixtures/o_golden.ppm", import.meta.url), "utf-8");
    const message: ServerMessage = {
      type: "paint_done",
      encoding: "ppm-base64",
      data: Buffer.from(golden, "latin1").toString("base64"),
    };
    const state = onServerMessage(onConnected(initialViewState()), message);
    expect(state.painting?.width).toBe(96);
    expect(state.painting?.height).toBe(96);
  });

  it("starts a fresh trail and painting when a flight begins", () => {
    let state = onConnected(initialViewState());
    state = onServerMessage(state, droneState(0));
    state = onServerMessage(state, { type: "state", mode: "flying" });
    expect(state.mode).toBe("flying");
    expect(state.trail).toEqual([]);
    expect(state.painting).toBeNull();
  });

  it("tracks prediction messages", () => {
    const state = onServerMessage(onConnected(initialViewState()), {
      type: "prediction",
      label: "O",
      posteriors: [0.1, 0.1, 0.6, 0.1, 0.1],
    });
    expect(state.prediction?.label).toBe("O");
  });

  it("raises the banner when the connection drops and clears it on reconnect", () => {
    let state = onConnected(initialViewState());
    expect(state.banner).toBeNull();
    state = onDisconnected(state, 500);
    expect(state.connected).toBe(false);
    expect(state.banner).toContain("connection lost");
    state = onConnected(state);
    expect(state.banner).toBeNull();
  });
});

describe("parseServerMessage", () => {
  it("accepts known types", () => {
    expect(parseServerMessage('{"type":"state","mode":"idle"}')).toEqual({
      type: "state",
      mode: "idle",
    });
  });

  it("returns null for junk", () => {
    expect(parseServerMessage("{oops")).toBeNull();
    expect(parseServerMessage('"string"')).toBeNull();
    expect(parseServerMessage('{"type":"teleport"}')).toBeNull();
  });
});
