/** DOM wiring: stroke pad, live drone trail, finished painting, status line. */

import { ReconnectingClient } from "./client.js";
import { toRgba } from "./ppm.js";
import { parseServerMessage } from "./protocol.js";
import { strokeToImu, StrokeSample, StrokeTooShort } from "./stroke.js";
import { initialViewState, onConnected, onDisconnected, onServerMessage, ViewState } from "./view.js";

const padCanvas = document.getElementById("pad") as HTMLCanvasElement;
const trailCanvas = document.getElementById("trail") as HTMLCanvasElement;
const paintCanvas = document.getElementById("painting") as HTMLCanvasElement;
const statusLine = document.getElementById("status") as HTMLElement;
const bannerBox = document.getElementById("banner") as HTMLElement;
const predictionBox = document.getElementById("prediction") as HTMLElement;
const serverInput = document.getElementById("server-url") as HTMLInputElement;
const connectButton = document.getElementById("connect") as HTMLButtonElement;

let state: ViewState = initialViewState();
let client: ReconnectingClient | null = null;
let samples: StrokeSample[] = [];
let drawing = false;
let strokeStart = 0;

function setState(next: ViewState): void {
  state = next;
  render();
}

function render(): void {
  statusLine.textContent = `mode: ${state.mode}${state.connected ? "" : " (offline)"}`;
  bannerBox.textContent = state.banner ?? "";
  bannerBox.style.display = state.banner ? "block" : "none";
  predictionBox.textContent = state.prediction
    ? `prediction: ${state.prediction.label}  (p=${Math.max(...state.prediction.posteriors).toFixed(2)})`
    : "";
  drawTrail();
  drawPainting();
}

function drawTrail(): void {
  const ctx = trailCanvas.getContext("2d")!;
  ctx.fillStyle = "#101018";
  ctx.fillRect(0, 0, trailCanvas.width, trailCanvas.height);
  // world window matches the service camera: frame 1 m x 1 m at z=1.5, 10% margin
  const xMin = -0.6, xMax = 0.6, zMin = 0.9, zMax = 2.1;
  const px = (x: number) => ((x - xMin) / (xMax - xMin)) * trailCanvas.width;
  const py = (z: number) => ((zMax - z) / (zMax - zMin)) * trailCanvas.height;
  for (let i = 1; i < state.trail.length; i++) {
    const a = state.trail[i - 1];
    const b = state.trail[i];
    ctx.strokeStyle = b.lit ? `rgb(${b.led[0]},${b.led[1]},${b.led[2]})` : "#3a3a46";
    ctx.lineWidth = b.lit ? 3 : 1;
    ctx.beginPath();
    ctx.moveTo(px(a.x), py(a.z));
    ctx.lineTo(px(b.x), py(b.z));
    ctx.stroke();
  }
}

function drawPainting(): void {
  const ctx = paintCanvas.getContext("2d")!;
  ctx.fillStyle = "black";
  ctx.fillRect(0, 0, paintCanvas.width, paintCanvas.height);
  if (!state.painting) return;
  paintCanvas.width = state.painting.width;
  paintCanvas.height = state.painting.height;
  const image = new ImageData(toRgba(state.painting), state.painting.width, state.painting.height);
  ctx.putImageData(image, 0, 0);
}

function padPoint(ev: PointerEvent): StrokeSample {
  const rect = padCanvas.getBoundingClientRect();
  return {
    t: (performance.now() - strokeStart) / 1000,
    x: Math.min(Math.max((ev.clientX - rect.left) / rect.width, 0), 1),
    y: Math.min(Math.max(1 - (ev.clientY - rect.top) / rect.height, 0), 1), // y up
    pressed: true,
  };
}

function clearPad(): void {
  const ctx = padCanvas.getContext("2d")!;
  ctx.fillStyle = "#181820";
  ctx.fillRect(0, 0, padCanvas.width, padCanvas.height);
}

padCanvas.addEventListener("pointerdown", (ev) => {
  drawing = true;
  strokeStart = performance.now();
  samples = [padPoint(ev)];
  clearPad();
  padCanvas.setPointerCapture(ev.pointerId);
});

padCanvas.addEventListener("pointermove", (ev) => {
  if (!drawing) return;
  const sample = padPoint(ev);
  const prev = samples[samples.length - 1];
  samples.push(sample);
  const ctx = padCanvas.getContext("2d")!;
  ctx.strokeStyle = "#8fd3ff";
  ctx.lineWidth = 4;
  ctx.lineCap = "round";
  ctx.beginPath();
  ctx.moveTo(prev.x * padCanvas.width, (1 - prev.y) * padCanvas.height);
  ctx.lineTo(sample.x * padCanvas.width, (1 - sample.y) * padCanvas.height);
  ctx.stroke();
});

padCanvas.addEventListener("pointerup", () => {
  if (!drawing) return;
  drawing = false;
  try {
    const messages = strokeToImu(samples);
    for (const msg of messages) {
      client?.send(JSON.stringify(msg));
    }
  } catch (e) {
    if (e instanceof StrokeTooShort) {
      setState({ ...state, banner: "stroke too short; draw a bigger letter" });
      setTimeout(() => setState({ ...state, banner: state.connected ? null : state.banner }), 1500);
    } else {
      throw e;
    }
  }
  samples = [];
});

function connect(url: string): void {
  client?.stop();
  state = initialViewState();
  client = new ReconnectingClient(url, {
    onOpen: () => setState(onConnected(state)),
    onDisconnect: (retryMs) => setState(onDisconnected(state, retryMs)),
    onMessage: (text) => {
      const msg = parseServerMessage(text);
      if (msg) setState(onServerMessage(state, msg));
    },
  });
  client.connect();
  render();
}

connectButton.addEventListener("click", () => connect(serverInput.value));

clearPad();
connect(serverInput.value);
