/** Pointer strokes to glove-style accelerometer messages.
 *
 * The conversion deliberately mirrors the backend's synthetic generator so
 * drawn strokes land in the distribution the default model was trained on:
 * the stroke's shape is re-traversed with an eased (cosine) tempo over a
 * fixed duration, accelerations come from second central differences, the
 * canvas square maps to the same physical letter size, gravity rides on the
 * out-of-plane axis, and unclasped rest frames pad both ends. The user's own
 * drawing tempo is discarded on purpose: the gesture is the shape, and
 * letting wall-clock speed scale the accelerations would push slow or fast
 * drawers out of distribution.
 */

import type { ImuMessage } from "./protocol.js";

export interface StrokeSample {
  /** seconds; only the order matters, tempo is re-normalized */
  t: number;
  /** canvas-normalized [0,1], x right */
  x: number;
  /** canvas-normalized [0,1], y up */
  y: number;
  pressed: boolean;
}

export class StrokeTooShort extends Error {}

export const SAMPLE_RATE_HZ = 50;
export const STROKE_DURATION_S = 1.2;
export const LETTER_SIZE_M = 0.4;
export const GRAVITY = 9.81;
export const LEAD_FRAMES = 10;

interface Polyline {
  points: Array<[number, number]>;
  cumulative: number[];
  length: number;
}

function pressedPolyline(samples: StrokeSample[]): Polyline {
  const points: Array<[number, number]> = [];
  for (const s of samples) {
    if (!s.pressed) continue;
    const p: [number, number] = [s.x, s.y];
    const last = points[points.length - 1];
    if (last && Math.hypot(p[0] - last[0], p[1] - last[1]) < 1e-12) continue;
    points.push(p);
  }
  const cumulative = [0];
  for (let i = 1; i < points.length; i++) {
    const [ax, ay] = points[i - 1];
    const [bx, by] = points[i];
    cumulative.push(cumulative[i - 1] + Math.hypot(bx - ax, by - ay));
  }
  return { points, cumulative, length: cumulative[cumulative.length - 1] ?? 0 };
}

function pointAtArc(poly: Polyline, s: number): [number, number] {
  const { points, cumulative, length } = poly;
  if (points.length === 1 || length === 0) return points[0];
  const target = Math.min(Math.max(s, 0), length);
  let i = 0;
  while (i < cumulative.length - 2 && cumulative[i + 1] < target) i++;
  const segLen = cumulative[i + 1] - cumulative[i];
  const u = segLen === 0 ? 0 : (target - cumulative[i]) / segLen;
  const [ax, ay] = points[i];
  const [bx, by] = points[i + 1];
  return [ax + (bx - ax) * u, ay + (by - ay) * u];
}

/** Convert one drawn stroke into an ordered list of imu messages. */
export function strokeToImu(samples: StrokeSample[], rate: number = SAMPLE_RATE_HZ): ImuMessage[] {
  if (samples.filter((s) => s.pressed).length < 3) {
    throw new StrokeTooShort("need at least 3 pressed samples");
  }
  const poly = pressedPolyline(samples);
  const T = STROKE_DURATION_S;
  const dt = 1 / rate;
  const nStroke = Math.round(T * rate) + 1;

  const position = (t: number): [number, number] => {
    const clamped = Math.min(Math.max(t, 0), T);
    const arc = (poly.length * (1 - Math.cos((Math.PI * clamped) / T))) / 2;
    const [x, y] = pointAtArc(poly, arc);
    return [(x - 0.5) * LETTER_SIZE_M, (y - 0.5) * LETTER_SIZE_M];
  };

  const messages: ImuMessage[] = [];
  let k = 0;
  const rest = (): void => {
    messages.push({ type: "imu", t: k * dt, ax: 0, ay: 0, az: GRAVITY, flex: 0 });
    k++;
  };
  for (let i = 0; i < LEAD_FRAMES; i++) rest();
  for (let i = 0; i < nStroke; i++) {
    const [xPrev, yPrev] = position((i - 1) * dt);
    const [xHere, yHere] = position(i * dt);
    const [xNext, yNext] = position((i + 1) * dt);
    messages.push({
      type: "imu",
      t: k * dt,
      ax: (xNext - 2 * xHere + xPrev) / (dt * dt),
      ay: (yNext - 2 * yHere + yPrev) / (dt * dt),
      az: GRAVITY,
      flex: 1,
    });
    k++;
  }
  for (let i = 0; i < LEAD_FRAMES; i++) rest();
  return messages;
}
