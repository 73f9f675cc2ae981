"""Quadcopter stand-in: PD-tracked point mass plus long-exposure rendering.

The vehicle is a double integrator under a critically damped PD law, stepped
with symplectic Euler at 100 Hz while setpoints stream in at 10 Hz
(zero-order hold). The painted image integrates the LED color at the drone's
position over time, like a camera shutter left open, then normalizes to full
brightness. Output is plain-text PPM so goldens diff byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .glyph import V_MAX, LetterPath, PaintFrame

DIVERGENCE_LIMIT = 10.0  # m, any position beyond this aborts the flight
SPEED_CLAMP = 2.0 * V_MAX  # sanity ceiling on simulated speed
SETTLE_TAIL = 1.0  # s of extra simulation after the last setpoint

SPOT_SIGMA = 1.5  # px
SPOT_RADIUS = 4  # px


class DivergenceError(Exception):
    """Simulated flight left the sane envelope."""


@dataclass(frozen=True)
class ControllerGains:
    """accel = kp * (setpoint - position) - kd * velocity.

    Defaults are critically damped (kd^2 == 4 * kp, natural frequency 2 rad/s).
    """

    kp: float = 4.0
    kd: float = 4.0
    dt: float = 0.01

    def __post_init__(self) -> None:
        if self.kp <= 0 or self.kd <= 0:
            raise ValueError("gains must be positive")
        if not 0.0 < self.dt <= 0.05:
            raise ValueError(f"dt must be in (0, 0.05], got {self.dt}")


@dataclass(frozen=True)
class DroneState:
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    led: tuple[int, int, int] = (0, 0, 0)
    lit: bool = False
    t: float = 0.0


@dataclass(frozen=True)
class FlightTrace:
    states: tuple[DroneState, ...]
    dt: float


def step(
    state: DroneState, setpoint: tuple[float, float, float], gains: ControllerGains
) -> DroneState:
    """Advance one dt: symplectic Euler (velocity first) under the PD law."""
    pos = np.asarray(state.position)
    vel = np.asarray(state.velocity)
    accel = gains.kp * (np.asarray(setpoint) - pos) - gains.kd * vel
    vel = vel + accel * gains.dt
    speed = float(np.linalg.norm(vel))
    if speed > SPEED_CLAMP:
        vel = vel * (SPEED_CLAMP / speed)
    pos = pos + vel * gains.dt
    return DroneState(
        position=(float(pos[0]), float(pos[1]), float(pos[2])),
        velocity=(float(vel[0]), float(vel[1]), float(vel[2])),
        led=state.led,
        lit=state.lit,
        t=state.t + gains.dt,
    )


def _step_count(duration: float, dt: float) -> int:
    # guard against float fuzz pushing an exact multiple over the next integer
    return max(1, math.ceil(duration / dt - 1e-9))


def fly_path(path: LetterPath, gains: ControllerGains = ControllerGains()) -> FlightTrace:
    """Track a setpoint schedule from rest at its first position.

    Each setpoint is held until its timestamp elapses; after the last one the
    sim runs a settle tail so the trace ends parked. LED state mirrors the
    active setpoint. Raises DivergenceError if the position norm ever exceeds
    the sanity limit.
    """
    sps = path.setpoints
    n_steps = _step_count(path.duration + SETTLE_TAIL, gains.dt)

    state = DroneState(position=sps[0].position, led=sps[0].led, lit=sps[0].lit)
    states: list[DroneState] = []
    active = 0
    for k in range(n_steps):
        t = k * gains.dt
        while active + 1 < len(sps) and sps[active + 1].t <= t + 1e-12:
            active += 1
        sp = sps[active]
        state = DroneState(
            position=state.position,
            velocity=state.velocity,
            led=sp.led,
            lit=sp.lit,
            t=state.t,
        )
        state = step(state, sp.position, gains)
        if np.linalg.norm(state.position) > DIVERGENCE_LIMIT:
            raise DivergenceError(f"position {state.position} beyond {DIVERGENCE_LIMIT} m at t={state.t:.2f}")
        states.append(state)
    return FlightTrace(states=tuple(states), dt=gains.dt)


def path_tracking_error(trace: FlightTrace, path: LetterPath) -> float:
    """Max distance from the flown positions to the commanded path geometry.

    The PD loop trails the moving setpoint along its track by design; what
    distorts the painting is deviation from the commanded polyline, so that
    is what we measure.
    """
    verts = np.asarray([sp.position for sp in path.setpoints])
    a = verts[:-1]
    ab = verts[1:] - a
    seg_len2 = np.einsum("ij,ij->i", ab, ab)
    seg_len2[seg_len2 == 0.0] = 1.0  # degenerate segments reduce to endpoint distance
    worst = 0.0
    for s in trace.states:
        p = np.asarray(s.position)
        u = np.clip(np.einsum("ij,ij->i", p - a, ab) / seg_len2, 0.0, 1.0)
        closest = a + u[:, None] * ab
        d = float(np.sqrt(((closest - p) ** 2).sum(axis=1)).min())
        worst = max(worst, d)
    return worst


@dataclass
class PaintCanvas:
    """Accumulating exposure buffer with an orthographic x-z camera."""

    width: int = 512
    height: int = 512
    x_min: float = -0.6
    x_max: float = 0.6
    z_min: float = 0.9
    z_max: float = 2.1
    pixels: np.ndarray | None = None  # (height, width, 3) float64

    def __post_init__(self) -> None:
        if self.pixels is None:
            self.pixels = np.zeros((self.height, self.width, 3), dtype=np.float64)

    @classmethod
    def from_frame(
        cls, frame: PaintFrame, width: int = 512, height: int = 512, margin: float = 0.1
    ) -> "PaintCanvas":
        """Camera window: the frame rectangle grown by `margin` of its size per side."""
        cx, _, cz = frame.center
        mx = frame.width * margin
        mz = frame.height * margin
        return cls(
            width=width,
            height=height,
            x_min=cx - frame.width / 2 - mx,
            x_max=cx + frame.width / 2 + mx,
            z_min=cz - frame.height / 2 - mz,
            z_max=cz + frame.height / 2 + mz,
        )

    def project(self, x: float, z: float) -> tuple[float, float]:
        """World (x, z) to fractional (col, row); pixel centers at integers, row 0 at top."""
        col = (x - self.x_min) / (self.x_max - self.x_min) * self.width - 0.5
        row = (self.z_max - z) / (self.z_max - self.z_min) * self.height - 0.5
        return col, row

    def to_rgb8(self) -> np.ndarray:
        """Export: scale so the brightest channel hits 255, then quantize."""
        peak = float(self.pixels.max())
        scaled = self.pixels * (255.0 / peak) if peak > 0 else self.pixels
        return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def render_exposure(trace: FlightTrace, canvas: PaintCanvas | None = None) -> PaintCanvas:
    """Integrate lit LED positions into the canvas as Gaussian spots.

    Each lit state deposits its color scaled by the step duration; unlit
    states leave no trace. Accumulation is linear, so rendering a trace in
    pieces sums to rendering it whole.
    """
    if canvas is None:
        canvas = PaintCanvas()
    two_sigma2 = 2.0 * SPOT_SIGMA * SPOT_SIGMA
    for s in trace.states:
        if not s.lit:
            continue
        col_f, row_f = canvas.project(s.position[0], s.position[2])
        r0 = max(0, math.ceil(row_f - SPOT_RADIUS))
        r1 = min(canvas.height - 1, math.floor(row_f + SPOT_RADIUS))
        c0 = max(0, math.ceil(col_f - SPOT_RADIUS))
        c1 = min(canvas.width - 1, math.floor(col_f + SPOT_RADIUS))
        if r0 > r1 or c0 > c1:
            continue
        rows = np.arange(r0, r1 + 1, dtype=np.float64)
        cols = np.arange(c0, c1 + 1, dtype=np.float64)
        d2 = (rows[:, None] - row_f) ** 2 + (cols[None, :] - col_f) ** 2
        spot = np.exp(-d2 / two_sigma2) * trace.dt
        canvas.pixels[r0 : r1 + 1, c0 : c1 + 1] += spot[:, :, None] * np.asarray(s.led, dtype=np.float64)
    return canvas


def ppm_bytes(canvas: PaintCanvas) -> bytes:
    """ASCII PPM (P3, maxval 255), one text line per pixel row."""
    rgb = canvas.to_rgb8()
    h, w, _ = rgb.shape
    lines = [f"P3\n{w} {h}\n255\n"]
    flat = rgb.reshape(h, w * 3)
    for row in flat:
        lines.append(" ".join(str(int(v)) for v in row) + "\n")
    return "".join(lines).encode("ascii")


def save_image(canvas: PaintCanvas, path: str) -> None:
    with open(path, "wb") as f:
        f.write(ppm_bytes(canvas))


def save_trace(trace: FlightTrace, path: str) -> None:
    """Line-delimited JSON states, one per simulation step."""
    import json

    with open(path, "w", encoding="utf-8") as f:
        for s in trace.states:
            f.write(
                json.dumps(
                    {
                        "t": s.t,
                        "position": list(s.position),
                        "velocity": list(s.velocity),
                        "led": list(s.led),
                        "lit": s.lit,
                    }
                )
                + "\n"
            )


def parse_ppm(data: bytes) -> tuple[int, int, np.ndarray]:
    """Parse P3 text back into (width, height, uint8 array (h, w, 3))."""
    tokens = data.decode("ascii").split()
    if not tokens or tokens[0] != "P3":
        raise ValueError("not a P3 PPM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    values = np.array(tokens[4 : 4 + w * h * 3], dtype=np.int64)
    if values.size != w * h * 3:
        raise ValueError("pixel data truncated")
    return w, h, values.reshape(h, w, 3).astype(np.uint8)
