"""Letter geometry and its conversion to timed flight setpoints.

Glyphs are polyline tables in the unit square (y up), loaded from a versioned
JSON resource so new figures can be added without touching code. A glyph is
scaled into a vertical painting frame (world x-z plane) and traversed at
constant speed to produce an LED setpoint schedule for the simulator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

LABELS: tuple[str, ...] = ("S", "K", "O", "L", "J")
LABEL_INDEX: dict[str, int] = {lab: i for i, lab in enumerate(LABELS)}

# LED colors cycled per stroke: red, green, blue, yellow, magenta, cyan.
PALETTE: tuple[tuple[int, int, int], ...] = (
    (255, 0, 0),
    (0, 255, 0),
    (0, 0, 255),
    (255, 255, 0),
    (255, 0, 255),
    (0, 255, 255),
)

V_MAX = 1.0  # m/s, ceiling for commanded traversal speed
MIN_CLEARANCE = 0.2  # m, frame must stay this far above the floor

DEFAULT_SPEED = 0.5  # m/s
DEFAULT_RATE = 10.0  # setpoints per second

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]


class FrameTooLow(Exception):
    """Painting frame would dip below the floor clearance."""


class UnknownLabel(Exception):
    """Label not present in the glyph table."""


@dataclass(frozen=True)
class PaintFrame:
    """Vertical rectangle (x-z plane, normal along y) the letter is painted in."""

    center: Point3 = (0.0, 0.0, 1.5)
    width: float = 1.0
    height: float = 1.0

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame width and height must be positive")

    def validate_clearance(self) -> None:
        if self.center[2] - self.height / 2 < MIN_CLEARANCE:
            raise FrameTooLow(
                f"frame bottom {self.center[2] - self.height / 2:.3f} m is below "
                f"the {MIN_CLEARANCE} m clearance"
            )


@dataclass(frozen=True)
class Glyph:
    """Stroke polylines in the unit square; pen lifts between strokes."""

    label: str
    strokes: tuple[tuple[Point2, ...], ...]

    def __post_init__(self) -> None:
        if not self.strokes:
            raise ValueError("glyph needs at least one stroke")
        for stroke in self.strokes:
            if len(stroke) < 2:
                raise ValueError("each stroke needs at least 2 points")
            for x, y in stroke:
                if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                    raise ValueError(f"glyph point {(x, y)} outside unit square")


@dataclass(frozen=True)
class Setpoint:
    t: float
    position: Point3
    led: tuple[int, int, int]
    lit: bool


@dataclass(frozen=True)
class LetterPath:
    """Time-ordered setpoint/color schedule for one painted letter."""

    label: str
    setpoints: tuple[Setpoint, ...]
    rate: float

    @property
    def duration(self) -> float:
        return self.setpoints[-1].t


@lru_cache(maxsize=1)
def _load_table() -> dict[str, Glyph]:
    raw = json.loads(
        resources.files("skywriter.resources").joinpath("glyphs.json").read_text()
    )
    if raw.get("version") != 1:
        raise ValueError(f"unsupported glyph table version {raw.get('version')!r}")
    table = {}
    for label, strokes in raw["glyphs"].items():
        table[label] = Glyph(
            label=label,
            strokes=tuple(tuple((float(x), float(y)) for x, y in s) for s in strokes),
        )
    return table


def glyph_table(label: str) -> Glyph:
    """Look up the built-in glyph for a letter."""
    table = _load_table()
    if label not in table:
        raise UnknownLabel(f"no glyph for {label!r}; have {sorted(table)}")
    return table[label]


def _scale_to_frame(p: Point2, frame: PaintFrame) -> Point3:
    cx, cy, cz = frame.center
    return (cx + (p[0] - 0.5) * frame.width, cy, cz + (p[1] - 0.5) * frame.height)


def _legs(glyph: Glyph, frame: PaintFrame) -> list[tuple[Point3, Point3, bool, tuple[int, int, int]]]:
    """Straight legs of the full journey: lead-in, strokes, transits, lead-out.

    Each leg is (start, end, lit, color). Zero-length legs are dropped.
    """
    center = frame.center
    legs: list[tuple[Point3, Point3, bool, tuple[int, int, int]]] = []
    dark = (0, 0, 0)

    def add(a: Point3, b: Point3, lit: bool, color: tuple[int, int, int]) -> None:
        if math.dist(a, b) > 1e-12:
            legs.append((a, b, lit, color))

    cursor = center
    for i, stroke in enumerate(glyph.strokes):
        pts = [_scale_to_frame(p, frame) for p in stroke]
        color = PALETTE[i % len(PALETTE)]
        add(cursor, pts[0], False, dark)  # lead-in / pen-up transit
        for a, b in zip(pts, pts[1:]):
            add(a, b, True, color)
        cursor = pts[-1]
    add(cursor, center, False, dark)  # lead-out
    return legs


def path_from_glyph(
    glyph: Glyph,
    frame: PaintFrame = PaintFrame(),
    speed: float = DEFAULT_SPEED,
    rate: float = DEFAULT_RATE,
) -> LetterPath:
    """Traverse the scaled glyph at constant speed, sampling at the given rate.

    Every leg is stretched to a whole number of ticks (rounding its duration
    up), so stroke endpoints always land on the sample grid and per-leg speed
    never exceeds the request. Samples on a lit leg, endpoints included, carry
    that stroke's color; everything else is dark transit.
    """
    if not 0.0 < speed <= V_MAX:
        raise ValueError(f"speed must be in (0, {V_MAX}], got {speed}")
    if rate < 1.0:
        raise ValueError(f"rate must be >= 1 Hz, got {rate}")
    frame.validate_clearance()

    legs = _legs(glyph, frame)
    tick_spans: list[tuple[int, int]] = []  # inclusive tick range per leg
    tick = 0
    for a, b, _, _ in legs:
        n = max(1, math.ceil(math.dist(a, b) * rate / speed - 1e-9))
        tick_spans.append((tick, tick + n))
        tick += n
    total_ticks = tick

    positions: list[Point3] = [legs[0][0]] * (total_ticks + 1)
    lit_flags = [False] * (total_ticks + 1)
    colors: list[tuple[int, int, int]] = [(0, 0, 0)] * (total_ticks + 1)

    for (a, b, lit, color), (t0, t1) in zip(legs, tick_spans):
        n = t1 - t0
        for k in range(t0, t1 + 1):
            u = (k - t0) / n
            positions[k] = (
                a[0] + (b[0] - a[0]) * u,
                a[1] + (b[1] - a[1]) * u,
                a[2] + (b[2] - a[2]) * u,
            )
        if lit:  # closed interval: stroke endpoints paint too
            for k in range(t0, t1 + 1):
                lit_flags[k] = True
                colors[k] = color

    setpoints = tuple(
        Setpoint(t=k / rate, position=positions[k], led=colors[k], lit=lit_flags[k])
        for k in range(total_ticks + 1)
    )
    return LetterPath(label=glyph.label, setpoints=setpoints, rate=rate)


def letter_path(
    label: str,
    frame: PaintFrame = PaintFrame(),
    speed: float = DEFAULT_SPEED,
    rate: float = DEFAULT_RATE,
) -> LetterPath:
    """Setpoint schedule for a built-in letter."""
    return path_from_glyph(glyph_table(label), frame, speed, rate)
