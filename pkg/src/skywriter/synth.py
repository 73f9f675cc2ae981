"""Synthetic glove streams and dataset persistence.

A gesture is synthesized by dragging a virtual hand along the letter's glyph
polyline with a smooth speed profile, differentiating the position twice to
get accelerations, and dressing the result up as a real stream: a small
random tilt of the drawing plane, gravity on the out-of-plane axis, Gaussian
sensor noise, and unclasped lead frames on both sides.

Datasets are stored as line-delimited JSON (one sample per line, header
first) so they diff and append cleanly.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .glyph import LABELS, LABEL_INDEX, glyph_table
from .seeds import mix_seed
from .signal import (
    DEFAULT_GATE_THRESHOLD,
    FEATURE_LEN,
    FilterSpec,
    GestureCapture,
    ImuFrame,
    featurize,
    gate_capture,
)

GRAVITY = 9.81  # m/s^2, out-of-plane
LETTER_SIZE_M = 0.4  # side of the square the hand draws in

ORIGINS = ("synthetic", "recorded", "ui")

DATASET_VERSION = 1


class FormatError(Exception):
    """Malformed dataset file; message names the offending line."""


@dataclass(frozen=True)
class SynthParams:
    sample_rate: float = 50.0
    stroke_duration: float = 1.2
    noise_sigma: float = 0.4
    tilt_jitter: float = 0.05
    lead_frames: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sample_rate <= 0 or self.stroke_duration <= 0 or self.lead_frames <= 0:
            raise ValueError("sample_rate, stroke_duration, lead_frames must be positive")
        if self.noise_sigma < 0 or self.tilt_jitter < 0:
            raise ValueError("noise_sigma and tilt_jitter must be non-negative")


@dataclass(frozen=True)
class LabeledSample:
    features: np.ndarray  # shape (30,)
    label: str
    origin: str = "synthetic"

    def __post_init__(self) -> None:
        arr = np.asarray(self.features, dtype=np.float64)
        if arr.shape != (FEATURE_LEN,):
            raise ValueError(f"features must have length {FEATURE_LEN}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("features must be finite")
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        object.__setattr__(self, "features", arr)


@dataclass(frozen=True)
class Dataset:
    samples: tuple[LabeledSample, ...]

    @property
    def class_counts(self) -> dict[str, int]:
        counts = {label: 0 for label in LABELS}
        for s in self.samples:
            counts[s.label] += 1
        return counts

    def __len__(self) -> int:
        return len(self.samples)

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, y) views: features stacked row-wise, labels as indices."""
        if not self.samples:
            return np.empty((0, FEATURE_LEN)), np.empty((0,), dtype=np.int64)
        X = np.stack([s.features for s in self.samples])
        y = np.array([LABEL_INDEX[s.label] for s in self.samples], dtype=np.int64)
        return X, y


def _hand_polyline(label: str) -> np.ndarray:
    """Glyph strokes concatenated into one continuous hand path, in meters.

    The clasped hand keeps moving between strokes, so pen-up gaps become
    straight joins. Centered on the origin in the x-y plane.
    """
    pts: list[tuple[float, float]] = []
    for stroke in glyph_table(label).strokes:
        pts.extend(stroke)
    arr = (np.asarray(pts, dtype=np.float64) - 0.5) * LETTER_SIZE_M
    keep = [0]
    for i in range(1, len(arr)):
        if np.linalg.norm(arr[i] - arr[keep[-1]]) > 1e-12:
            keep.append(i)
    return arr[keep]


def _arc_interp(poly: np.ndarray, s: float) -> np.ndarray:
    """Point at arc length s along a polyline (clamped to its ends)."""
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = min(max(s, 0.0), cum[-1])
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(i, len(seg) - 1)
    u = (s - cum[i]) / seg[i]
    return poly[i] + u * (poly[i + 1] - poly[i])


def synth_gesture(label: str, params: SynthParams) -> list[ImuFrame]:
    """One synthetic glove stream for a letter; deterministic in (label, seed).

    Draw order from the seeded generator is fixed: two tilt angles first,
    then the noise block, so streams are reproducible.
    """
    if label not in LABELS:
        raise ValueError(f"unknown label {label!r}")
    rng = np.random.default_rng(params.seed)
    poly = _hand_polyline(label)
    total_len = float(np.linalg.norm(np.diff(poly, axis=0), axis=1).sum())

    T = params.stroke_duration
    dt = 1.0 / params.sample_rate
    n_stroke = int(round(T * params.sample_rate)) + 1

    def pos(t: float) -> np.ndarray:
        t = min(max(t, 0.0), T)
        s = total_len * (1.0 - math.cos(math.pi * t / T)) / 2.0  # eased speed
        return _arc_interp(poly, s)

    # planar acceleration by second central difference (hand at rest outside [0, T])
    acc_plane = np.array(
        [(pos((i + 1) * dt) - 2.0 * pos(i * dt) + pos((i - 1) * dt)) / dt**2 for i in range(n_stroke)]
    )

    th_x, th_y = rng.normal(0.0, params.tilt_jitter, size=2)
    rot_x = np.array(
        [[1, 0, 0], [0, math.cos(th_x), -math.sin(th_x)], [0, math.sin(th_x), math.cos(th_x)]]
    )
    rot_y = np.array(
        [[math.cos(th_y), 0, math.sin(th_y)], [0, 1, 0], [-math.sin(th_y), 0, math.cos(th_y)]]
    )
    tilt = rot_x @ rot_y

    acc3 = np.zeros((n_stroke, 3))
    acc3[:, :2] = acc_plane
    acc3 = acc3 @ tilt.T
    acc3[:, 2] += GRAVITY

    lead = params.lead_frames
    total = lead + n_stroke + lead
    noise = rng.normal(0.0, params.noise_sigma, size=(total, 3))

    frames: list[ImuFrame] = []
    rest = np.array([0.0, 0.0, GRAVITY])
    for i in range(total):
        in_stroke = lead <= i < lead + n_stroke
        a = (acc3[i - lead] if in_stroke else rest) + noise[i]
        frames.append(
            ImuFrame(t=i * dt, accel=(float(a[0]), float(a[1]), float(a[2])), flex=1.0 if in_stroke else 0.0)
        )
    return frames


def gen_dataset(
    n_per_class: int,
    params: SynthParams = SynthParams(),
    filter_spec: FilterSpec = FilterSpec(),
) -> Dataset:
    """Balanced synthetic dataset: n_per_class gated + featurized streams per letter.

    Per-sample seeds come from mix_seed(seed, label_index, sample_index), so
    samples are independent and the set is reproducible in any generation order.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    samples: list[LabeledSample] = []
    for label in LABELS:
        li = LABEL_INDEX[label]
        for si in range(n_per_class):
            p = replace(params, seed=mix_seed(params.seed, li, si))
            stream = synth_gesture(label, p)
            capture = gate_capture(stream, DEFAULT_GATE_THRESHOLD, source_id=f"synth-{label}-{si}")
            samples.append(LabeledSample(featurize(capture, filter_spec), label, "synthetic"))
    return Dataset(samples=tuple(samples))


def save_dataset(ds: Dataset, path: str) -> None:
    """Write JSONL: a header line, then one {label, origin, features} per sample."""
    with open(path, "w", encoding="utf-8") as f:
        _write_dataset(ds, f)


def _write_dataset(ds: Dataset, f: io.TextIOBase) -> None:
    header = {"version": DATASET_VERSION, "feature_len": FEATURE_LEN, "labels": list(LABELS)}
    f.write(json.dumps(header) + "\n")
    for s in ds.samples:
        rec = {"label": s.label, "origin": s.origin, "features": [float(v) for v in s.features]}
        f.write(json.dumps(rec) + "\n")


def load_dataset(path: str) -> Dataset:
    with open(path, "r", encoding="utf-8") as f:
        return _read_dataset(f)


def _read_dataset(f: io.TextIOBase) -> Dataset:
    lines = f.read().splitlines()
    if not lines:
        raise FormatError("line 1: missing header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise FormatError(f"line 1: invalid JSON header ({e.msg})") from e
    if not isinstance(header, dict) or header.get("version") != DATASET_VERSION:
        raise FormatError(f"line 1: unsupported dataset version {header!r:.60}")
    if header.get("feature_len") != FEATURE_LEN or header.get("labels") != list(LABELS):
        raise FormatError("line 1: header feature_len/labels mismatch")

    samples: list[LabeledSample] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"line {lineno}: invalid JSON ({e.msg})") from e
        try:
            features = np.asarray(rec["features"], dtype=np.float64)
            if features.shape != (FEATURE_LEN,):
                raise ValueError(f"expected {FEATURE_LEN} features, got {features.shape[0] if features.ndim == 1 else features.shape}")
            samples.append(LabeledSample(features, rec["label"], rec.get("origin", "synthetic")))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"line {lineno}: {e}") from e
    return Dataset(samples=tuple(samples))
