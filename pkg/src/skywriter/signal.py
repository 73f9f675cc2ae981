"""Raw glove stream to classifier features.

The pipeline is: clasp-gate the stream, zero-phase low-pass each acceleration
axis, resample each axis to 10 points, concatenate axis-major into a 30-value
feature vector. Everything here is a pure function; train and inference go
through the same code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, filtfilt as _scipy_filtfilt

FEATURES_PER_AXIS = 10
FEATURE_LEN = 3 * FEATURES_PER_AXIS

DEFAULT_GATE_THRESHOLD = 0.5
DEFAULT_MIN_CAPTURE_LEN = 12


class NoGesture(Exception):
    """No clasped run long enough to be a gesture."""


class SignalTooShort(Exception):
    """Sequence too short to filter with the requested padding."""


class BadLength(Exception):
    """Resample preconditions violated."""


@dataclass(frozen=True)
class ImuFrame:
    """One timestamped glove reading: 3-axis acceleration [m/s^2] plus flex in [0, 1]."""

    t: float
    accel: tuple[float, float, float]
    flex: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise ValueError(f"timestamp must be finite and non-negative, got {self.t}")
        if not all(math.isfinite(a) for a in self.accel):
            raise ValueError(f"acceleration must be finite, got {self.accel}")
        if not (0.0 <= self.flex <= 1.0):
            raise ValueError(f"flex must be in [0, 1], got {self.flex}")


@dataclass(frozen=True)
class GestureCapture:
    """The gated clasp window of a stream."""

    frames: tuple[ImuFrame, ...]
    source_id: str = ""

    def axis(self, i: int) -> np.ndarray:
        return np.array([f.accel[i] for f in self.frames], dtype=np.float64)


@dataclass(frozen=True)
class FilterSpec:
    """Low-pass Butterworth design used by the zero-phase filter.

    cutoff_ratio is a fraction of Nyquist, so the design survives sample-rate
    changes. pad_len defaults to 3 x order (reflection padding per side).
    """

    order: int = 2
    cutoff_ratio: float = 0.2
    pad_len: int | None = None  # None -> 3 * order

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if not 0.0 < self.cutoff_ratio < 1.0:
            raise ValueError(f"cutoff_ratio must be in (0, 1), got {self.cutoff_ratio}")
        if self.pad_len is None:
            object.__setattr__(self, "pad_len", 3 * self.order)
        elif self.pad_len < 0:
            raise ValueError(f"pad_len must be non-negative, got {self.pad_len}")

    def coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """(b, a) transfer-function coefficients; unity DC gain by construction."""
        b, a = butter(self.order, self.cutoff_ratio, btype="low")
        return b, a


def gate_capture(
    stream: list[ImuFrame] | tuple[ImuFrame, ...],
    threshold: float,
    min_capture_len: int = DEFAULT_MIN_CAPTURE_LEN,
    source_id: str = "",
) -> GestureCapture:
    """Extract the longest contiguous clasped run (flex >= threshold).

    Ties go to the earliest run. Raises NoGesture when nothing qualifies or
    the best run is shorter than min_capture_len.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    ts = [f.t for f in stream]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("stream timestamps must be strictly increasing")

    best_start, best_len = -1, 0
    run_start = -1
    for i, frame in enumerate(stream):
        if frame.flex >= threshold:
            if run_start < 0:
                run_start = i
            run_len = i - run_start + 1
            if run_len > best_len:  # strict: earliest run wins ties
                best_start, best_len = run_start, run_len
        else:
            run_start = -1

    if best_len == 0:
        raise NoGesture("no frame reaches the clasp threshold")
    if best_len < min_capture_len:
        raise NoGesture(
            f"longest clasped run has {best_len} frames, need {min_capture_len}"
        )
    frames = tuple(stream[best_start : best_start + best_len])
    return GestureCapture(frames=frames, source_id=source_id)


def filtfilt(x: np.ndarray | list[float], spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """Zero-phase low-pass: forward-backward IIR over an odd-reflection pad.

    The pad (spec.pad_len samples per side) absorbs edge transients and is
    removed before return; output length equals input length.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("expected a 1-D sequence")
    if arr.size <= spec.pad_len:
        raise SignalTooShort(
            f"need more than pad_len={spec.pad_len} samples, got {arr.size}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("input values must be finite")
    b, a = spec.coefficients()
    return _scipy_filtfilt(b, a, arr, padtype="odd", padlen=spec.pad_len)


def resample(x: np.ndarray | list[float], n: int) -> np.ndarray:
    """Linear interpolation onto n evenly spaced positions over [0, len(x)-1].

    Endpoints are preserved exactly.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise BadLength(f"need at least 2 input values, got shape {arr.shape}")
    if n < 2:
        raise BadLength(f"need at least 2 output values, got {n}")
    positions = np.arange(n, dtype=np.float64) * (arr.size - 1) / (n - 1)
    return np.interp(positions, np.arange(arr.size, dtype=np.float64), arr)


def featurize(capture: GestureCapture, spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """30-value feature vector: per axis, filter then reduce to 10 points.

    Axis-major layout [x0..x9, y0..y9, z0..z9]; identical at train and
    inference time.
    """
    parts = [
        resample(filtfilt(capture.axis(i), spec), FEATURES_PER_AXIS) for i in range(3)
    ]
    return np.concatenate(parts)
