"""Shared domain containers: exposure intervals, events, videos, blurry frames.

Frames are plain ``(h, w)`` float64 arrays with intensities nominally in
[0, 1]. Intermediate values are never clamped; clamping happens only when a
frame is exported to an 8-bit format (see :mod:`ecir.io`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = [
    "ExposureInterval",
    "Event",
    "EventStream",
    "BlurryFrame",
    "SharpVideo",
]


@dataclass(frozen=True)
class ExposureInterval:
    """Time window [t_start, t_end] over which the conventional sensor integrates."""

    t_start: float
    t_end: float

    def __post_init__(self) -> None:
        if not (self.t_end > self.t_start):
            raise ValueError(
                f"degenerate exposure interval [{self.t_start}, {self.t_end}]"
            )

    @property
    def length(self) -> float:
        return self.t_end - self.t_start

    def contains(self, t, tol: float = 0.0) -> bool:
        t = np.asarray(t)
        return bool(np.all((t >= self.t_start - tol) & (t <= self.t_end + tol)))

    def normalize(self, t):
        """Map absolute seconds to the normalized domain [-1, 1]."""
        return 2.0 * (np.asarray(t, dtype=np.float64) - self.t_start) / self.length - 1.0

    def denormalize(self, tau):
        return self.t_start + (np.asarray(tau, dtype=np.float64) + 1.0) * (self.length / 2.0)

    def uniform_times(self, count: int) -> np.ndarray:
        """``count`` timestamps spanning the interval inclusively."""
        if count < 1:
            raise ValueError("count must be >= 1")
        if count == 1:
            return np.array([0.5 * (self.t_start + self.t_end)])
        return np.linspace(self.t_start, self.t_end, count)


@dataclass(frozen=True)
class Event:
    """A single intensity-change record."""

    x: int
    y: int
    t: float
    p: int

    def __post_init__(self) -> None:
        if self.p not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.p}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"negative pixel coordinates ({self.x}, {self.y})")


@dataclass
class EventStream:
    """Events sorted by time, all inside one exposure interval.

    Stored as structure-of-arrays for vectorized processing. ``x``/``y`` are
    int64 pixel indices, ``t`` float64 seconds, ``p`` int64 in {-1, +1}.
    """

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray
    interval: ExposureInterval

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.t = np.asarray(self.t, dtype=np.float64)
        self.p = np.asarray(self.p, dtype=np.int64)
        n = self.t.shape[0]
        if not (self.x.shape == self.y.shape == self.p.shape == (n,)):
            raise ValueError("event component arrays must share one length")
        if n:
            if np.any(np.diff(self.t) < 0):
                raise ValueError("event timestamps must be sorted non-decreasing")
            if not self.interval.contains(self.t):
                raise ValueError("event timestamps fall outside the exposure interval")
            if np.any((self.p != 1) & (self.p != -1)):
                raise ValueError("polarities must be -1 or +1")
            if np.any(self.x < 0) or np.any(self.y < 0):
                raise ValueError("pixel indices must be non-negative")

    @classmethod
    def empty(cls, interval: ExposureInterval) -> "EventStream":
        z = np.zeros(0)
        return cls(z, z, z, z, interval)

    @classmethod
    def from_events(cls, events, interval: ExposureInterval) -> "EventStream":
        events = list(events)
        x = np.array([e.x for e in events], dtype=np.int64)
        y = np.array([e.y for e in events], dtype=np.int64)
        t = np.array([e.t for e in events], dtype=np.float64)
        p = np.array([e.p for e in events], dtype=np.int64)
        return cls(x, y, t, p, interval)

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def __iter__(self) -> Iterator[Event]:
        for x, y, t, p in zip(self.x, self.y, self.t, self.p):
            yield Event(int(x), int(y), float(t), int(p))

    def pixel_times(self, x: int, y: int) -> np.ndarray:
        """Timestamps of this pixel's events, in time order."""
        mask = (self.x == x) & (self.y == y)
        return self.t[mask]


@dataclass
class BlurryFrame:
    """Temporal average of the latent intensity over the exposure interval."""

    values: np.ndarray
    interval: ExposureInterval

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("blurry frame must be a 2-d array")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass
class SharpVideo:
    """Timestamped stack of sharp frames spanning an exposure interval."""

    times: np.ndarray
    frames: np.ndarray
    interval: ExposureInterval = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64)
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or self.times.ndim != 1:
            raise ValueError("expected times (k,) and frames (k, h, w)")
        if self.times.shape[0] != self.frames.shape[0]:
            raise ValueError("frame count and timestamp count differ")
        if self.times.shape[0] < 2:
            raise ValueError("a video needs at least 2 frames")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if self.interval is None:
            self.interval = ExposureInterval(float(self.times[0]), float(self.times[-1]))
        span_tol = 1e-9 * max(1.0, self.interval.length)
        if (
            abs(self.times[0] - self.interval.t_start) > span_tol
            or abs(self.times[-1] - self.interval.t_end) > span_tol
        ):
            raise ValueError("frame timestamps must span the exposure interval")

    @property
    def frame_count(self) -> int:
        return int(self.times.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]

    def frame_at(self, t: float) -> np.ndarray:
        """Linear interpolation between the two frames straddling ``t``."""
        if not self.interval.contains(t):
            raise ValueError(f"t={t} outside [{self.interval.t_start}, {self.interval.t_end}]")
        j = int(np.searchsorted(self.times, t, side="right"))
        if j >= self.frame_count:
            return self.frames[-1].copy()
        if j == 0:
            return self.frames[0].copy()
        t0, t1 = self.times[j - 1], self.times[j]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.frames[j - 1] + w * self.frames[j]

    def window(self, interval: ExposureInterval) -> "SharpVideo":
        """Cut the video down to ``interval``, interpolating boundary frames."""
        tol = 1e-9 * max(1.0, self.interval.length)
        if interval.t_start < self.times[0] - tol or interval.t_end > self.times[-1] + tol:
            raise ValueError("requested window extends beyond the video")
        inside = (self.times > interval.t_start) & (self.times < interval.t_end)
        times = [interval.t_start]
        frames = [self.frame_at(interval.t_start)]
        for t, f in zip(self.times[inside], self.frames[inside]):
            times.append(float(t))
            frames.append(f)
        times.append(interval.t_end)
        frames.append(self.frame_at(interval.t_end))
        return SharpVideo(np.array(times), np.stack(frames), interval)
