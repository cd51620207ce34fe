"""Event synthesis from sharp video, blur synthesis, and event voxelization.

The simulator follows the standard contrast-threshold model: a pixel fires
when its log-intensity has moved by at least c+ (or at most c-) since the
reference level set by its last event. Frames are linearly interpolated in
log space between timestamps, so events get sub-frame crossing times; a gap
large enough for several threshold steps emits several events.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import EventStream, ExposureInterval, BlurryFrame, SharpVideo

__all__ = [
    "ThresholdConfig",
    "RefState",
    "EventHistogram",
    "polarity",
    "simulate_events",
    "synthesize_blur",
    "voxelize",
    "signed_count_between",
]

# intensities are floored before the log so dark pixels stay finite
INTENSITY_FLOOR = 1e-3
DEFAULT_CONTRAST = 0.2
DEFAULT_BINS = 40


@dataclass(frozen=True)
class ThresholdConfig:
    """Contrast thresholds with optional per-pixel jitter."""

    c_plus: float = DEFAULT_CONTRAST
    c_minus: float = -DEFAULT_CONTRAST
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.c_plus > 0:
            raise ValueError("c_plus must be positive")
        if not self.c_minus < 0:
            raise ValueError("c_minus must be negative")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def per_pixel(self, shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        """Per-pixel thresholds drawn once per sequence: c * (1 + N(0, sigma))."""
        if self.sigma == 0.0:
            return (
                np.full(shape, self.c_plus),
                np.full(shape, self.c_minus),
            )
        rng = np.random.default_rng(self.seed)
        jitter_p = 1.0 + self.sigma * rng.standard_normal(shape)
        jitter_m = 1.0 + self.sigma * rng.standard_normal(shape)
        # keep magnitudes at least 1% of nominal so thresholds never flip sign
        cp = self.c_plus * np.maximum(jitter_p, 0.01)
        cm = self.c_minus * np.maximum(jitter_m, 0.01)
        return cp, cm


@dataclass
class RefState:
    """Per-pixel reference the contrast rule compares against.

    Initialized to the first frame; both fields update only when an event
    fires (the new reference level is exactly the crossed threshold level).
    """

    t_ref: np.ndarray
    ln_ref: np.ndarray

    @classmethod
    def from_first_frame(cls, t0: float, ln0: np.ndarray) -> "RefState":
        return cls(np.full(ln0.shape, t0), ln0.copy())


@dataclass
class EventHistogram:
    """Signed per-bin event counts, shape (m, h, w)."""

    bins: np.ndarray
    interval: ExposureInterval

    def __post_init__(self) -> None:
        self.bins = np.asarray(self.bins, dtype=np.float64)
        if self.bins.ndim != 3:
            raise ValueError("histogram must be (m, h, w)")

    @property
    def bin_count(self) -> int:
        return int(self.bins.shape[0])


def polarity(delta_ln: float, c_plus: float, c_minus: float) -> int:
    """Sign of an intensity change under the threshold rule; 0 means no event."""
    if not (c_plus > 0 and c_minus < 0):
        raise ValueError("thresholds must satisfy c_plus > 0 > c_minus")
    if delta_ln >= c_plus:
        return 1
    if delta_ln <= c_minus:
        return -1
    return 0


def _emit_for_gap(flat_ref, count, threshold, l0, l1, t0, t1):
    """Crossing times for every pixel needing ``count`` events in this gap."""
    idx = np.flatnonzero(count > 0)
    if idx.size == 0:
        return None
    reps = count[idx]
    pix = np.repeat(idx, reps)
    # per-pixel crossing ranks 1..count
    offs = np.concatenate(([0], np.cumsum(reps)))[:-1]
    rank = np.arange(pix.shape[0]) - np.repeat(offs, reps) + 1.0
    levels = flat_ref[pix] + rank * threshold[pix]
    frac = (levels - l0[pix]) / (l1[pix] - l0[pix])
    # t0 + 1.0 * (t1 - t0) can round past t1; keep crossings inside the gap
    times = np.clip(t0 + frac * (t1 - t0), t0, t1)
    last = offs + reps - 1
    return idx, reps, pix, times, times[last]


def simulate_events(video: SharpVideo, cfg: ThresholdConfig) -> EventStream:
    """Generate the event stream a contrast-threshold sensor would produce.

    Deterministic for fixed inputs and seed. Output sorted by t with ties
    broken by (t, y, x, p).
    """
    frames = video.frames
    if not np.all(np.isfinite(frames)):
        raise ValueError("video frames contain non-finite intensities")
    ln = np.log(np.maximum(frames, INTENSITY_FLOOR))
    h, w = video.shape
    cp, cm = cfg.per_pixel((h, w))
    cp_f, cm_f = cp.ravel(), cm.ravel()

    state = RefState.from_first_frame(float(video.times[0]), ln[0])
    ref = state.ln_ref.ravel()
    t_ref = state.t_ref.ravel()

    ys, xs = np.divmod(np.arange(h * w), w)
    all_x, all_y, all_t, all_p = [], [], [], []

    for g in range(video.frame_count - 1):
        l0, l1 = ln[g].ravel(), ln[g + 1].ravel()
        t0, t1 = float(video.times[g]), float(video.times[g + 1])
        rise = l1 - ref
        n_pos = np.where(rise > 0, np.floor(rise / cp_f), 0.0).astype(np.int64)
        n_neg = np.where(rise < 0, np.floor(rise / cm_f), 0.0).astype(np.int64)
        for count, threshold, pol in ((n_pos, cp_f, 1), (n_neg, cm_f, -1)):
            emitted = _emit_for_gap(ref, count, threshold, l0, l1, t0, t1)
            if emitted is None:
                continue
            idx, reps, pix, times, last_times = emitted
            all_x.append(xs[pix])
            all_y.append(ys[pix])
            all_t.append(times)
            all_p.append(np.full(pix.shape[0], pol, dtype=np.int64))
            # the last crossing per pixel becomes the new reference
            ref[idx] += reps * threshold[idx]
            t_ref[idx] = last_times

    if not all_t:
        return EventStream.empty(video.interval)
    x = np.concatenate(all_x)
    y = np.concatenate(all_y)
    t = np.concatenate(all_t)
    p = np.concatenate(all_p)
    order = np.lexsort((p, x, y, t))
    return EventStream(x[order], y[order], t[order], p[order], video.interval)


def synthesize_blur(video: SharpVideo) -> BlurryFrame:
    """Trapezoidal temporal average of the frames over the exposure interval."""
    dt = np.diff(video.times)
    mids = 0.5 * (video.frames[:-1] + video.frames[1:])
    total = np.tensordot(dt, mids, axes=(0, 0))
    return BlurryFrame(total / video.interval.length, video.interval)


def voxelize(events: EventStream, m: int, shape: tuple[int, int]) -> EventHistogram:
    """Bin polarities into an (m, h, w) histogram over the exposure interval.

    Bin index is floor((t - t_start) / T * m); an event exactly at t_end goes
    in the last bin.
    """
    if m < 1:
        raise ValueError("bin count must be >= 1")
    h, w = shape
    bins = np.zeros((m, h, w))
    if len(events) == 0:
        return EventHistogram(bins, events.interval)
    if np.any(events.x >= w) or np.any(events.y >= h):
        raise ValueError("event coordinates exceed the requested grid shape")
    iv = events.interval
    idx = np.floor((events.t - iv.t_start) / iv.length * m).astype(np.int64)
    idx = np.clip(idx, 0, m - 1)
    np.add.at(bins, (idx, events.y, events.x), events.p.astype(np.float64))
    return EventHistogram(bins, iv)


def signed_count_between(
    events: EventStream, t_a: float, t_b: float, shape: tuple[int, int]
) -> np.ndarray:
    """Per-pixel sum of polarities with t in the half-open window (t_a, t_b]."""
    if t_a > t_b:
        raise ValueError(f"window start {t_a} exceeds end {t_b}")
    h, w = shape
    out = np.zeros((h, w))
    if len(events) and (np.any(events.x >= w) or np.any(events.y >= h)):
        raise ValueError("event coordinates exceed the requested grid shape")
    lo = int(np.searchsorted(events.t, t_a, side="right"))
    hi = int(np.searchsorted(events.t, t_b, side="right"))
    if hi > lo:
        np.add.at(
            out,
            (events.y[lo:hi], events.x[lo:hi]),
            events.p[lo:hi].astype(np.float64),
        )
    return out
