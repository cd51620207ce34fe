"""Keypoint selection: event-aligned pivots for the derivative interpolant.

Pivots are the n cell midpoints of the exposure interval. Each pivot, taken
left to right, shifts to the globally nearest event timestamp unless that
event was already claimed by an earlier pivot, in which case the pivot stays
put; unclaimed pivots give the representation support where the pixel saw no
events. The result is sorted and any duplicates are nudged apart so the
Lagrange nodes stay distinct.
"""

from __future__ import annotations

import numpy as np

from .representation import KeypointSet
from .types import EventStream, ExposureInterval

__all__ = ["pivots", "select_keypoints", "keypoint_grid"]

# duplicate keypoints are separated by this fraction of the interval length
DEDUP_STEP = 1e-9


def pivots(interval: ExposureInterval, n: int) -> np.ndarray:
    """The n evenly spaced cell midpoints t_start + (i + 1/2) * T / n."""
    if n < 2:
        raise ValueError("need at least 2 keypoints")
    step = interval.length / n
    return interval.t_start + (np.arange(n) + 0.5) * step


def _dedup_increasing(ts: np.ndarray, interval: ExposureInterval) -> np.ndarray:
    """Sort and push duplicates apart by T * 1e-9 while staying in the interval."""
    out = np.sort(ts)
    eps = interval.length * DEDUP_STEP
    for i in range(1, out.shape[0]):
        if out[i] <= out[i - 1]:
            out[i] = out[i - 1] + eps
    if out[-1] > interval.t_end:
        # ran past the end: pin the tail and step backwards instead
        out[-1] = interval.t_end
        for i in range(out.shape[0] - 2, -1, -1):
            if out[i] >= out[i + 1]:
                out[i] = out[i + 1] - eps
    return out


def select_keypoints(
    event_times: np.ndarray, interval: ExposureInterval, n: int
) -> KeypointSet:
    """Choose n strictly increasing keypoints for one pixel.

    ``event_times`` are the pixel's event timestamps, sorted, inside the
    interval. With no events every pivot stays where it is.
    """
    base = pivots(interval, n)
    times = np.asarray(event_times, dtype=np.float64)
    if times.size and (np.any(np.diff(times) < 0) or not interval.contains(times)):
        raise ValueError("event times must be sorted and inside the interval")
    if times.size == 0:
        return KeypointSet(base, interval)

    chosen = base.copy()
    claimed = np.zeros(times.shape[0], dtype=bool)
    for i, pivot in enumerate(base):
        j = int(np.argmin(np.abs(times - pivot)))  # ties go to the earlier event
        if not claimed[j]:
            claimed[j] = True
            chosen[i] = times[j]
    return KeypointSet(_dedup_increasing(chosen, interval), interval)


def keypoint_grid(
    events: EventStream,
    interval: ExposureInterval,
    n: int,
    shape: tuple[int, int],
) -> np.ndarray:
    """Per-pixel keypoints for a whole sensor, shape (h, w, n).

    Pixels without events share the pivot row.
    """
    h, w = shape
    base = pivots(interval, n)
    grid = np.broadcast_to(base, (h, w, n)).copy()
    if len(events) == 0:
        return grid

    if np.any(events.x >= w) or np.any(events.y >= h):
        raise ValueError("event coordinates exceed the requested grid shape")
    ids = events.y * w + events.x
    order = np.argsort(ids, kind="stable")  # keeps time order within a pixel
    ids_sorted = ids[order]
    times_sorted = events.t[order]
    starts = np.flatnonzero(np.r_[True, np.diff(ids_sorted) != 0])
    bounds = np.r_[starts, ids_sorted.shape[0]]
    flat = grid.reshape(h * w, n)
    for k in range(starts.shape[0]):
        pid = int(ids_sorted[starts[k]])
        pixel_times = times_sorted[bounds[k] : bounds[k + 1]]
        flat[pid] = select_keypoints(pixel_times, interval, n).timestamps
    return grid
