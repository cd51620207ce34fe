"""Least-squares coefficient fitting and the double-integral analytic baseline.

``fit_polys`` is the supervision-target generator: given a sharp video and a
blurry frame, it recovers each pixel's intensity polynomial. The solve runs
once for the whole image because the sample timestamps are shared: the
intensity curve is linear in the derivative's monomial coefficients plus a
constant, so a single ridge-regularized normal-equation system with one
right-hand side per pixel covers the grid. Derivative values at each pixel's
keypoints are then read off the fitted derivative, which reproduces the same
polynomial exactly, and the constant is re-solved so the blur constraint
holds to machine accuracy rather than in the least-squares sense.

``edi_reconstruct`` is the event-only analytic baseline: intensity follows
exp(c * signed event count) from an unknown starting level, and the blurry
measurement pins that level through the temporal-average constraint.
"""

from __future__ import annotations

import warnings

import numpy as np

from ._parallel import map_rows
from .representation import PolyGrid, horner
from .simulation import signed_count_between
from .types import BlurryFrame, EventStream, SharpVideo

__all__ = ["fit_polys", "edi_reconstruct", "edi_video"]

RIDGE = 1e-8


def fit_polys(
    video: SharpVideo,
    keypoints: np.ndarray,
    blurry: BlurryFrame,
    threads: int = 1,
) -> PolyGrid:
    """Fit one intensity polynomial per pixel to the video frames.

    ``keypoints`` is (h, w, n) or (n,) shared across pixels. Needs at least
    n frames. A rank-deficient design flags ``fit_warning`` on the result
    and falls back on the ridge term instead of failing.
    """
    h, w = video.shape
    keypoints = np.asarray(keypoints, dtype=np.float64)
    if keypoints.ndim == 1:
        keypoints = np.broadcast_to(keypoints, (h, w, keypoints.shape[0])).copy()
    if keypoints.shape[:2] != (h, w):
        raise ValueError("keypoint grid does not match the video resolution")
    n = keypoints.shape[2]
    if video.frame_count < n:
        raise ValueError(f"need at least {n} frames to fit {n} derivative values")
    if blurry.shape != (h, w):
        raise ValueError("blurry frame does not match the video resolution")

    interval = video.interval
    half = interval.length / 2.0
    tau = interval.normalize(video.times)  # (k,)

    # Columns j < n are integrated Legendre polynomials of the derivative,
    # mean-centered (the constant column absorbs the shift, and its
    # coefficient is re-solved from the blur anyway) and equilibrated to
    # unit norm. Near-orthogonal unit columns keep the fixed 1e-8 ridge
    # negligible; undoing the equilibration recovers (T/2) times the
    # derivative's Legendre coefficients.
    design = np.empty((tau.shape[0], n + 1))
    leg_to_mono = np.zeros((n, n))
    for j in range(n):
        unit = np.zeros(j + 1)
        unit[j] = 1.0
        design[:, j] = np.polynomial.legendre.legval(tau, np.polynomial.legendre.legint(unit))
        leg_to_mono[j, : j + 1] = np.polynomial.legendre.leg2poly(unit)
    design[:, :n] -= design[:, :n].mean(axis=0)
    design[:, n] = 1.0
    col_norms = np.linalg.norm(design, axis=0)
    degenerate = col_norms == 0.0
    col_norms[degenerate] = 1.0
    design = design / col_norms

    gram = design.T @ design + RIDGE * np.eye(n + 1)
    rank = np.linalg.matrix_rank(design)
    warn = rank < n + 1 or bool(np.any(degenerate))
    if warn:
        warnings.warn(
            "rank-deficient fit design; ridge term is doing the disambiguation",
            RuntimeWarning,
            stacklevel=2,
        )

    tau_nodes = interval.normalize(keypoints)
    derivs = np.empty((h, w, n))

    def fit_rows(rows: slice) -> None:
        chunk = video.frames[:, rows, :]
        rhs = design.T @ chunk.reshape(video.frame_count, -1)
        theta = np.linalg.solve(gram, rhs) / col_norms[:, None]  # (n+1, pixels)
        deriv_mono = (theta[:n].T / half) @ leg_to_mono
        deriv_mono = deriv_mono.reshape(chunk.shape[1], w, n)
        derivs[rows] = horner(deriv_mono[:, :, None, :], tau_nodes[rows])

    map_rows(fit_rows, h, threads)

    grid = PolyGrid(keypoints, derivs, np.zeros((h, w)), interval, fit_warning=warn)
    return grid.with_constants_from_blur(blurry.values)


def _edi_factors(
    blurry: BlurryFrame, events: EventStream, c: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel normalizer of the double-integral model.

    Returns (integral of exp(c*S) over the interval, grouped pixel ids,
    grouped times, grouped cumulative exp levels) so callers can reuse the
    grouping.
    """
    h, w = blurry.shape
    iv = events.interval
    integral = np.full(h * w, iv.length)
    if len(events) == 0:
        return integral, np.zeros(0, np.int64), np.zeros(0), np.zeros(0)

    if np.any(events.x >= w) or np.any(events.y >= h):
        raise ValueError("event coordinates exceed the blurry frame")
    ids = events.y.astype(np.int64) * w + events.x
    order = np.argsort(ids, kind="stable")
    gid = ids[order]
    gt = events.t[order]
    gp = events.p[order]

    starts = np.flatnonzero(np.r_[True, np.diff(gid) != 0])
    group_of = np.cumsum(np.r_[True, np.diff(gid) != 0]) - 1
    cum = np.cumsum(gp)
    base = np.r_[0, cum[starts[1:] - 1]] if starts.shape[0] > 1 else np.zeros(1)
    signed = cum - base[group_of]  # within-pixel cumulative signed count
    levels = np.exp(c * signed)

    # segment from each event to the next event of the same pixel (or t_end)
    next_t = np.empty_like(gt)
    next_t[:-1] = gt[1:]
    next_t[-1] = iv.t_end
    is_last = np.zeros(gt.shape[0], dtype=bool)
    is_last[starts - 1] = True  # start of next group marks end of previous
    is_last[-1] = True
    next_t[is_last] = iv.t_end

    seg = (next_t - gt) * levels
    np.add.at(integral, gid, seg)
    first = starts
    integral[gid[first]] += (gt[first] - iv.t_start) - iv.length
    return integral, gid, gt, levels


def edi_reconstruct(
    blurry: BlurryFrame, events: EventStream, c: float, t: float
) -> np.ndarray:
    """Sharp frame at ``t`` from the blurry frame and exponentiated event counts."""
    if not c > 0:
        raise ValueError("threshold c must be positive")
    iv = events.interval
    if not iv.contains(t):
        raise ValueError(f"t={t} outside the exposure interval")
    integral, _, _, _ = _edi_factors(blurry, events, c)
    h, w = blurry.shape
    level_t = np.exp(c * signed_count_between(events, iv.t_start, t, (h, w)))
    return blurry.values * iv.length * level_t / integral.reshape(h, w)


def edi_video(
    blurry: BlurryFrame, events: EventStream, c: float, times: np.ndarray
) -> np.ndarray:
    """Frames at several timestamps, sharing one normalizer computation."""
    if not c > 0:
        raise ValueError("threshold c must be positive")
    iv = events.interval
    times = np.asarray(times, dtype=np.float64)
    if not iv.contains(times):
        raise ValueError("timestamps outside the exposure interval")
    integral, _, _, _ = _edi_factors(blurry, events, c)
    h, w = blurry.shape
    out = np.empty((times.shape[0], h, w))
    for i, t in enumerate(times):
        level_t = np.exp(c * signed_count_between(events, iv.t_start, float(t), (h, w)))
        out[i] = blurry.values * iv.length * level_t / integral.reshape(h, w)
    return out
