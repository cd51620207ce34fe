"""Command-line pipeline: simulate, fit, render, edi, refine, eval, voxelize.

Settings resolve as flag > ECIR_THREADS (threads only) > manifest override >
built-in default. Every subcommand validates its inputs and exits nonzero
with a one-line diagnostic on bad input.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import io
from ._parallel import map_rows, resolve_threads
from .fitting import edi_video, fit_polys
from .keypoints import keypoint_grid
from .metrics import mse, psnr, ssim
from .refinement import DEFAULT_ITERATIONS, DEFAULT_LAMBDA, DivergenceError, refine
from .representation import horner
from .simulation import (
    DEFAULT_BINS,
    DEFAULT_CONTRAST,
    ThresholdConfig,
    simulate_events,
    synthesize_blur,
    voxelize,
)
from .types import BlurryFrame, ExposureInterval

DEFAULT_EXPOSURE_MS = 120.0
DEFAULT_KEYPOINTS = 10
DEFAULT_FRAME_COUNT = 14

_COERCE = {
    "n": int,
    "bins": int,
    "count": int,
    "imax": int,
    "seed": int,
    "threads": int,
    "width": int,
    "height": int,
    "c": float,
    "c_plus": float,
    "c_minus": float,
    "sigma": float,
    "lambda": float,
    "exposure_ms": float,
    "solver": str,
    "format": str,
}


def _setting(flag_value, manifest: io.Manifest | None, key: str, default):
    """flag > manifest override > default."""
    if flag_value is not None:
        return flag_value
    if manifest is not None and key in manifest.overrides:
        return _COERCE.get(key, str)(manifest.overrides[key])
    return default


def _manifest_of(args) -> io.Manifest | None:
    path = getattr(args, "manifest", None)
    return io.load_manifest(path) if path else None


def _interval_of(args, manifest: io.Manifest | None) -> ExposureInterval:
    t_start = getattr(args, "t_start", None)
    t_end = getattr(args, "t_end", None)
    if t_start is not None and t_end is not None:
        return ExposureInterval(t_start, t_end)
    if manifest is not None:
        return manifest.interval
    raise ValueError("need --t-start/--t-end or --manifest to fix the exposure interval")


def _path_setting(flag_value, manifest: io.Manifest | None, name: str) -> Path:
    if flag_value is not None:
        return Path(flag_value)
    if manifest is not None:
        resolved = manifest.resolve(name)
        if resolved is not None:
            return resolved
    raise ValueError(f"missing --{name.replace('_', '-')} (no manifest fallback found)")


def _parse_timestamps(text: str) -> np.ndarray:
    parts = [p for chunk in text.split(",") for p in chunk.split() if p]
    if not parts:
        raise ValueError("empty timestamp list")
    try:
        times = np.array([float(p) for p in parts])
    except ValueError:
        raise ValueError(f"bad timestamp list {text!r}") from None
    if np.any(np.diff(times) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    return times


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    manifest = _manifest_of(args)
    exposure_ms = _setting(args.exposure_ms, manifest, "exposure_ms", DEFAULT_EXPOSURE_MS)
    cfg = ThresholdConfig(
        c_plus=_setting(args.c_plus, manifest, "c_plus", DEFAULT_CONTRAST),
        c_minus=_setting(args.c_minus, manifest, "c_minus", -DEFAULT_CONTRAST),
        sigma=_setting(args.sigma, manifest, "sigma", 0.0),
        seed=_setting(args.seed, manifest, "seed", 0),
    )
    video = io.read_video_dir(args.video)
    window = ExposureInterval(
        float(video.times[0]), float(video.times[0]) + exposure_ms / 1000.0
    )
    video = video.window(window)

    events = simulate_events(video, cfg)
    blurry = synthesize_blur(video)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_events(out / "events.txt", events)
    io.write_f32(out / "blurry.f32", blurry.values)
    io.Manifest(
        t_start=window.t_start,
        t_end=window.t_end,
        blurry="blurry.f32",
        events="events.txt",
        gt_video=str(Path(args.video).resolve()),
        overrides={},
    ).save(out / "manifest.json")
    print(f"simulate: {len(events)} events, blurry {blurry.shape[0]}x{blurry.shape[1]}")
    return 0


def cmd_fit(args) -> int:
    manifest = _manifest_of(args)
    n = _setting(args.n, manifest, "n", DEFAULT_KEYPOINTS)
    threads = resolve_threads(args.threads, manifest.overrides.get("threads") if manifest else None)
    blurry_path = _path_setting(args.blurry, manifest, "blurry")
    events_path = _path_setting(args.events, manifest, "events")
    video_path = _path_setting(args.gt_video, manifest, "gt_video")

    video = io.read_video_dir(video_path)
    if args.t_start is not None and args.t_end is not None:
        video = video.window(ExposureInterval(args.t_start, args.t_end))
    elif manifest is not None:
        video = video.window(manifest.interval)
    interval = video.interval
    blurry = BlurryFrame(io.read_frame(blurry_path), interval)
    events = io.read_events(events_path, interval)

    keypoints = keypoint_grid(events, interval, n, video.shape)
    grid = fit_polys(video, keypoints, blurry, threads=threads)
    io.save_polys(args.out, grid)
    flag = " (rank-deficient, ridge engaged)" if grid.fit_warning else ""
    print(f"fit: n={n} over {video.frame_count} frames -> {args.out}{flag}")
    return 0


def cmd_render(args) -> int:
    manifest = _manifest_of(args)
    grid = io.load_polys(args.polys)
    threads = resolve_threads(args.threads, manifest.overrides.get("threads") if manifest else None)
    if args.timestamps is not None:
        times = _parse_timestamps(args.timestamps)
    else:
        count = _setting(args.count, manifest, "count", DEFAULT_FRAME_COUNT)
        times = grid.interval.uniform_times(count)
    if not grid.interval.contains(times):
        raise ValueError("render timestamps fall outside the fitted exposure interval")

    coeffs = grid.primitive_coefficients()
    h, w = grid.shape
    frames = np.empty((times.shape[0], h, w))

    def render_rows(rows: slice) -> None:
        for i, t in enumerate(times):
            frames[i, rows] = horner(coeffs[rows], grid.interval.normalize(t))

    map_rows(render_rows, h, threads)
    io.write_video_dir(args.out, times, frames, fmt=args.format)
    print(f"render: {times.shape[0]} frames -> {args.out}")
    return 0


def cmd_edi(args) -> int:
    manifest = _manifest_of(args)
    interval = _interval_of(args, manifest)
    blurry_path = _path_setting(args.blurry, manifest, "blurry")
    events_path = _path_setting(args.events, manifest, "events")
    c = _setting(args.c, manifest, "c", DEFAULT_CONTRAST)
    blurry = BlurryFrame(io.read_frame(blurry_path), interval)
    events = io.read_events(events_path, interval)
    if args.timestamps is not None:
        times = _parse_timestamps(args.timestamps)
    else:
        count = _setting(args.count, manifest, "count", DEFAULT_FRAME_COUNT)
        times = interval.uniform_times(count)
    frames = edi_video(blurry, events, c, times)
    io.write_video_dir(args.out, times, frames, fmt=args.format)
    print(f"edi: {times.shape[0]} frames at c={c} -> {args.out}")
    return 0


def cmd_refine(args) -> int:
    manifest = _manifest_of(args)
    interval = _interval_of(args, manifest)
    events_path = _path_setting(args.events, manifest, "events")
    lam = _setting(args.lam, manifest, "lambda", DEFAULT_LAMBDA)
    i_max = _setting(args.imax, manifest, "imax", DEFAULT_ITERATIONS)
    solver = _setting(args.solver, manifest, "solver", "tridiag")
    c = _setting(args.c, manifest, "c", DEFAULT_CONTRAST)

    video = io.read_video_dir(args.frames)
    if not interval.contains(video.times):
        raise ValueError("frame schedule falls outside the exposure interval")
    events = io.read_events(events_path, interval)
    refined = refine(video.frames, events, c, video.times, lam=lam, i_max=i_max, solver=solver)
    io.write_video_dir(args.out, video.times, refined, fmt=args.format)
    print(f"refine: solver={solver} lambda={lam} imax={i_max} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    manifest = _manifest_of(args)
    threads = resolve_threads(args.threads, manifest.overrides.get("threads") if manifest else None)
    pred_paths = io.list_frames(args.pred)
    gt_paths = io.list_frames(args.gt)
    if len(pred_paths) != len(gt_paths):
        raise ValueError(
            f"frame count mismatch: {len(pred_paths)} predicted vs {len(gt_paths)} reference"
        )
    pred = [io.read_frame(p) for p in pred_paths]
    gt = [io.read_frame(p) for p in gt_paths]

    rows: list[tuple[float, float, float]] = [None] * len(pred)  # type: ignore[list-item]

    def eval_chunk(sl: slice) -> None:
        for i in range(*sl.indices(len(pred))):
            rows[i] = (mse(pred[i], gt[i]), psnr(pred[i], gt[i]), ssim(pred[i], gt[i]))

    map_rows(eval_chunk, len(pred), threads, chunk=1)

    report = Path(args.report)
    report.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"frames={len(rows)}"]
    for i, (m, p, s) in enumerate(rows):
        lines.append(f"frame_{i:04d}_mse={m:.9f}")
        lines.append(f"frame_{i:04d}_psnr={p:.9f}")
        lines.append(f"frame_{i:04d}_ssim={s:.9f}")
    agg = np.mean(np.array(rows, dtype=np.float64), axis=0)
    lines.append(f"mse_mean={agg[0]:.9f}")
    lines.append(f"psnr_mean={agg[1]:.9f}")
    lines.append(f"ssim_mean={agg[2]:.9f}")
    report.write_text("\n".join(lines) + "\n", encoding="ascii")

    csv_path = report.with_suffix(".csv") if report.suffix else Path(str(report) + ".csv")
    with open(csv_path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "mse", "psnr", "ssim"])
        for i, (m, p, s) in enumerate(rows):
            writer.writerow([i, f"{m:.9f}", f"{p:.9f}", f"{s:.9f}"])
        writer.writerow(["mean", f"{agg[0]:.9f}", f"{agg[1]:.9f}", f"{agg[2]:.9f}"])
    print(f"eval: mse={agg[0]:.6f} psnr={agg[1]:.3f} ssim={agg[2]:.4f} -> {report}")
    return 0


def cmd_voxelize(args) -> int:
    manifest = _manifest_of(args)
    interval = _interval_of(args, manifest)
    events_path = _path_setting(args.events, manifest, "events")
    m = _setting(args.bins, manifest, "bins", DEFAULT_BINS)
    events = io.read_events(events_path, interval)

    width = _setting(args.width, manifest, "width", None)
    height = _setting(args.height, manifest, "height", None)
    if width is None or height is None:
        blurry_path = manifest.resolve("blurry") if manifest else None
        if blurry_path is not None:
            h, w = io.read_frame(blurry_path).shape
        elif len(events):
            w = int(events.x.max()) + 1
            h = int(events.y.max()) + 1
        else:
            raise ValueError("empty stream: need --width/--height or a manifest with a blurry frame")
        width = width if width is not None else w
        height = height if height is not None else h

    hist = voxelize(events, m, (height, width))
    io.write_histogram(args.out, hist)
    signed_total = float(hist.bins.sum())
    print(f"voxelize: m={m} grid {height}x{width} signed-sum {signed_total:+g} -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_interval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-start", type=float, default=None, help="exposure start (s)")
    p.add_argument("--t-end", type=float, default=None, help="exposure end (s)")
    p.add_argument("--manifest", default=None, help="manifest.json supplying defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecir",
        description="Continuous intensity recovery from a blurry frame and events",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="events + blurry frame from a sharp video")
    p.add_argument("--video", required=True, help="frame directory with timestamps.txt")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--c-plus", type=float, default=None)
    p.add_argument("--c-minus", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--exposure-ms", type=float, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit per-pixel intensity polynomials")
    p.add_argument("--blurry", default=None)
    p.add_argument("--events", default=None)
    p.add_argument("--gt-video", default=None)
    p.add_argument("--n", type=int, default=None, help="keypoints per pixel")
    p.add_argument("--out", required=True, help="output .npz")
    p.add_argument("--threads", type=int, default=None)
    _add_interval_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("render", help="latent frames from fitted polynomials")
    p.add_argument("--polys", required=True)
    p.add_argument("--timestamps", default=None, help="comma-separated seconds")
    p.add_argument("--count", type=int, default=None, help="uniform timestamp count")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("f32", "pgm"), default="f32")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("edi", help="double-integral analytic baseline")
    p.add_argument("--blurry", default=None)
    p.add_argument("--events", default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--timestamps", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("f32", "pgm"), default="f32")
    _add_interval_flags(p)
    p.set_defaults(func=cmd_edi)

    p = sub.add_parser("refine", help="residual-flow refinement of a frame stack")
    p.add_argument("--frames", required=True, help="initial frames directory")
    p.add_argument("--events", default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--imax", type=int, default=None)
    p.add_argument("--solver", choices=("tridiag", "gd"), default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("f32", "pgm"), default="f32")
    _add_interval_flags(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", help="MSE/PSNR/SSIM report between frame directories")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("voxelize", help="signed event histogram to a raw-float file")
    p.add_argument("--events", default=None)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    _add_interval_flags(p)
    p.set_defaults(func=cmd_voxelize)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, DivergenceError) as exc:
        print(f"ecir {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
