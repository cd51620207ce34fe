"""File formats: event text files, PGM and raw-float frames, videos, manifests.

Events travel as plain text, one ``t x y p`` record per line, sorted by t;
diffable and trivially greppable. Frames export either as 8-bit binary PGM
(clamped and quantized) or as a raw little-endian float32 format with a
16-byte header (magic ``ECIRF32``, width, height) for lossless
intermediates. Voxel histograms use the sibling ``ECIRH32`` header with bin
count, height, width.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .representation import PolyGrid
from .simulation import EventHistogram
from .types import EventStream, ExposureInterval, SharpVideo

__all__ = [
    "ParseError",
    "FormatError",
    "read_events",
    "write_events",
    "read_pgm",
    "write_pgm",
    "read_f32",
    "write_f32",
    "read_frame",
    "write_frame",
    "read_histogram",
    "write_histogram",
    "list_frames",
    "read_video_dir",
    "write_video_dir",
    "load_polys",
    "save_polys",
    "Manifest",
    "load_manifest",
]

F32_MAGIC = b"ECIRF32\x00"
H32_MAGIC = b"ECIRH32\x00"
TIMESTAMPS_FILE = "timestamps.txt"


class ParseError(ValueError):
    """Malformed text input; carries the offending line number."""

    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


class FormatError(ValueError):
    """Bad magic, header, or payload size in a binary file."""


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

def read_events(path, interval: ExposureInterval) -> EventStream:
    """Parse a ``t x y p`` text file into a sorted stream over ``interval``."""
    xs, ys, ts, ps = [], [], [], []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(path, lineno, f"expected 4 fields, got {len(parts)}")
            try:
                t = float(parts[0])
                x = int(parts[1])
                y = int(parts[2])
                p = int(parts[3])
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            if p not in (-1, 1):
                raise ParseError(path, lineno, f"polarity must be -1 or 1, got {p}")
            if ts and t < ts[-1]:
                raise ParseError(path, lineno, "timestamps not sorted")
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(p)
    if not ts:
        return EventStream.empty(interval)
    return EventStream(
        np.array(xs, dtype=np.int64),
        np.array(ys, dtype=np.int64),
        np.array(ts, dtype=np.float64),
        np.array(ps, dtype=np.int64),
        interval,
    )


def write_events(path, events: EventStream) -> None:
    """One ``t x y p`` line per event; repr keeps timestamps round-trip exact."""
    with open(path, "w", encoding="ascii") as fh:
        for x, y, t, p in zip(events.x, events.y, events.t, events.p):
            fh.write(f"{float(t)!r} {int(x)} {int(y)} {int(p)}\n")


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------

def write_pgm(path, frame: np.ndarray) -> None:
    """8-bit binary PGM; intensities are clamped to [0, 1] and quantized here."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2:
        raise ValueError("frame must be 2-d")
    h, w = frame.shape
    quantized = np.rint(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(quantized.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    # header tokens can be separated by any whitespace and # comments
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(tok) for tok in tokens)
    except ValueError:
        raise FormatError(f"{path}: non-numeric PGM header") from None
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 supported, got {maxval}")
    payload = data[pos : pos + w * h]
    if len(payload) != w * h:
        raise FormatError(f"{path}: expected {w * h} pixels, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w) / 255.0


def write_f32(path, frame: np.ndarray) -> None:
    """Raw float32 frame: 16-byte header (magic, w, h), row-major payload."""
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise ValueError("frame must be 2-d")
    h, w = frame.shape
    with open(path, "wb") as fh:
        fh.write(F32_MAGIC + struct.pack("<II", w, h))
        fh.write(frame.astype("<f4").tobytes())


def read_f32(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:8] != F32_MAGIC:
        raise FormatError(f"{path}: bad ECIRF32 magic")
    w, h = struct.unpack("<II", data[8:16])
    expected = 16 + 4 * w * h
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(data)}")
    return np.frombuffer(data[16:], dtype="<f4").reshape(h, w).astype(np.float64)


def write_frame(path, frame: np.ndarray) -> None:
    """Dispatch on extension: .pgm quantized, .f32 lossless."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        write_pgm(path, frame)
    elif suffix == ".f32":
        write_f32(path, frame)
    else:
        raise ValueError(f"unsupported frame extension {suffix!r} (use .pgm or .f32)")


def read_frame(path) -> np.ndarray:
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".f32":
        return read_f32(path)
    raise ValueError(f"unsupported frame extension {suffix!r} (use .pgm or .f32)")


FRAME_EXTENSIONS = (".f32", ".pgm")


# ---------------------------------------------------------------------------
# voxel histograms
# ---------------------------------------------------------------------------

def write_histogram(path, hist: EventHistogram) -> None:
    m, h, w = hist.bins.shape
    with open(path, "wb") as fh:
        fh.write(H32_MAGIC + struct.pack("<III", m, h, w))
        fh.write(hist.bins.astype("<f4").tobytes())


def read_histogram(path, interval: ExposureInterval) -> EventHistogram:
    data = Path(path).read_bytes()
    if len(data) < 20 or data[:8] != H32_MAGIC:
        raise FormatError(f"{path}: bad ECIRH32 magic")
    m, h, w = struct.unpack("<III", data[8:20])
    expected = 20 + 4 * m * h * w
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(data)}")
    bins = np.frombuffer(data[20:], dtype="<f4").reshape(m, h, w).astype(np.float64)
    return EventHistogram(bins, interval)


# ---------------------------------------------------------------------------
# video directories
# ---------------------------------------------------------------------------

def list_frames(directory) -> list[Path]:
    """Frame files in a directory, sorted by name."""
    directory = Path(directory)
    paths = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in FRAME_EXTENSIONS
    )
    if not paths:
        raise FileNotFoundError(f"{directory}: no .f32 or .pgm frames")
    return paths


def read_video_dir(path, interval: ExposureInterval | None = None) -> SharpVideo:
    """Load a frame directory with a ``timestamps.txt`` (one seconds value per line)."""
    directory = Path(path)
    ts_path = directory / TIMESTAMPS_FILE
    if not ts_path.exists():
        raise FileNotFoundError(f"{directory}: missing {TIMESTAMPS_FILE}")
    times = []
    with open(ts_path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                times.append(float(line))
            except ValueError:
                raise ParseError(ts_path, lineno, f"bad timestamp {line!r}") from None
    paths = list_frames(directory)
    if len(paths) != len(times):
        raise ValueError(
            f"{directory}: {len(paths)} frames but {len(times)} timestamps"
        )
    frames = np.stack([read_frame(p) for p in paths])
    return SharpVideo(np.array(times), frames, interval)


def write_video_dir(path, times: np.ndarray, frames: np.ndarray, fmt: str = "f32") -> None:
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    if fmt not in ("f32", "pgm"):
        raise ValueError("fmt must be 'f32' or 'pgm'")
    for i, frame in enumerate(frames):
        write_frame(directory / f"frame_{i:05d}.{fmt}", frame)
    with open(directory / TIMESTAMPS_FILE, "w", encoding="ascii") as fh:
        for t in times:
            fh.write(f"{float(t)!r}\n")


# ---------------------------------------------------------------------------
# polynomial grids
# ---------------------------------------------------------------------------

def save_polys(path, grid: PolyGrid) -> None:
    np.savez(
        path,
        keypoints=grid.keypoints,
        derivatives=grid.derivatives,
        constants=grid.constants,
        t_start=grid.interval.t_start,
        t_end=grid.interval.t_end,
    )


def load_polys(path) -> PolyGrid:
    with np.load(path) as data:
        try:
            return PolyGrid(
                data["keypoints"],
                data["derivatives"],
                data["constants"],
                ExposureInterval(float(data["t_start"]), float(data["t_end"])),
            )
        except KeyError as exc:
            raise FormatError(f"{path}: missing array {exc}") from None


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

@dataclass
class Manifest:
    """Paths and interval bounds tying one exposure's artifacts together."""

    t_start: float
    t_end: float
    blurry: str | None = None
    events: str | None = None
    gt_video: str | None = None
    overrides: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path)

    @property
    def interval(self) -> ExposureInterval:
        return ExposureInterval(self.t_start, self.t_end)

    def resolve(self, name: str) -> Path | None:
        value = getattr(self, name)
        if value is None:
            return None
        return self.base_dir / value

    def save(self, path) -> None:
        payload = {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "blurry": self.blurry,
            "events": self.events,
            "gt_video": self.gt_video,
            "overrides": self.overrides,
        }
        with open(path, "w", encoding="ascii") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_manifest(path) -> Manifest:
    """Load and validate: referenced files must exist, events must fit the interval."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="ascii"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None
    try:
        manifest = Manifest(
            t_start=float(payload["t_start"]),
            t_end=float(payload["t_end"]),
            blurry=payload.get("blurry"),
            events=payload.get("events"),
            gt_video=payload.get("gt_video"),
            overrides=dict(payload.get("overrides", {})),
            base_dir=path.parent,
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: invalid manifest field: {exc}") from None
    interval = manifest.interval  # validates ordering
    for name in ("blurry", "events", "gt_video"):
        target = manifest.resolve(name)
        if target is not None and not target.exists():
            raise FileNotFoundError(f"{path}: referenced {name} {target} does not exist")
    events_path = manifest.resolve("events")
    if events_path is not None:
        read_events(events_path, interval)  # raises if any timestamp escapes
    return manifest
