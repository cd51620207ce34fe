"""Row-chunked thread pool for per-pixel work.

Work is always split into the same fixed-size row chunks no matter how many
workers run them, so results are bitwise identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ROW_CHUNK = 16


def row_slices(height: int, chunk: int = ROW_CHUNK) -> list[slice]:
    return [slice(r, min(r + chunk, height)) for r in range(0, height, chunk)]


def map_rows(fn, height: int, threads: int = 1, chunk: int = ROW_CHUNK) -> list:
    """Apply ``fn(slice)`` over fixed row chunks, optionally on a thread pool."""
    slices = row_slices(height, chunk)
    if threads <= 1 or len(slices) <= 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, slices))


def resolve_threads(flag: int | None, manifest: int | None = None) -> int:
    """Thread count: --threads flag, then ECIR_THREADS, then manifest, then 1."""
    if flag is not None:
        return max(1, int(flag))
    env = os.environ.get("ECIR_THREADS")
    if env is not None and env.strip():
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"ECIR_THREADS must be an integer, got {env!r}") from exc
    if manifest is not None:
        return max(1, int(manifest))
    return 1
