"""Keypoint selection: pivots, nearest-event claims, dedup, adversarial inputs."""

import numpy as np
import pytest

from ecir import ExposureInterval, select_keypoints
from ecir.keypoints import keypoint_grid, pivots
from ecir.simulation import simulate_events, ThresholdConfig
from ecir.types import EventStream

HALF_UNIT = ExposureInterval(-0.5, 0.5)


def oracle_select(event_times, interval, n):
    """Independent restatement of the selection rules.

    Pivots are cell midpoints taken left to right; each shifts to the nearest
    event overall (ties to the earlier event) unless that event is claimed,
    in which case it stays. The result is sorted; duplicates are pushed up by
    T * 1e-9 (or down from the end if that would escape the interval).
    """
    step = interval.length / n
    base = [interval.t_start + (i + 0.5) * step for i in range(n)]
    events = list(event_times)
    claimed = set()
    out = []
    for pivot in base:
        if not events:
            out.append(pivot)
            continue
        best = min(range(len(events)), key=lambda j: (abs(events[j] - pivot), j))
        if best in claimed:
            out.append(pivot)
        else:
            claimed.add(best)
            out.append(events[best])
    out.sort()
    eps = interval.length * 1e-9
    for i in range(1, n):
        if out[i] <= out[i - 1]:
            out[i] = out[i - 1] + eps
    if out[-1] > interval.t_end:
        out[-1] = interval.t_end
        for i in range(n - 2, -1, -1):
            if out[i] >= out[i + 1]:
                out[i] = out[i + 1] - eps
    return np.array(out)


class TestPivots:
    def test_midpoints(self):
        got = pivots(HALF_UNIT, 5)
        assert got == pytest.approx([-0.4, -0.2, 0.0, 0.2, 0.4], abs=1e-15)

    def test_no_events_keeps_pivots(self):
        ks = select_keypoints(np.array([]), HALF_UNIT, 5)
        assert ks.timestamps == pytest.approx([-0.4, -0.2, 0.0, 0.2, 0.4], abs=1e-15)

    def test_events_at_pivots_are_fixed_point(self):
        events = np.array([-0.4, -0.2, 0.0, 0.2, 0.4])
        ks = select_keypoints(events, HALF_UNIT, 5)
        assert ks.timestamps == pytest.approx(events, abs=0)

    def test_too_few_keypoints_rejected(self):
        with pytest.raises(ValueError):
            select_keypoints(np.array([]), HALF_UNIT, 1)

    def test_degenerate_interval_rejected(self):
        with pytest.raises(ValueError):
            ExposureInterval(0.5, 0.5)


class TestClaims:
    def test_spec_example_against_oracle(self):
        events = np.array([-0.45, -0.44, 0.31])
        expected = oracle_select(events, HALF_UNIT, 5)
        # frozen oracle output: -0.44 claimed by the first pivot, 0.31 claimed
        # by the middle pivot, the rest stay; then sorted
        assert expected == pytest.approx([-0.44, -0.2, 0.2, 0.31, 0.4], abs=1e-15)
        got = select_keypoints(events, HALF_UNIT, 5)
        assert got.timestamps == pytest.approx(expected, abs=0)

    def test_random_streams_match_oracle(self):
        rng = np.random.default_rng(59)
        for _ in range(300):
            n = int(rng.integers(2, 11))
            k = int(rng.integers(0, 12))
            events = np.sort(rng.uniform(-0.5, 0.5, k))
            got = select_keypoints(events, HALF_UNIT, n).timestamps
            expected = oracle_select(events, HALF_UNIT, n)
            assert np.array_equal(got, expected)

    def test_each_keypoint_is_event_or_pivot(self):
        rng = np.random.default_rng(61)
        base = pivots(HALF_UNIT, 7)
        for _ in range(100):
            events = np.sort(rng.uniform(-0.5, 0.5, int(rng.integers(1, 9))))
            got = select_keypoints(events, HALF_UNIT, 7).timestamps
            for t in got:
                near_event = np.any(np.abs(events - t) < 1e-12)
                near_pivot = np.any(np.abs(base - t) < 1e-12)
                assert near_event or near_pivot

    def test_unsorted_events_rejected(self):
        with pytest.raises(ValueError):
            select_keypoints(np.array([0.3, -0.1]), HALF_UNIT, 3)


class TestDedup:
    def test_duplicate_event_timestamps(self):
        # two entries at the same instant can both be claimed; dedup must split them
        events = np.array([0.0, 0.0])
        ks = select_keypoints(events, HALF_UNIT, 2)
        assert ks.timestamps[1] > ks.timestamps[0]

    def test_duplicates_at_interval_end(self):
        events = np.array([0.5, 0.5, 0.5])
        ks = select_keypoints(events, HALF_UNIT, 3)
        assert np.all(np.diff(ks.timestamps) > 0)
        assert ks.timestamps[-1] <= 0.5

    def test_strictly_increasing_for_adversarial_inputs(self):
        rng = np.random.default_rng(67)
        for _ in range(200):
            n = int(rng.integers(2, 11))
            k = int(rng.integers(1, 15))
            # heavy duplication: few distinct values, many repeats
            pool = rng.uniform(-0.5, 0.5, max(1, k // 3 + 1))
            events = np.sort(rng.choice(pool, k))
            ks = select_keypoints(events, HALF_UNIT, n)
            assert np.all(np.diff(ks.timestamps) > 0)
            assert ks.timestamps[0] >= -0.5 and ks.timestamps[-1] <= 0.5


class TestKeypointGrid:
    def test_empty_stream_gives_pivot_rows(self):
        grid = keypoint_grid(EventStream.empty(HALF_UNIT), HALF_UNIT, 5, (3, 4))
        assert grid.shape == (3, 4, 5)
        assert np.allclose(grid, pivots(HALF_UNIT, 5))

    def test_matches_per_pixel_selection(self):
        from ecir.types import SharpVideo

        rng = np.random.default_rng(71)
        h, w, k = 6, 5, 9
        times = np.linspace(-0.5, 0.5, k)
        frames = np.clip(rng.uniform(0.2, 0.8, (1, h, w))
                         + np.linspace(0, 1, k)[:, None, None]
                         * rng.uniform(-0.5, 0.5, (h, w)), 0.05, 0.95)
        video = SharpVideo(times, frames)
        events = simulate_events(video, ThresholdConfig(c_plus=0.1, c_minus=-0.1))
        assert len(events) > 0
        grid = keypoint_grid(events, HALF_UNIT, 4, (h, w))
        for y in range(h):
            for x in range(w):
                expected = select_keypoints(events.pixel_times(x, y), HALF_UNIT, 4)
                assert np.array_equal(grid[y, x], expected.timestamps)

    def test_out_of_range_coordinates_rejected(self):
        stream = EventStream(
            np.array([9]), np.array([0]), np.array([0.0]), np.array([1]), HALF_UNIT
        )
        with pytest.raises(ValueError):
            keypoint_grid(stream, HALF_UNIT, 3, (2, 2))
