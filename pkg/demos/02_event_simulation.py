"""
Simulating an event sensor
==========================

A contrast-threshold sensor fires when log intensity moves by c+ (or c-)
since the last event. Feeding the simulator a sharp video produces the
event stream and the motion-blurred frame a real rig would record.
"""

import math

import numpy as np

from ecir import (
    ExposureInterval,
    SharpVideo,
    ThresholdConfig,
    simulate_events,
    synthesize_blur,
    voxelize,
)

interval = ExposureInterval(0.0, 0.12)
times = np.linspace(interval.t_start, interval.t_end, 16)

# One pixel ramps up by exactly 3 thresholds in log space, its neighbor ramps
# down by 2, the third pixel holds still.
c = 0.25
ln0 = math.log(0.2)
frames = np.empty((16, 1, 3))
ramp = (times - times[0]) / interval.length
frames[:, 0, 0] = np.exp(ln0 + 3 * c * ramp)
frames[:, 0, 1] = np.exp(ln0 - 2 * c * ramp)
frames[:, 0, 2] = 0.2

video = SharpVideo(times, frames, interval)
events = simulate_events(video, ThresholdConfig(c_plus=c, c_minus=-c))
print(f"{len(events)} events (expect 3 positive + 2 negative):")
for e in events:
    print(f"  t={e.t:.4f}s pixel=({e.x},{e.y}) polarity={e.p:+d}")

# The blurry frame is the temporal average of the sharp frames.
blurry = synthesize_blur(video)
print("\nblurry frame:", np.round(blurry.values[0], 4))
print("first sharp frame:", np.round(frames[0, 0], 4))
print("last sharp frame:", np.round(frames[-1, 0], 4))

# Voxelization bins signed polarities into m temporal slices per pixel.
hist = voxelize(events, m=8, shape=(1, 3))
print("\nsigned histogram, pixel (0,0) over 8 bins:", hist.bins[:, 0, 0])
print("signed histogram, pixel (1,0) over 8 bins:", hist.bins[:, 0, 1])
print("per-pixel bin sums equal polarity sums:", hist.bins.sum(axis=0)[0])
