"""
The double-integral analytic baseline
=====================================

Events alone, plus the blurry frame, already determine a reconstruction:
intensity scales by exp(c) at every event, and the blurry measurement fixes
the overall level. No fitting involved; this is the classic analytic
deblurring route and the weakest baseline the polynomial fit must beat.
"""

import math

import numpy as np

from ecir import BlurryFrame, EventStream, ExposureInterval, edi_reconstruct, edi_video

interval = ExposureInterval(-1.0, 1.0)

# One pixel, one positive event at t=0, threshold ln 2: intensity doubles at
# the event. The blur average 0.6 forces levels 0.4 before and 0.8 after.
blurry = BlurryFrame(np.full((1, 1), 0.6), interval)
stream = EventStream(
    np.array([0]), np.array([0]), np.array([0.0]), np.array([1]), interval
)
c = math.log(2.0)
for t in (-0.8, -0.1, 0.0, 0.4, 1.0):
    print(f"L({t:+.1f}) = {edi_reconstruct(blurry, stream, c, t)[0, 0]:.4f}")

# Blur consistency is built into the formula: averaging the reconstruction
# over the window returns the blurry input.
times = np.linspace(interval.t_start, interval.t_end, 2001)
stack = edi_video(blurry, stream, c, times)
avg = np.trapezoid(stack[:, 0, 0], times) / interval.length
print(f"\ntemporal average of the reconstruction: {avg:.6f} (blurry 0.6)")

# A busier pixel: alternating polarities produce a staircase.
k = 10
t = np.linspace(-0.9, 0.9, k)
p = np.array([1, 1, -1, 1, -1, -1, -1, 1, 1, 1])
stream = EventStream(np.zeros(k, int), np.zeros(k, int), t, p, interval)
print("\nstaircase reconstruction:")
for q in np.linspace(-1.0, 1.0, 9):
    print(f"  L({q:+.2f}) = {edi_reconstruct(blurry, stream, 0.4, float(q))[0, 0]:.4f}")
