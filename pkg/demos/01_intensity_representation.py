"""
The per-pixel intensity representation
======================================

One pixel's intensity over an exposure window is a polynomial. Its
derivative is pinned at a handful of keypoint timestamps; integrating the
derivative and solving one constant against the blurry measurement recovers
the whole curve.
"""

import numpy as np

from ecir import (
    ExposureInterval,
    IntensityPoly,
    KeypointSet,
    eval_derivative,
    eval_primitive,
    lagrange_basis,
    select_keypoints,
    solve_constant,
    to_monomial,
)

# A 120 ms exposure, like a slow handheld shot.
interval = ExposureInterval(-0.06, 0.06)

# Suppose this pixel saw events at these instants. Keypoint selection starts
# from evenly spaced pivots and shifts each one to its nearest free event, so
# the derivative is parameterized exactly where the intensity was changing.
event_times = np.array([-0.055, -0.052, -0.020, 0.031, 0.033])
keypoints = select_keypoints(event_times, interval, n=5)
print("keypoints (s):", np.round(keypoints.timestamps, 4))

# The Lagrange property: basis i is 1 at keypoint i, 0 at every other one.
for i in range(keypoints.n):
    row = [lagrange_basis(keypoints, i, float(t)) for t in keypoints.timestamps]
    print(f"basis {i} at keypoints:", np.round(row, 12))

# Pin derivative values at the keypoints (intensity per second) and build
# the curve. The constant comes from the blurry measurement: the curve's
# temporal average must equal it.
deriv_values = np.array([8.0, 6.0, -2.0, -5.0, -4.0])
blurry_value = 0.42
base = IntensityPoly(keypoints, deriv_values)
a = solve_constant(base, blurry_value)
poly = IntensityPoly(keypoints, deriv_values, a)
print(f"\nintegration constant a = {a:.6f}")
print(f"temporal average of the curve = {poly.blur_value():.12f} (target {blurry_value})")

# The curve interpolates the pinned derivatives...
for t, d in zip(keypoints.timestamps, deriv_values):
    print(f"dL/dt({t:+.4f}) = {eval_derivative(poly, float(t)):+.6f} (pinned {d:+.1f})")

# ...and can be rendered at any instant inside the window.
for t in np.linspace(interval.t_start, interval.t_end, 5):
    print(f"L({t:+.3f}) = {eval_primitive(poly, float(t)):.6f}")

# The same curve in the standard monomial basis over normalized time.
mono = to_monomial(poly)
print("\nmonomial coefficients (low order first):")
print(np.round(mono.coefficients, 6))
