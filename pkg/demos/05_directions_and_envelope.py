"""
Direction-dependent speeds in the plane and the spreading envelope
==================================================================

In two dimensions a planar front along a rational direction ``zeta`` sees a
periodic medium in the rotated frame. With ``tau = (1, 0)`` the heterogeneity
varies only across the first axis, so the front along that axis moves while
the front along the second axis is blocked. From a set of planar speeds the
spreading speed of a compact bump in direction ``e`` is the envelope
``min over e' of c*(e') / (e'.e)``.
"""

from fractions import Fraction

from frontlab import reaction as rx
from frontlab.design import COARSE_2D, fg_envelope, measure_direction_speed, rational_directions

# rational unit vectors: exact on the circle, hence commensurate with the lattice
for z in rational_directions(10, exact=True)[4:]:
    print("direction", tuple(str(Fraction(v)) for v in z),
          " transverse period", rx.transverse_period(tuple(float(v) for v in z), (1.0, 1.0)))

axes = [(1.0, 0.0), (0.0, 1.0)]
r = rx.family_multidir((1.0, 0.0), 0.1, axes)
samples = []
for z in [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (0.6, 0.8)]:
    est = measure_direction_speed(r, z, COARSE_2D)
    c = 0.0 if est.classification == "zero" else max(est.c, 0.0)
    samples.append((z, c))
    print(f"c*{z} = {est.c:+.4f} ({est.classification})")

for e, w in fg_envelope(samples):
    print(f"spreading speed along {e}: {w:.4f}")
