"""
Designing a medium with prescribed front speeds
===============================================

Pick two speeds, one per direction. The ratio ``c_R / c_L`` only depends on
``tau``, so a bisection in ``tau`` matches it; a spatial rescaling
``nu^2 f(nu x, u)`` then multiplies both speeds by ``nu`` to hit the
magnitudes. Reflection handles ``c_R > c_L`` and flipping the roles of the
states handles negative speeds.

Takes a few minutes: each bisection step is a pair of front simulations.
"""

import logging

from frontlab.design import Numerics, design_1d

logging.basicConfig(level=logging.INFO, format="  %(message)s")
numerics = Numerics(dx=0.1, dt=0.01, t_end=120.0, half_width=40.0)

for targets in ((0.3, 0.15), (0.1, 0.2), (-0.2, -0.2)):
    print(f"\ntargets (c_L, c_R) = {targets}")
    res = design_1d(*targets, numerics=numerics)
    print(res.summary())
    print("  relative errors:", ", ".join(f"{e:.2%}" for e in res.relative_errors()))
