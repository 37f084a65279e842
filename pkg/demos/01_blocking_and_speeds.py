"""
Blocked and propagating fronts in a periodic medium
===================================================

A balanced cubic has a standing kink. Adding a periodic bump that acts only
on one side of each cell breaks the left/right symmetry: with ``tau = 0`` the
kink still solves the equation exactly, so a front invading to the right is
stuck, while the mirror front moves. Raising ``tau`` switches on the mirror
bump and both fronts move, at equal speeds once ``tau = 1``.

Runs in about a minute at the coarse resolution used here.
"""

from frontlab import reaction as rx
from frontlab.design import Numerics, speed_map_1d

# coarser than the acceptance runs, enough to see the picture
numerics = Numerics(dx=0.1, dt=0.01, t_end=120.0, half_width=40.0)

# the net push of the medium: the integral of f over a cell and over [0, 1]
for tau in (0.0, 0.5, 1.0):
    sign, value = rx.integral_sign(rx.family_1d(tau))
    print(f"tau={tau:4}: integral of f = {value:.5f} ({sign})")

# speed of the leftward (c_L) and rightward (c_R) fronts along a tau grid
smap = speed_map_1d([0.0, 0.25, 0.5, 0.75, 1.0], numerics=numerics)
print("\n  tau      c_L        c_R     classes")
for tau, (el, er) in zip(smap.params, smap.estimates):
    print(f"{tau:5.2f}  {el.c:9.5f}  {er.c:9.5f}   {el.classification}/{er.classification}")
print("monotone in tau:", smap.is_monotone())
