"""
Terraces: staircase fronts that pick different steps in each direction
======================================================================

Stacking three bistable media on the levels [0,1], [1,2] and [2,3] gives a
four-level problem. A front from 3 down to 0 either travels as one piece or
splits into several fronts separated by growing plateaus. Which plateaus
appear depends on the ordering of the component speeds, and that ordering
can differ between the two directions.

Runs for several minutes.
"""

from frontlab.design import Numerics, run_terrace, terrace_scenario

numerics = Numerics(dx=0.05, dt=2.5e-3, t_end=200.0, half_width=60.0)

scn = terrace_scenario("ii", numerics=numerics)
print("component speeds (c_L, c_R), from the top interval down:")
for info, (cl, cr) in zip(scn.components, scn.component_speeds):
    print(f"   tau={info['tau']}, reflected={info['reflected']}:  ({cl:.4f}, {cr:.4f})")

for direction in ("right", "left"):
    _, rep = run_terrace(scn, direction, numerics, t_end=250.0)
    print("\n" + rep.summary())
    print("   expected platforms:", scn.expected_platforms[direction])
