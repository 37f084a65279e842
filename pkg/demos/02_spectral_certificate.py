"""
Is the medium really bistable?
==============================

Before measuring any speed we check that 0 and 1 are the only stable
periodic steady states: every other periodic steady state must have a
positive principal eigenvalue. States are found by Newton's method from
many seeds (constants, shifted kinks, cosines and profiles harvested from
random parabolic runs); eigenvalues come from power iteration.
"""

import numpy as np

from frontlab import reaction as rx
from frontlab.spectra import certify_bistable, principal_eigenvalue

# homogeneous case: the middle state 1/2 has lambda_1 = f0'(1/2) = 1/4
lam, _ = principal_eigenvalue(rx.cubic(), np.full(128, 0.5))
print(f"lambda_1 at u = 1/2 for the plain cubic: {lam:.12f}")

for tau in (0.0, 0.5, 1.0):
    cert = certify_bistable(rx.family_1d(tau), harvest=10)
    print(f"\ntau = {tau}: {'certified' if cert else 'refused: ' + cert.reason}")
    for s in cert.states:
        print(f"   state range [{s.umin:.4f}, {s.umax:.4f}]  lambda_1 = {s.lambda1:+.4f}  {s.tag}")
