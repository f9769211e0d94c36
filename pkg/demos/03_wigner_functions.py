"""
Wigner functions: from a Gaussian to a ring
===========================================

Thermal light (a = 1) has a Gaussian Wigner function peaked at the origin.
Subtracting photons hollows out the centre, leaving a ring that stays
nonnegative everywhere.
"""

import math

import numpy as np

from mpsts import PndParams, quadrature_pdf, radial_argmax, wigner_mpsts, wigner_radial

for mu in (2.0, 4.0, 6.0):
    for a in (1.0, 2.0, 3.0):
        params = PndParams(mu, a)
        print(f"mu={mu:g} a={a:g}: W(0,0)={wigner_radial(params, 0.0):.4f}  peak radius={radial_argmax(params):.3f}")

# integrating out p must give the homodyne density
params = PndParams(4.0, 3.0)
half = 12 * math.sqrt(params.mu + 0.5)
grid = wigner_mpsts(params, p_axis=np.linspace(-half, half, 1201))
gap = np.abs(grid.marginal_q() - quadrature_pdf(params, grid.q_axis)).max()
print(f"\nmarginal vs quadrature density: {gap:.1e}")
print(f"grid total {grid.total():.8f}, min W {grid.values.min():.2e}")

# radial profile through the ring
r = np.linspace(0, 5, 11)
print("\nr     W")
for ri, w in zip(r, wigner_radial(params, r ** 2)):
    print(f"{ri:<5.1f} {w: .5f}")
