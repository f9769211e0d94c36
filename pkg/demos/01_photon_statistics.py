"""
Photon statistics of subtracted thermal light
=============================================

Removing M photons from a thermal beam of mean mu0 gives a compound-Poisson
law with coherence parameter a = M + 1 and mean mu0 (M + 1).  We check that
against brute-force subtraction, then watch the law lose photons to a lossy
channel while keeping its g2.
"""

import math

import numpy as np

from mpsts import LossChannel, PndParams, damped_pmf, pnd_moments, pnd_pmf, subtract_photons_oracle

mu0 = 8.86

# brute force: apply the annihilation operator M times and renormalize
for m in range(1, 6):
    oracle = subtract_photons_oracle(mu0, m)
    closed = pnd_pmf(PndParams(mu0 * (m + 1), m + 1), oracle.n)
    print(f"M={m}  mean={oracle.mean():7.3f}  sup|oracle - closed form| = {np.abs(oracle.probs - closed).max():.1e}")

# a few probabilities of the 2-photon-subtracted state
params = PndParams(3 * mu0, 3)
n = np.arange(0, 60, 10)
print("\nn   P(n)")
for k, p in zip(n, pnd_pmf(params, n)):
    print(f"{k:<3d} {p:.6f}")

# loss into a vacuum reservoir only rescales the mean; g2 = 1 + 1/a survives
print("\ngamma_t  mean     g2")
for g in (0.0, 0.5, 1.0, 2.35):
    lossy = PndParams(params.mu * math.exp(-g), params.a)
    print(f"{g:<8.2f} {lossy.mu:7.3f}  {pnd_moments(lossy).g2:.4f}")

# a warm reservoir (mu_r > 0) fills the state back up towards thermal light
support = np.arange(400)
for mu_r in (0.0, 0.5):
    p = damped_pmf(params, LossChannel(1.0, mu_r), support)
    mean = (support * p).sum()
    g2 = (support * (support - 1) * p).sum() / mean ** 2
    print(f"mu_r={mu_r}: mean {mean:.3f}, g2 {g2:.4f}")
