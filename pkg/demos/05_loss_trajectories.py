"""
Losing non-Gaussianity to loss
==============================

The synthetic version of the loss experiment: 1- to 5-photon subtracted
thermal light at five damping levels up to gamma_t = 2.35, each measured by
a 78%-efficient homodyne detector and reconstructed.  The CLI command
``mpsts experiment`` runs the full-size grid; here N is kept small.
"""

import math

import numpy as np

from mpsts import DetectorModel, LossChannel, PndParams, all_measures, apply_loss_to_dataset, mle_fit

mu0, eta, n_samples = 8.86, 0.78, 20_000
levels = np.linspace(0.0, 2.35, 5)
det = DetectorModel(eta)
seeds = np.random.SeedSequence(5).spawn(25)

print("M  gamma_t  mu_hat    a_hat   delta_k  (theory)")
for m in range(1, 6):
    params = PndParams(mu0 * (m + 1), m + 1)
    for j, g in enumerate(levels):
        seed = int(seeds[5 * (m - 1) + j].generate_state(1)[0])
        data = apply_loss_to_dataset(params, LossChannel(g, 0.0), det, n_samples, seed)
        est = mle_fit(data.samples, det)
        theory = all_measures(PndParams(params.mu * math.exp(-g), params.a)).delta_k
        print(f"{m}  {g:<7.3f}  {est.mu_hat:7.3f}  {est.a_hat:6.3f}  {all_measures(est.params).delta_k:.4f}   ({theory:.4f})")
