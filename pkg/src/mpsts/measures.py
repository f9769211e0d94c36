"""
Non-Gaussianity measures of compound-Poisson states.

Every measure compares the state ``(mu, a)`` with the thermal state of the
same mean, which is the closest Gaussian state for this family.  Both states
are diagonal in the Fock basis, so traces reduce to sums over photon numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MpstsError, ParameterError
from .pnd import DEFAULT_TAIL_EPS, PndParams, TruncatedPnd, pnd_pmf, pnd_truncate
from .quadrature import ideal_moments

MEASURE_NAMES = ("delta_hs", "delta_re", "delta_f", "delta_k")


@dataclass(frozen=True)
class NonGaussianityReport:
    delta_hs: float
    delta_re: float
    delta_f: float
    delta_k: float
    errors: Optional[dict] = None

    def as_dict(self) -> dict:
        out = {name: getattr(self, name) for name in MEASURE_NAMES}
        if self.errors is not None:
            out.update({f"{k}_err": v for k, v in self.errors.items()})
        return out


def _paired(params: PndParams, tail_eps: float):
    """State and same-mean thermal probabilities, both evaluated on the longer support.

    Zero-padding the shorter vector instead would drop cross terms such as
    ``sqrt(p t)`` where ``t`` is still large.
    """
    thermal_params = PndParams(params.mu, 1.0)
    n_max = max(pnd_truncate(params, tail_eps).n_max, pnd_truncate(thermal_params, tail_eps).n_max)
    n = np.arange(n_max + 1)
    return np.atleast_1d(pnd_pmf(params, n)), np.atleast_1d(pnd_pmf(thermal_params, n))


def delta_hs(params: PndParams, tail_eps: float = DEFAULT_TAIL_EPS) -> float:
    """Normalized Hilbert-Schmidt distance ``Tr[(rho - tau)^2] / (2 Tr rho^2)``."""
    p, t = _paired(params, tail_eps)
    purity = p @ p
    return float(0.5 * (1.0 + (t @ t - 2.0 * (t @ p)) / purity))


def delta_re(params: PndParams, tail_eps: float = DEFAULT_TAIL_EPS) -> float:
    """Relative entropy to the same-mean thermal state (nats).

    Equals the entropy of the thermal state minus the entropy of the state.
    """
    mu = params.mu
    if mu == 0.0:
        return 0.0
    # p ln p tails decay slower than p by a log factor
    p = pnd_truncate(params, tail_eps * 1e-3).probs
    nz = p[p > 0]
    thermal_entropy = (mu + 1.0) * math.log1p(mu) - mu * math.log(mu)
    return float(thermal_entropy + nz @ np.log(nz))


def fidelity_diagonal(p1: TruncatedPnd, p2: TruncatedPnd) -> float:
    """Uhlmann fidelity of two Fock-diagonal states, ``(sum sqrt(p1 p2))^2``."""
    n_max = max(p1.n_max, p2.n_max)
    overlap = np.sqrt(p1.padded(n_max) * p2.padded(n_max)).sum()
    return float(min(overlap, 1.0) ** 2)


def delta_f(params: PndParams, tail_eps: float = DEFAULT_TAIL_EPS) -> float:
    """Bures-type measure ``1 - sqrt(F)`` against the same-mean thermal state."""
    p, t = _paired(params, tail_eps)
    return float(1.0 - min(np.sqrt(p * t).sum(), 1.0))


def delta_k(params: PndParams) -> float:
    """Kurtosis measure ``(2/3)|beta2|`` of the quadrature distribution."""
    return (2.0 / 3.0) * abs(ideal_moments(params).beta2)


def all_measures(params: PndParams, tail_eps: float = DEFAULT_TAIL_EPS) -> NonGaussianityReport:
    return NonGaussianityReport(
        delta_hs(params, tail_eps),
        delta_re(params, tail_eps),
        delta_f(params, tail_eps),
        delta_k(params),
    )


def sweep_measures(a_grid, mu_grid, tail_eps: float = DEFAULT_TAIL_EPS) -> list:
    """All four measures on the product grid ``a_grid x mu_grid``.

    Returns one dict per cell with keys ``a, mu, delta_hs, delta_re, delta_f,
    delta_k, error``.  A failing cell gets NaN measures and a message in
    ``error``; the sweep carries on.
    """
    a_grid = list(a_grid)
    mu_grid = list(mu_grid)
    if not a_grid or not mu_grid:
        raise ParameterError("sweep grids must be nonempty")
    rows = []
    for a in a_grid:
        for mu in mu_grid:
            row = {"a": float(a), "mu": float(mu)}
            try:
                row.update(all_measures(PndParams(mu, a), tail_eps).as_dict())
                row["error"] = ""
            except MpstsError as exc:
                row.update({name: math.nan for name in MEASURE_NAMES})
                row["error"] = str(exc)
            rows.append(row)
    return rows


def delta_k_gradient(params: PndParams) -> np.ndarray:
    """Analytic gradient of ``delta_k`` with respect to ``(mu, a)``."""
    mu, a = params.mu, params.a
    s = 2.0 * mu / (2.0 * mu + 1.0)
    frac = (a - 1.0) / a
    sign = 1.0 if a >= 1.0 else -1.0
    d_mu = 2.0 * s * 2.0 / (2.0 * mu + 1.0) ** 2 * frac
    d_a = s * s / (a * a)
    return sign * np.array([d_mu, d_a])


def _fd_gradient(fn, params: PndParams, rel_step: float = 1e-5) -> np.ndarray:
    mu, a = params.mu, params.a
    h_mu = rel_step * max(mu, 1e-3)
    h_a = rel_step * a
    mu_lo = max(mu - h_mu, 0.0)
    d_mu = (fn(PndParams(mu + h_mu, a)) - fn(PndParams(mu_lo, a))) / (mu + h_mu - mu_lo)
    d_a = (fn(PndParams(mu, a + h_a)) - fn(PndParams(mu, a - h_a))) / (2.0 * h_a)
    return np.array([d_mu, d_a])


def measure_error_propagation(params: PndParams, covariance,
                              tail_eps: float = DEFAULT_TAIL_EPS) -> dict:
    """Linearized standard errors of each measure from a ``(mu, a)`` covariance."""
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-14):
        raise ParameterError("covariance must be a symmetric 2x2 matrix")
    eig = np.linalg.eigvalsh(cov)
    if eig.min() < -1e-10 * max(abs(eig.max()), 1e-300):
        raise ParameterError("covariance is not positive semidefinite")

    grads = {
        "delta_hs": _fd_gradient(lambda p: delta_hs(p, tail_eps), params),
        "delta_re": _fd_gradient(lambda p: delta_re(p, tail_eps), params),
        "delta_f": _fd_gradient(lambda p: delta_f(p, tail_eps), params),
        "delta_k": delta_k_gradient(params),
    }
    return {name: float(math.sqrt(max(g @ cov @ g, 0.0))) for name, g in grads.items()}
