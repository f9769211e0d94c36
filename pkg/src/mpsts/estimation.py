"""
Reconstruction of ``(mu, a)`` from homodyne samples.

The likelihood is the ideal quadrature model evaluated on the raw samples.
Because detector inefficiency acts like optical loss, the raw fit estimates
``(eta * mu, a)``; :func:`efficiency_correct` divides the mean photon number
by ``eta`` afterwards.  Error bars come from the expected Fisher information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import optimize, stats

from .errors import DegenerateModelError, EstimationError, InsufficientDataError
from .pnd import DEFAULT_TAIL_EPS, PndParams, pnd_pmf, pnd_truncate
from .quadrature import (
    DetectorModel,
    _EigenRecurrence,
    corrected_kurtosis,
    default_half_width,
    integrate,
    mixture_pdf,
    quadrature_cdf_table,
    sample_moments,
)
from .sampling import make_rng

DENSITY_FLOOR = 1e-300
Z_95 = 1.96


@dataclass(frozen=True, eq=False)
class MLEstimate:
    mu_hat: float
    a_hat: float
    loglik: float
    covariance: np.ndarray = field(repr=False)
    converged: bool
    iterations: int
    n_samples: int
    eta: float = 1.0  # efficiency already divided out of mu_hat
    z: float = Z_95

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def conf_intervals(self) -> dict:
        se_mu, se_a = self.stderr
        return {
            "mu": (self.mu_hat - self.z * se_mu, self.mu_hat + self.z * se_mu),
            "a": (self.a_hat - self.z * se_a, self.a_hat + self.z * se_a),
        }

    @property
    def params(self) -> PndParams:
        return PndParams(self.mu_hat, self.a_hat)

    def to_dict(self) -> dict:
        se_mu, se_a = self.stderr
        return {
            "mu_hat": self.mu_hat,
            "a_hat": self.a_hat,
            "mu_err": float(se_mu),
            "a_err": float(se_a),
            "loglik": self.loglik,
            "cov": self.covariance.tolist(),
            "ci": {k: list(v) for k, v in self.conf_intervals.items()},
            "z": self.z,
            "converged": self.converged,
            "iterations": self.iterations,
            "n_samples": self.n_samples,
            "eta": self.eta,
        }


@dataclass(frozen=True, eq=False)
class FitReport:
    chi2: float
    dof: int
    p_value: float
    edges: np.ndarray = field(repr=False)
    observed: np.ndarray = field(repr=False)
    expected: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"chi2": self.chi2, "dof": self.dof, "p_value": self.p_value,
                "bins": int(self.observed.size)}


class LossEstimate(NamedTuple):
    gamma_t: float
    std_error: float
    mu_hat: float


def log_likelihood(params: PndParams, samples, tail_eps: float = DEFAULT_TAIL_EPS) -> float:
    q = np.asarray(samples, dtype=float).ravel()
    if q.size == 0:
        raise InsufficientDataError("log-likelihood of an empty sample")
    probs = pnd_truncate(params, tail_eps).probs
    return float(np.log(np.maximum(mixture_pdf(probs, q), DENSITY_FLOOR)).sum())


class _CachedLikelihood:
    """Log-likelihood of a fixed sample with a lazily grown table of ``phi_n(q_i)^2``.

    Rows beyond the memory budget are generated on the fly from the stored
    recurrence state, so any truncation depth works.
    """

    def __init__(self, samples, tail_eps: float, memory_bytes: float = 4e8):
        self.q = np.asarray(samples, dtype=float).ravel()
        self.tail_eps = tail_eps
        self.cap = max(int(memory_bytes // (8 * self.q.size)) - 1, 1)
        self._rec = _EigenRecurrence(self.q)
        self._table = np.empty((min(self.cap, 64) + 1, self.q.size))
        self._table[0] = self._rec.squared()
        self._filled = 0
        self._support = 0

    def _grow(self, n_max: int):
        n_max = min(n_max, self.cap)
        if n_max <= self._filled:
            return
        if n_max >= self._table.shape[0]:
            rows = min(max(n_max + 1, 2 * self._table.shape[0]), self.cap + 1)
            table = np.empty((rows, self.q.size))
            table[: self._filled + 1] = self._table[: self._filled + 1]
            self._table = table
        for n in range(self._filled + 1, n_max + 1):
            self._rec.step()
            self._table[n] = self._rec.squared()
        self._filled = n_max

    def density(self, probs: np.ndarray) -> np.ndarray:
        n_max = probs.size - 1
        self._grow(n_max)
        k = min(n_max, self._filled)
        dens = probs[: k + 1] @ self._table[: k + 1]
        if n_max > k:
            rec = _EigenRecurrence.__new__(_EigenRecurrence)
            rec.__dict__.update({key: np.array(val) if isinstance(val, np.ndarray) else val
                                 for key, val in self._rec.__dict__.items()})
            for n in range(k + 1, n_max + 1):
                rec.step()
                dens += probs[n] * rec.squared()
        return dens

    def __call__(self, params: PndParams) -> float:
        # the support only grows so the objective stays continuous near an optimum
        self._support = max(pnd_truncate(params, self.tail_eps).n_max, self._support)
        probs = pnd_pmf(params, np.arange(self._support + 1))
        return float(np.log(np.maximum(self.density(probs), DENSITY_FLOOR)).sum())


def moment_initializer(samples) -> PndParams:
    """Starting point from inverting the analytic variance and kurtosis."""
    m = sample_moments(samples)
    mu0 = m.m2 - 0.5
    if mu0 <= 0.0:
        mu0 = 0.1
    denom = 1.0 + m.beta2 * (2.0 * mu0 + 1.0) ** 2 / (6.0 * mu0 ** 2)
    a0 = 1.0 / denom if denom > 0.0 else math.inf
    return PndParams(mu0, min(max(a0, 0.2), 50.0))


def mle_fit(samples, det: DetectorModel = DetectorModel(1.0), tail_eps: float = DEFAULT_TAIL_EPS,
            max_iter: int = 2000) -> MLEstimate:
    """Maximum-likelihood ``(mu, a)`` from raw quadrature samples.

    Nelder-Mead over ``(ln mu, ln a)`` followed by a BFGS polish.  The
    returned estimate is efficiency-corrected for ``det``.
    """
    q = np.asarray(samples, dtype=float).ravel()
    if q.size < 100:
        raise InsufficientDataError(f"need at least 100 samples, got {q.size}")
    lik = _CachedLikelihood(q, tail_eps)
    start = moment_initializer(q)

    x0 = np.log([start.mu, start.a])
    # tolerances apply to the log-likelihood relative to its size: a sum of
    # 1e5 terms cannot resolve absolute changes of 1e-10
    scale = 1.0 / max(abs(lik(start)), 1.0)

    def objective(x):
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 30):
            return math.inf
        return -scale * lik(PndParams(math.exp(x[0]), math.exp(x[1])))

    simplex = np.array([x0, x0 + [0.05, 0.0], x0 + [0.0, 0.25]])
    nm = optimize.minimize(objective, x0, method="Nelder-Mead",
                           options={"initial_simplex": simplex, "xatol": 1e-8, "fatol": 1e-10,
                                    "maxiter": max_iter, "maxfev": 2 * max_iter})
    best_x, best_f = nm.x, nm.fun
    iterations = int(nm.nit)
    polish = optimize.minimize(objective, best_x, method="BFGS",
                               options={"gtol": 1e-6, "maxiter": 50})
    iterations += int(polish.nit)
    if polish.fun < best_f:
        best_x, best_f = polish.x, polish.fun

    raw = PndParams(math.exp(best_x[0]), math.exp(best_x[1]))
    cov = np.linalg.inv(fisher_information(raw, q.size, tail_eps))
    est = MLEstimate(raw.mu, raw.a, float(-best_f / scale), cov, bool(nm.success), iterations, int(q.size))
    return efficiency_correct(est, det)


def _score_integrands(params: PndParams, tail_eps: float, rel_step: float):
    mu, a = params.mu, params.a
    h_mu, h_a = rel_step * mu, rel_step * a
    points = [params, PndParams(mu + h_mu, a), PndParams(mu - h_mu, a),
              PndParams(mu, a + h_a), PndParams(mu, a - h_a)]
    dists = [pnd_truncate(p, tail_eps) for p in points]
    n_max = max(d.n_max for d in dists)
    probs = np.stack([d.padded(n_max) for d in dists])

    def f(q):
        p, mu_hi, mu_lo, a_hi, a_lo = mixture_pdf(probs, q)
        d_mu = (mu_hi - mu_lo) / (2.0 * h_mu)
        d_a = (a_hi - a_lo) / (2.0 * h_a)
        # far tails contribute nothing but overflow in 1/p
        live = p > 1e-250
        inv = np.where(live, 1.0 / np.where(live, p, 1.0), 0.0)
        return np.stack([d_mu * d_mu * inv, d_mu * d_a * inv, d_a * d_a * inv])

    return f


def fisher_information(params: PndParams, sample_count: int, tail_eps: float = DEFAULT_TAIL_EPS,
                       rel_step: float = 1e-5) -> np.ndarray:
    """Expected Fisher information of ``sample_count`` samples, order ``(mu, a)``."""
    if sample_count < 1:
        raise InsufficientDataError("sample_count must be >= 1")
    if params.mu == 0.0:
        raise DegenerateModelError("a is unidentifiable at mu = 0")
    w = default_half_width(params, 12.0)
    i_mm, i_ma, i_aa = integrate(_score_integrands(params, tail_eps, rel_step), -w, w, rtol=1e-10,
                                 joint=True)
    per_sample = np.array([[i_mm, i_ma], [i_ma, i_aa]])
    # judge conditioning in (ln mu, ln a), where both directions are comparable
    scale = np.array([params.mu, params.a])
    eig = np.linalg.eigvalsh(per_sample * np.outer(scale, scale))
    if not (i_mm > 0 and i_aa > 0 and eig[0] > 1e-9 * eig[1]):
        raise DegenerateModelError(f"singular Fisher information at {params}")
    return float(sample_count) * per_sample


def efficiency_correct(est: MLEstimate, det: DetectorModel) -> MLEstimate:
    """Divide the raw mean photon number (and its error) by ``eta``."""
    if det.eta == 1.0:
        return replace(est, eta=est.eta)
    scale = np.array([1.0 / det.eta, 1.0])
    cov = est.covariance * np.outer(scale, scale)
    return replace(est, mu_hat=est.mu_hat / det.eta, covariance=cov, eta=est.eta * det.eta)


def chi2_goodness_of_fit(samples, params: PndParams, tail_eps: float = DEFAULT_TAIL_EPS) -> FitReport:
    """Pearson chi-squared with equal-probability bins under ``params``.

    ``params`` must describe the distribution of the samples as recorded,
    i.e. raw ``(eta mu, a)`` for data from an inefficient detector.
    """
    q = np.asarray(samples, dtype=float).ravel()
    bins = min(q.size // 10, 100)
    if bins < 4:
        raise InsufficientDataError(f"{q.size} samples cannot fill 4 bins of >= 10 expected counts")
    grid, cdf = quadrature_cdf_table(params, tail_eps)
    levels = np.arange(1, bins) / bins
    inner = np.interp(levels, cdf, grid)
    observed = np.bincount(np.searchsorted(inner, q, side="right"), minlength=bins).astype(float)
    expected = np.full(bins, q.size / bins)
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    dof = bins - 3
    edges = np.concatenate(([-np.inf], inner, [np.inf]))
    return FitReport(chi2, dof, float(stats.chi2.sf(chi2, dof)), edges, observed, expected)


def estimate_loss_level(unconditional_samples, mu_initial: float,
                        det: DetectorModel = DetectorModel(1.0)) -> LossEstimate:
    """Damping ``gamma_t = ln(mu_initial / mu_hat)`` from unconditioned thermal data.

    With ``a`` fixed at 1 the quadrature law is a centred Gaussian of variance
    ``mu + 1/2``, so the thermal maximum-likelihood fit is closed form.
    """
    if not mu_initial > 0.0:
        raise EstimationError("mu_initial must be positive")
    q = np.asarray(unconditional_samples, dtype=float).ravel()
    if q.size < 2:
        raise InsufficientDataError("need at least 2 samples")
    var = float(np.mean(q * q))
    mu_raw = var - 0.5
    if mu_raw <= 0.0:
        raise EstimationError(f"thermal fit gave non-positive mean photon number {mu_raw}")
    mu_hat = mu_raw / det.eta
    se_mu = math.sqrt(2.0 / q.size) * var / det.eta
    gamma_t = max(math.log(mu_initial / mu_hat), 0.0)
    return LossEstimate(gamma_t, se_mu / mu_hat, mu_hat)


def delta_k_from_samples(samples, det: DetectorModel = DetectorModel(1.0),
                         bootstrap_count: int = 1000, seed: int = 0):
    """Kurtosis measure straight from raw samples, with a bootstrap standard error."""
    q = np.asarray(samples, dtype=float).ravel()
    if q.size < 1000:
        raise InsufficientDataError(f"need at least 1000 samples, got {q.size}")
    m = sample_moments(q)
    value = (2.0 / 3.0) * abs(corrected_kurtosis(m.m2, m.m4, det))

    x = q - q.mean()
    powers = np.stack([x, x ** 2, x ** 3, x ** 4])
    rng = make_rng(seed)
    n = q.size
    boot = np.empty(bootstrap_count)
    for b in range(bootstrap_count):
        counts = np.bincount(rng.integers(0, n, n), minlength=n)
        s1, s2, s3, s4 = powers @ counts / n
        m2 = s2 - s1 * s1
        m4 = s4 - 4 * s1 * s3 + 6 * s1 * s1 * s2 - 3 * s1 ** 4
        boot[b] = (2.0 / 3.0) * abs(corrected_kurtosis(m2, m4, det))
    return value, float(boot.std(ddof=1))
