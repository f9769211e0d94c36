"""
Homodyne quadrature model for Fock-diagonal states.

Convention: the vacuum quadrature variance is 1/2, i.e.
``phi_0(q) = pi**-0.25 * exp(-q**2 / 2)``.  Other homodyne conventions differ
by factors of sqrt(2) in ``q``.

Detector inefficiency ``eta`` is modelled on the raw data as

    q_meas = sqrt(eta) * q + xi,    xi ~ N(0, (1 - eta) / 2),

which is the same as convolving with a Gaussian of variance
``(1 - eta) / (2 eta)`` and rescaling by ``sqrt(eta)``.  It is equivalent to
optical loss ``eta`` acting on the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ParameterError, UnphysicalDataError
from .pnd import DEFAULT_TAIL_EPS, PndParams, pnd_truncate

_LOG_PI_QUARTER = 0.25 * math.log(math.pi)
_RESCALE_AT = 1e150


@dataclass(frozen=True)
class DetectorModel:
    """Homodyne detector with quantum efficiency ``eta``."""

    eta: float = 1.0
    sigma_c_sq: float = field(init=False)

    def __post_init__(self):
        eta = float(self.eta)
        if not (0.0 < eta <= 1.0):
            raise ParameterError(f"eta must lie in (0, 1], got {self.eta!r}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "sigma_c_sq", (1.0 - eta) / (2.0 * eta))

    @property
    def noise_variance(self) -> float:
        """Variance of the additive raw-data noise, ``eta * sigma_c_sq``."""
        return (1.0 - self.eta) / 2.0


@dataclass(frozen=True)
class MomentSummary:
    m2: float
    m4: float
    kurtosis: float
    beta2: float

    @classmethod
    def from_central(cls, m2: float, m4: float) -> "MomentSummary":
        if not m2 > 0.0:
            raise InsufficientDataError("second central moment is zero: kurtosis undefined")
        k = m4 / (m2 * m2)
        return cls(float(m2), float(m4), float(k), float(k - 3.0))


class _EigenRecurrence:
    """Iterates ``phi_n(q)`` upward in ``n`` with per-point log rescaling.

    Keeps two normalized-shape vectors and a log scale so that neither the
    Gaussian factor underflows nor the growth far outside the classical
    region overflows.
    """

    def __init__(self, q):
        self.q = np.asarray(q, dtype=float)
        self.n = 0
        self.prev = np.zeros_like(self.q)
        self.cur = np.ones_like(self.q)
        self.log_scale = -0.5 * self.q ** 2 - _LOG_PI_QUARTER

    def value(self) -> np.ndarray:
        return self.cur * np.exp(self.log_scale)

    def squared(self) -> np.ndarray:
        return self.cur ** 2 * np.exp(2.0 * self.log_scale)

    def step(self):
        n = self.n
        nxt = self.q * math.sqrt(2.0 / (n + 1)) * self.cur - math.sqrt(n / (n + 1)) * self.prev
        self.prev, self.cur = self.cur, nxt
        self.n = n + 1
        big = np.abs(nxt) > _RESCALE_AT
        if np.any(big):
            s = np.where(big, np.abs(nxt), 1.0)
            self.cur = nxt / s
            self.prev = self.prev / s
            self.log_scale = self.log_scale + np.log(s)


def oscillator_eigenfunction(n: int, q):
    """Normalized harmonic-oscillator eigenfunction ``phi_n(q)``."""
    n = int(n)
    if n < 0:
        raise ParameterError("n must be nonnegative")
    rec = _EigenRecurrence(q)
    for _ in range(n):
        rec.step()
    out = rec.value()
    return float(out) if out.ndim == 0 else out


def eigenfunctions_squared(n_max: int, q) -> np.ndarray:
    """Matrix of ``phi_n(q)**2`` with shape ``(n_max + 1,) + q.shape``."""
    rec = _EigenRecurrence(q)
    out = np.empty((n_max + 1,) + rec.q.shape)
    out[0] = rec.squared()
    for n in range(1, n_max + 1):
        rec.step()
        out[n] = rec.squared()
    return out


def mixture_pdf(probs, q) -> np.ndarray:
    """``sum_n probs[n] * phi_n(q)**2`` without storing every eigenfunction.

    ``probs`` may be 2-D, one probability vector per row, in which case the
    result has a leading axis with one density per row.
    """
    probs = np.asarray(probs, dtype=float)
    rec = _EigenRecurrence(q)
    if probs.ndim == 2:
        acc = np.multiply.outer(probs[:, 0], rec.squared())
        for n in range(1, probs.shape[1]):
            rec.step()
            acc += np.multiply.outer(probs[:, n], rec.squared())
        return acc
    acc = probs[0] * rec.squared()
    for n in range(1, probs.size):
        rec.step()
        if probs[n] != 0.0:
            acc += probs[n] * rec.squared()
    return acc


def quadrature_pdf(params: PndParams, q, tail_eps: float = DEFAULT_TAIL_EPS):
    """Quadrature density of the phase-averaged compound-Poisson state."""
    dist = pnd_truncate(params, tail_eps)
    out = mixture_pdf(dist.probs, q)
    return float(out) if np.ndim(out) == 0 else out


def default_half_width(params: PndParams, n_sigma: float = 6.0) -> float:
    """Integration half-range ``n_sigma * sqrt(mu + 1/2)``, widened for heavy tails."""
    sd = math.sqrt(params.mu + 0.5)
    if params.a < 1.0:
        # sub-thermal a has heavier-than-Gaussian tails
        sd *= math.sqrt(1.0 + 1.0 / params.a)
    return n_sigma * sd


def integrate(f, lo: float, hi: float, rtol: float = 1e-9, atol: float = 1e-15,
              n_start: int = 64, max_level: int = 14, joint: bool = False):
    """Composite trapezoid rule on ``[lo, hi]``, halving the step until converged.

    ``f`` is vectorized and may return a trailing axis of several integrands
    (shape ``(..., len(x))``).  Converges geometrically for smooth functions
    that decay at both ends, which is the case for every integrand here.
    With ``joint`` the relative tolerance is measured against the largest
    component, so entries that vanish analytically do not stall refinement.
    """
    x = np.linspace(lo, hi, n_start + 1)
    y = np.asarray(f(x), dtype=float)
    h = (hi - lo) / n_start
    est = h * (y.sum(axis=-1) - 0.5 * (y[..., 0] + y[..., -1]))
    for _ in range(max_level):
        h *= 0.5
        mid = x[:-1] + h
        ym = np.asarray(f(mid), dtype=float)
        new = 0.5 * est + h * ym.sum(axis=-1)
        xs = np.empty(x.size + mid.size)
        xs[0::2], xs[1::2] = x, mid
        x = xs
        size = np.max(np.abs(new)) if joint else np.abs(new)
        if np.all(np.abs(new - est) <= np.maximum(rtol * size, atol)):
            return new
        est = new
    return est


def numeric_moments(params: PndParams, tail_eps: float = DEFAULT_TAIL_EPS,
                    n_sigma: float = 12.0) -> MomentSummary:
    """Central moments of :func:`quadrature_pdf` by numerical integration."""
    dist = pnd_truncate(params, tail_eps)
    w = default_half_width(params, n_sigma)

    def f(q):
        p = mixture_pdf(dist.probs, q)
        return np.stack([p, q ** 2 * p, q ** 4 * p])

    norm, m2, m4 = integrate(f, -w, w, rtol=1e-12)
    return MomentSummary.from_central(m2 / norm, m4 / norm)


def ideal_moments(params: PndParams) -> MomentSummary:
    mu, a = params.mu, params.a
    m2 = mu + 0.5
    beta2 = -6.0 * (mu / (2.0 * mu + 1.0)) ** 2 * (a - 1.0) / a
    return MomentSummary(m2, (beta2 + 3.0) * m2 * m2, beta2 + 3.0, beta2)


def detector_smear_pdf(params: PndParams, det: DetectorModel, q,
                       tail_eps: float = DEFAULT_TAIL_EPS, step: float = 0.01):
    """Raw-data density: ideal density convolved with the detector noise.

    Evaluated by direct numerical convolution (trapezoid on a fine grid of
    the ideal quadrature), not through the loss equivalence.
    """
    q = np.asarray(q, dtype=float)
    if det.eta == 1.0:
        return quadrature_pdf(params, q, tail_eps)
    dist = pnd_truncate(params, tail_eps)
    w = default_half_width(params, 10.0) + 2.0
    x = np.arange(-w, w + step / 2, step)
    ideal = mixture_pdf(dist.probs, x)
    s2 = det.noise_variance
    se = math.sqrt(det.eta)
    flat = q.reshape(-1)
    out = np.empty(flat.shape)
    norm = 1.0 / math.sqrt(2.0 * math.pi * s2)
    for start in range(0, flat.size, 256):
        qq = flat[start:start + 256, None]
        kern = norm * np.exp(-((qq - se * x[None, :]) ** 2) / (2.0 * s2))
        vals = kern * ideal[None, :]
        out[start:start + 256] = step * (vals.sum(axis=1) - 0.5 * (vals[:, 0] + vals[:, -1]))
    out = out.reshape(q.shape)
    return float(out) if out.ndim == 0 else out


def corrected_kurtosis(m2_raw: float, m4_raw: float, det: DetectorModel) -> float:
    """Excess kurtosis of the ideal quadrature from raw moments.

    Only the second cumulant is shifted by the Gaussian detector noise; the
    fourth cumulant is unchanged.
    """
    denom = m2_raw - det.eta * det.sigma_c_sq
    if not denom > 0.0:
        raise UnphysicalDataError(
            f"m2_raw = {m2_raw} does not exceed the detector noise variance {det.eta * det.sigma_c_sq}")
    return (m4_raw - 3.0 * m2_raw ** 2) / denom ** 2


def sample_moments(samples) -> MomentSummary:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 4:
        raise InsufficientDataError(f"need at least 4 samples, got {x.size}")
    d = x - x.mean()
    d2 = d * d
    return MomentSummary.from_central(d2.mean(), (d2 * d2).mean())


def quadrature_cdf_table(params: PndParams, tail_eps: float = DEFAULT_TAIL_EPS,
                         n_points: int = 20001, n_sigma: float = 12.0):
    """Grid ``(q, F(q))`` of the model CDF for binning and KS tests."""
    dist = pnd_truncate(params, tail_eps)
    w = default_half_width(params, n_sigma)
    q = np.linspace(-w, w, n_points)
    p = mixture_pdf(dist.probs, q)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(q))))
    cdf /= cdf[-1]
    return q, cdf


def quadrature_cdf(params: PndParams, q, tail_eps: float = DEFAULT_TAIL_EPS):
    grid, cdf = quadrature_cdf_table(params, tail_eps)
    return np.interp(q, grid, cdf, left=0.0, right=1.0)
