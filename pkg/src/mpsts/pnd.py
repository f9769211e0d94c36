"""
Photon-number statistics of multiphoton-subtracted thermal states.

The family is the two-parameter compound-Poisson (negative-binomial) law

    P(n) = Gamma(a + n) / (Gamma(a) n!) * (mu/a)^n / (1 + mu/a)^(n + a)

with mean ``mu`` and coherence parameter ``a``.  ``a = 1`` is the thermal
(Bose-Einstein) law, ``a = M + 1`` the M-photon-subtracted thermal state and
``a -> inf`` the Poisson law.  Everything here works for fractional ``a``.

All pmf evaluation happens in log space and is exponentiated last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import binom

from .errors import ParameterError

DEFAULT_TAIL_EPS = 1e-12

# above this the log-gamma difference loses digits; switch to a log1p product
_LARGE_A = 1e4


@dataclass(frozen=True)
class PndParams:
    """Mean photon number ``mu`` and coherence parameter ``a``."""

    mu: float
    a: float

    def __post_init__(self):
        mu, a = float(self.mu), float(self.a)
        if not (math.isfinite(mu) and mu >= 0.0):
            raise ParameterError(f"mu must be finite and >= 0, got {self.mu!r}")
        if not (math.isfinite(a) and a > 0.0):
            raise ParameterError(f"a must be finite and > 0, got {self.a!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "a", a)

    @property
    def theta(self) -> float:
        """Gamma scale parameter ``mu / a`` of the intensity mixture."""
        return self.mu / self.a


@dataclass(frozen=True)
class LossChannel:
    """Damping ``gamma_t`` towards a thermal reservoir of mean ``mu_r``."""

    gamma_t: float = 0.0
    mu_r: float = 0.0

    def __post_init__(self):
        g, r = float(self.gamma_t), float(self.mu_r)
        if not (math.isfinite(g) and g >= 0.0):
            raise ParameterError(f"gamma_t must be finite and >= 0, got {self.gamma_t!r}")
        if not (math.isfinite(r) and r >= 0.0):
            raise ParameterError(f"mu_r must be finite and >= 0, got {self.mu_r!r}")
        object.__setattr__(self, "gamma_t", g)
        object.__setattr__(self, "mu_r", r)

    @property
    def transmission(self) -> float:
        return math.exp(-self.gamma_t)

    @property
    def mu_t(self) -> float:
        """Reservoir photons admitted so far, ``mu_r (1 - exp(-gamma_t))``."""
        return self.mu_r * -math.expm1(-self.gamma_t)


@dataclass(frozen=True, eq=False)
class TruncatedPnd:
    """Photon-number probabilities on ``0..n_max`` with a certified tail bound.

    ``params`` is ``None`` for distributions that do not come from the
    analytic family (oracle outputs, empirical histograms).
    """

    params: Optional[PndParams]
    n_max: int
    probs: np.ndarray = field(repr=False)
    tail_bound: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size != self.n_max + 1:
            raise ParameterError("probs must be a vector of length n_max + 1")
        if np.any(probs < 0):
            raise ParameterError("probabilities must be nonnegative")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_max + 1)

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def mean(self) -> float:
        return float(self.n @ self.probs)

    def factorial_moment(self, order: int) -> float:
        """``sum n (n-1) ... (n-order+1) P(n)``."""
        n = self.n.astype(float)
        w = np.ones_like(n)
        for j in range(order):
            w *= n - j
        return float(w @ self.probs)

    def padded(self, n_max: int) -> np.ndarray:
        """Probabilities zero-padded (never cut) to at least ``n_max + 1`` entries."""
        if n_max <= self.n_max:
            return np.array(self.probs)
        out = np.zeros(n_max + 1)
        out[: self.n_max + 1] = self.probs
        return out


class PndMoments(NamedTuple):
    mean: float
    variance: float
    g2: Optional[float]  # None when mu == 0 (no photons, g2 undefined)


def log_pnd_pmf(params: PndParams, n) -> np.ndarray:
    """Natural log of the pmf; ``-inf`` where the probability is zero."""
    n = np.asarray(n)
    if np.any(n < 0) or not np.all(np.equal(np.mod(n, 1), 0)):
        raise ParameterError("photon numbers must be nonnegative integers")
    n = n.astype(np.int64)
    mu, a = params.mu, params.a
    if mu == 0.0:
        return np.where(n == 0, 0.0, -np.inf)

    nf = n.astype(float)
    if a <= _LARGE_A:
        log_coef = gammaln(a + nf) - gammaln(a) - gammaln(nf + 1.0) + nf * (math.log(mu) - math.log(a))
    else:
        # (a)_n (mu/a)^n = mu^n * prod_{k<n} (1 + k/a)
        top = int(n.max()) if n.size else 0
        log_rise = np.concatenate(([0.0], np.cumsum(np.log1p(np.arange(top) / a))))
        log_coef = log_rise[n] - gammaln(nf + 1.0) + nf * math.log(mu)
    return log_coef - (nf + a) * math.log1p(mu / a)


def pnd_pmf(params: PndParams, n):
    """Compound-Poisson probability of ``n`` photons (scalar or array ``n``)."""
    out = np.exp(log_pnd_pmf(params, n))
    return float(out) if out.ndim == 0 else out


def _tail_ratio_bound(params: PndParams, n: np.ndarray) -> np.ndarray:
    """Upper bound on ``P(k+1)/P(k)`` valid for every ``k >= n``."""
    r = params.theta / (1.0 + params.theta)
    ratio = r * (params.a + n) / (n + 1.0)
    # ratio decreases to r for a >= 1 and increases to r for a < 1
    return np.maximum(ratio, r)


def pnd_truncate(params: PndParams, tail_eps: float = DEFAULT_TAIL_EPS) -> TruncatedPnd:
    """Smallest support ``0..n_max`` whose neglected tail is certified ``<= tail_eps``.

    The search starts from ``mean + 10 std`` and the tail is bounded by the
    geometric series implied by the monotone pmf ratio.
    """
    if not (0.0 < tail_eps < 1.0):
        raise ParameterError(f"tail_eps must lie in (0, 1), got {tail_eps!r}")
    if params.mu == 0.0:
        return TruncatedPnd(params, 0, np.array([1.0]), 0.0)

    m = pnd_moments(params)
    length = int(math.ceil(m.mean + 10.0 * math.sqrt(m.variance))) + 16
    while True:
        n = np.arange(length + 1)
        logp = log_pnd_pmf(params, n)
        # bound on the mass strictly above N, for N = 0 .. length-1
        rho = _tail_ratio_bound(params, n[1:].astype(float))
        with np.errstate(divide="ignore"):
            log_bound = np.where(rho < 1.0, logp[1:] - np.log1p(-np.minimum(rho, 1.0)), np.inf)
        # half the budget is kept for rounding in the summed pmf values
        ok = np.nonzero(log_bound <= math.log(0.5 * tail_eps))[0]
        if ok.size:
            n_max = int(ok[0])
            return TruncatedPnd(params, n_max, np.exp(logp[: n_max + 1]), float(np.exp(log_bound[n_max])))
        length *= 2


def pnd_moments(params: PndParams) -> PndMoments:
    mu, a = params.mu, params.a
    g2 = 1.0 + 1.0 / a if mu > 0.0 else None
    return PndMoments(mu, mu + mu * mu / a, g2)


def bose_einstein(mu0: float, tail_eps: float = DEFAULT_TAIL_EPS) -> TruncatedPnd:
    """Thermal photon statistics of mean ``mu0``."""
    return pnd_truncate(PndParams(mu0, 1.0), tail_eps)


def subtract_photons_oracle(mu0: float, m_subtract: int,
                            tail_eps: float = DEFAULT_TAIL_EPS) -> TruncatedPnd:
    """Brute-force M-fold photon subtraction from a thermal state.

    Applies ``P'(n) ~ (n + 1) P(n + 1)`` ``m_subtract`` times to the
    Bose-Einstein law of mean ``mu0``, renormalizing after each step.  The
    analytic family is never consulted, so this is an independent check of it.
    """
    mu0 = float(mu0)
    m_subtract = int(m_subtract)
    if not (math.isfinite(mu0) and mu0 >= 0.0):
        raise ParameterError(f"mu0 must be finite and >= 0, got {mu0!r}")
    if m_subtract < 0:
        raise ParameterError("m_subtract must be nonnegative")
    if m_subtract == 0:
        return TruncatedPnd(None, *_be_vector(mu0, tail_eps))
    if mu0 == 0.0:
        raise ParameterError("cannot subtract photons from vacuum: zero trace after annihilation")

    # Source cutoff N: the M-th factorial-moment weights w(n) = n!/(n-M)! P_BE(n)
    # must have a certified relative tail below tail_eps.  Their ratio
    # r (n+1)/(n+1-M) decreases in n, giving a geometric bound.
    r = mu0 / (1.0 + mu0)
    M = m_subtract
    length = int(math.ceil((M + 1) * mu0 * 4 + 20 * math.sqrt((M + 1) * (mu0 + 1) ** 2))) + M + 16
    while True:
        n = np.arange(length + 1, dtype=float)
        log_be = math.log1p(-r) + n * math.log(r)
        with np.errstate(divide="ignore"):
            log_w = gammaln(n + 1) - gammaln(np.maximum(n - M + 1, 1)) + log_be
        log_w[: M] = -np.inf
        log_total = logsumexp(log_w)
        k = n[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(k > M, r * k / (k - M), np.inf)
            log_bound = np.where(rho < 1.0, log_w[1:] - np.log1p(-np.minimum(rho, 1.0)), np.inf) - log_total
        # half the budget is kept for rounding in the summed pmf values
        ok = np.nonzero(log_bound <= math.log(0.5 * tail_eps))[0]
        if ok.size:
            cutoff = int(ok[0])
            break
        length *= 2

    p = np.exp(log_be[: cutoff + 1])
    for _ in range(M):
        p = np.arange(1, p.size) * p[1:]
        p /= p.sum()
    return TruncatedPnd(None, p.size - 1, p, float(np.exp(log_bound[cutoff])))


def _be_vector(mu0, tail_eps):
    t = bose_einstein(mu0, tail_eps)
    return t.n_max, np.array(t.probs), t.tail_bound


def gauss_2f1_terminating(p: float, n: int, c: float, x: float) -> float:
    """Terminating Gauss series ``2F1(p, -n; c; x)`` summed term by term.

    Exact for the polynomial (finite-sum) case.  Subject to cancellation when
    terms alternate and ``n`` is large; :func:`damped_pmf` therefore uses a
    sign-definite rearrangement instead.
    """
    n = int(n)
    if n < 0:
        raise ParameterError("n must be a nonnegative integer")
    if c <= 0 and float(c).is_integer() and -c < n:
        raise ParameterError(f"c = {c} is a pole of the terminating series with n = {n}")
    if n == 0:
        return 1.0
    k = np.arange(n, dtype=float)
    ratios = (p + k) * (k - n) / ((c + k) * (k + 1.0)) * x
    return float(1.0 + np.cumprod(ratios).sum())


def _log_damping_2f1(a: float, n: int, x: float) -> float:
    """``log 2F1(1 - a, -n; 1; x)`` for ``0 <= x <= 1``.

    Pfaff's transformation turns the series into the positive binomial sum
    ``sum_k C(n, k) x^k (1 - x)^(n - k) (a)_k / k!``.
    """
    if x == 0.0 or n == 0:
        return 0.0
    k = np.arange(n + 1, dtype=float)
    log_rise = gammaln(a + k) - gammaln(a) - gammaln(k + 1)
    if x >= 1.0:
        return float(log_rise[-1])
    log_binom = gammaln(n + 1.0) - gammaln(k + 1) - gammaln(n - k + 1)
    terms = log_binom + k * math.log(x) + (n - k) * math.log1p(-x) + log_rise
    return float(logsumexp(terms))


def damped_pmf(params: PndParams, channel: LossChannel, n):
    """Photon-number law after damping towards a thermal reservoir.

    The closed form carries a gamma scale ``theta = mu / a`` where printed
    versions of the formula write ``mu``; with that reading the vacuum
    reservoir case reduces to the family member ``(mu exp(-gamma_t), a)``.
    """
    n_arr = np.asarray(n)
    if np.any(n_arr < 0) or not np.all(np.equal(np.mod(n_arr, 1), 0)):
        raise ParameterError("photon numbers must be nonnegative integers")
    a = params.a
    s = params.theta * channel.transmission
    mu_t = channel.mu_t
    base = s + mu_t
    out = np.empty(n_arr.shape, dtype=float)
    flat = out.reshape(-1)
    for i, ni in enumerate(n_arr.reshape(-1).astype(int)):
        if base == 0.0:
            flat[i] = 1.0 if ni == 0 else 0.0
            continue
        x = s / ((mu_t + 1.0) * base)
        logp = (a - 1.0) * math.log1p(mu_t) + ni * math.log(base) - (a + ni) * math.log1p(base)
        flat[i] = math.exp(logp + _log_damping_2f1(a, ni, min(x, 1.0)))
    return float(out) if out.ndim == 0 else out


def apply_binomial_loss_oracle(dist: TruncatedPnd, transmission: float) -> TruncatedPnd:
    """Beam-splitter thinning: each photon survives independently with probability T."""
    t = float(transmission)
    if not (0.0 <= t <= 1.0):
        raise ParameterError(f"transmission must lie in [0, 1], got {transmission!r}")
    n = dist.n
    kernel = binom.pmf(n[:, None], n[None, :], t)
    out = kernel @ dist.probs
    return TruncatedPnd(None, dist.n_max, out, dist.tail_bound)
