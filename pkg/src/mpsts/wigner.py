"""
Wigner functions of Fock-diagonal states.

Same convention as the quadrature model (vacuum variance 1/2), so the
``p``-marginal of ``W(q, p)`` is the homodyne density of ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .pnd import DEFAULT_TAIL_EPS, PndParams, pnd_truncate

_RESCALE_AT = 1e150


@dataclass(frozen=True, eq=False)
class WignerGrid:
    q_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray  # values[i, j] = W(q_axis[i], p_axis[j])

    def total(self) -> float:
        dq = self.q_axis[1] - self.q_axis[0]
        dp = self.p_axis[1] - self.p_axis[0]
        return float(self.values.sum() * dq * dp)

    def marginal_q(self) -> np.ndarray:
        """``integral W dp`` by the trapezoid rule on the grid."""
        return np.trapezoid(self.values, self.p_axis, axis=1)


def _laguerre_mixture(weights, s) -> np.ndarray:
    """``sum_n weights[n] * exp(-s) * L_n(2 s)`` via the upward recurrence.

    The three-term recurrence runs on rescaled values with a per-point log
    scale, so ``exp(-s)`` never underflows before it is combined.
    """
    s = np.asarray(s, dtype=float)
    x = 2.0 * s
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    log_scale = -s.copy()
    acc = weights[0] * np.exp(log_scale)
    for k in range(len(weights) - 1):
        nxt = ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE_AT
        if np.any(big):
            sc = np.where(big, np.abs(cur), 1.0)
            cur = cur / sc
            prev = prev / sc
            log_scale = log_scale + np.log(sc)
        w = weights[k + 1]
        if w != 0.0:
            acc = acc + w * cur * np.exp(log_scale)
    return acc


def wigner_fock(n: int, s):
    """Wigner function of ``|n><n|`` at ``s = q**2 + p**2``."""
    n = int(n)
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if np.any(np.asarray(s) < 0):
        raise ParameterError("s = q^2 + p^2 must be nonnegative")
    weights = np.zeros(n + 1)
    weights[n] = (-1.0) ** n / math.pi
    out = _laguerre_mixture(weights, s)
    return float(out) if out.ndim == 0 else out


def wigner_radial(params: PndParams, s, tail_eps: float = DEFAULT_TAIL_EPS):
    """``W`` of the compound-Poisson state as a function of ``s = q**2 + p**2``."""
    dist = pnd_truncate(params, tail_eps)
    signs = np.where(dist.n % 2 == 0, 1.0, -1.0)
    return _laguerre_mixture(signs * dist.probs / math.pi, s)


def default_axis(params: PndParams, points: int = 201, n_sigma: float = 6.0) -> np.ndarray:
    half = n_sigma * math.sqrt(params.mu + 0.5)
    ax = np.linspace(-half, half, points)
    # exact mirror symmetry, which linspace alone does not guarantee
    return 0.5 * (ax - ax[::-1])


def wigner_mpsts(params: PndParams, q_axis=None, p_axis=None,
                 tail_eps: float = DEFAULT_TAIL_EPS) -> WignerGrid:
    """Wigner function on a rectangular grid (default 201 x 201 over +-6 sigma)."""
    q_axis = default_axis(params) if q_axis is None else np.asarray(q_axis, dtype=float)
    p_axis = q_axis if p_axis is None else np.asarray(p_axis, dtype=float)
    if q_axis.ndim != 1 or p_axis.ndim != 1 or q_axis.size < 2 or p_axis.size < 2:
        raise ParameterError("grid axes must be 1-D with at least two points")
    s = q_axis[:, None] ** 2 + p_axis[None, :] ** 2
    return WignerGrid(q_axis, p_axis, wigner_radial(params, s, tail_eps))


def radial_argmax(params: PndParams, tail_eps: float = DEFAULT_TAIL_EPS,
                  points: int = 2001) -> float:
    """Radius ``sqrt(q^2 + p^2)`` at which ``W`` peaks (0 for a central peak)."""
    r = np.linspace(0.0, 6.0 * math.sqrt(params.mu + 0.5), points)
    w = wigner_radial(params, r ** 2, tail_eps)
    return float(r[int(np.argmax(w))])
