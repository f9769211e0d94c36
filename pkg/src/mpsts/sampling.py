"""
Monte Carlo stand-ins for the homodyne experiment.

Photon numbers come from the gamma-Poisson hierarchy (exact for the
compound-Poisson law); a quadrature given ``n`` is drawn by inverse CDF of
``phi_n(q)**2`` tabulated on a grid.  Randomness always flows through a
``numpy.random.Generator`` built from an explicit seed, and the generator's
name is stored with every dataset.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import EstimationError, InsufficientDataError, ParameterError
from .pnd import LossChannel, PndParams, TruncatedPnd
from .quadrature import DetectorModel, _EigenRecurrence

RNG_NAME = "numpy.random.PCG64"
CDF_GRID_POINTS = 4096


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class DatasetMeta:
    true_params: PndParams
    eta: float
    gamma_t: float
    seed: int
    sample_count: int
    rng: str = RNG_NAME

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DatasetMeta":
        d = json.loads(text)
        d["true_params"] = PndParams(**d["true_params"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class HomodyneDataset:
    samples: np.ndarray = field(repr=False)
    meta: DatasetMeta

    def __post_init__(self):
        if len(self.samples) != self.meta.sample_count:
            raise ParameterError("sample_count does not match the number of samples")


@dataclass(frozen=True)
class SubtractionTap:
    """Weakly reflecting beam splitter followed by a click detector.

    ``clicks_required`` is the number of reflected photons that must be seen;
    ``0`` disables post-selection (the tap is then a plain loss).
    """

    reflectivity: float
    clicks_required: int = 1

    def __post_init__(self):
        if not (0.0 < self.reflectivity < 1.0):
            raise ParameterError("reflectivity must lie in (0, 1)")
        if self.clicks_required < 0:
            raise ParameterError("clicks_required must be nonnegative")


def sample_photon_numbers(params: PndParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw photon numbers: intensity ~ Gamma(a, mu/a), then Poisson."""
    if params.mu == 0.0:
        return np.zeros(size, dtype=np.int64)
    lam = rng.gamma(params.a, params.theta, size=size)
    return rng.poisson(lam)


def sample_photon_number(params: PndParams, rng: np.random.Generator) -> int:
    return int(sample_photon_numbers(params, 1, rng)[0])


@lru_cache(maxsize=4096)
def _fock_cdf_table(n: int):
    half = math.sqrt(2 * n + 1) + 6.0
    q = np.linspace(-half, half, CDF_GRID_POINTS)
    rec = _EigenRecurrence(q)
    for _ in range(n):
        rec.step()
    dens = rec.squared()
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(q))))
    cdf /= cdf[-1]
    cdf.setflags(write=False)
    return q, cdf


def sample_fock_quadratures(n: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Map uniforms ``u`` to quadratures of Fock states ``n`` (inverse CDF)."""
    out = np.empty(u.shape)
    order = np.argsort(n, kind="stable")
    n_sorted = n[order]
    bounds = np.flatnonzero(np.diff(n_sorted)) + 1
    for chunk in np.split(order, bounds):
        if chunk.size == 0:
            continue
        grid, cdf = _fock_cdf_table(int(n[chunk[0]]))
        out[chunk] = np.interp(u[chunk], cdf, grid)
    return out


def _draw_quadratures(params: PndParams, det: DetectorModel, count: int, rng) -> np.ndarray:
    n = sample_photon_numbers(params, count, rng)
    u = rng.random(count)
    q = sample_fock_quadratures(n, u)
    if det.eta < 1.0:
        q = math.sqrt(det.eta) * q + rng.normal(0.0, math.sqrt(det.noise_variance), count)
    return q


def sample_quadrature_dataset(params: PndParams, det: DetectorModel, count: int,
                              seed: int) -> HomodyneDataset:
    """Raw homodyne samples of ``(mu, a)`` seen through detector ``det``."""
    count = int(count)
    if count < 1:
        raise ParameterError("count must be >= 1")
    q = _draw_quadratures(params, det, count, make_rng(seed))
    return HomodyneDataset(q, DatasetMeta(params, det.eta, 0.0, int(seed), count))


def apply_loss_to_dataset(params: PndParams, channel: LossChannel, det: DetectorModel,
                          count: int, seed: int) -> HomodyneDataset:
    """Samples after a vacuum-reservoir loss channel, i.e. from ``(mu T, a)``."""
    if channel.mu_r != 0.0:
        raise ParameterError("sampling supports only a vacuum reservoir (mu_r = 0); "
                             "use damped_pmf for thermal reservoirs")
    lossy = PndParams(params.mu * channel.transmission, params.a)
    q = _draw_quadratures(lossy, det, int(count), make_rng(seed))
    return HomodyneDataset(q, DatasetMeta(params, det.eta, channel.gamma_t, int(seed), int(count)))


def simulate_conditional_subtraction(mu0: float, tap: SubtractionTap, accepted_events: int,
                                     seed: int, max_trials: int = 2_000_000_000,
                                     batch: int = 1 << 22) -> TruncatedPnd:
    """Heralded photon subtraction by a tap and a non-number-resolving detector.

    Thermal photon numbers are split binomially at the tap; an event is kept
    when at least ``clicks_required`` photons are reflected.  Returns the
    empirical distribution of the transmitted photon number over the first
    ``accepted_events`` accepted events.
    """
    if mu0 < 0 or not math.isfinite(mu0):
        raise ParameterError("mu0 must be finite and >= 0")
    if accepted_events < 1:
        raise ParameterError("accepted_events must be >= 1")
    rng = make_rng(seed)
    kept = []
    n_kept = 0
    trials = 0
    p_geom = 1.0 / (1.0 + mu0)
    while n_kept < accepted_events and trials < max_trials:
        size = min(batch, max_trials - trials)
        n = rng.geometric(p_geom, size) - 1
        reflected = rng.binomial(n, tap.reflectivity)
        mask = reflected >= tap.clicks_required
        kept.append(n[mask] - reflected[mask])
        n_kept += int(mask.sum())
        trials += size
    if n_kept == 0:
        raise EstimationError(f"no event accepted in {trials} trials")
    if n_kept < accepted_events:
        raise InsufficientDataError(
            f"only {n_kept} of {accepted_events} events accepted within {max_trials} trials")
    counts = np.bincount(np.concatenate(kept)[:accepted_events])
    return TruncatedPnd(None, counts.size - 1, counts / accepted_events, 0.0)


def total_variation(p1: TruncatedPnd, p2: TruncatedPnd) -> float:
    n_max = max(p1.n_max, p2.n_max)
    return 0.5 * float(np.abs(p1.padded(n_max) - p2.padded(n_max)).sum())


def write_dataset(path, dataset: HomodyneDataset):
    """CSV: one ``# {json}`` metadata line, a ``q`` header, one value per row."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write("# " + dataset.meta.to_json() + "\n")
        fh.write("q\n")
        np.savetxt(fh, dataset.samples, fmt="%.17g")


def read_dataset(path) -> HomodyneDataset:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ParameterError(f"{path}: missing metadata header line")
        meta = DatasetMeta.from_json(first[1:].strip())
        samples = np.loadtxt(fh, skiprows=1, ndmin=1)
    return HomodyneDataset(samples, meta)
