import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.stats import poisson

from mpsts.errors import ParameterError
from mpsts.pnd import (
    LossChannel,
    PndParams,
    apply_binomial_loss_oracle,
    bose_einstein,
    damped_pmf,
    gauss_2f1_terminating,
    pnd_moments,
    pnd_pmf,
    pnd_truncate,
    subtract_photons_oracle,
)

# 50-digit mpmath evaluations of the closed-form pmf
FROZEN_PMF = [
    (8.86, 1.0, 3, 0.073585713613045446168822831914802307751238312250993),
    (4.0, 3.0, 5, 0.10071605247084851671375993724674971434399903830158),
    (17.72, 2.42, 20, 0.027850152048824122092199752031835149986059427651624),
]


def mp_pmf(mu, a, n):
    with mpmath.workdps(40):
        mu, a = mpmath.mpf(mu), mpmath.mpf(a)
        return float(mpmath.gamma(a + n) / (mpmath.gamma(a) * mpmath.factorial(n))
                     * (mu / a) ** n / (1 + mu / a) ** (n + a))


def test_params_validation():
    for mu, a in [(-1, 1), (1, 0), (1, -2), (math.inf, 1), (1, math.nan)]:
        with pytest.raises(ParameterError):
            PndParams(mu, a)
    with pytest.raises(ParameterError):
        LossChannel(-0.1, 0)
    with pytest.raises(ParameterError):
        LossChannel(0.1, -1)


def test_pmf_trivial():
    assert pnd_pmf(PndParams(1, 1), 0) == pytest.approx(0.5, abs=1e-15)
    assert pnd_pmf(PndParams(0, 2), 0) == 1.0
    assert pnd_pmf(PndParams(0, 2), 3) == 0.0
    with pytest.raises(ParameterError):
        pnd_pmf(PndParams(1, 1), -1)


@pytest.mark.parametrize("mu, a, n, expected", FROZEN_PMF)
def test_pmf_frozen_high_precision(mu, a, n, expected):
    assert pnd_pmf(PndParams(mu, a), n) == pytest.approx(expected, rel=1e-12)
    assert mp_pmf(mu, a, n) == pytest.approx(expected, rel=1e-14)


def test_pmf_thermal_direct():
    assert pnd_pmf(PndParams(8.86, 1), 3) == pytest.approx(8.86 ** 3 / 9.86 ** 4, rel=1e-13)


@pytest.mark.parametrize("mu", [0.3, 4.0, 35.0])
def test_a1_is_bose_einstein(mu):
    n = np.arange(200)
    expected = np.exp(n * math.log(mu) - (n + 1) * math.log1p(mu))
    np.testing.assert_allclose(pnd_pmf(PndParams(mu, 1), n), expected, rtol=1e-12)


@pytest.mark.parametrize("mu", [0.5, 4.0, 30.0])
def test_large_a_is_poisson(mu):
    n = np.arange(int(mu + 20 * math.sqrt(mu) + 20))
    tv = 0.5 * np.abs(pnd_pmf(PndParams(mu, 1e9), n) - poisson.pmf(n, mu)).sum()
    assert tv < 1e-6


def test_large_arguments_no_overflow():
    p = pnd_pmf(PndParams(300.0, 250.0), np.arange(2000))
    assert np.all(np.isfinite(p))
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("mu, a, n", [(35.44, 4, 100), (8.86, 0.94, 40), (100, 1e5, 120)])
def test_pmf_high_precision_spot(mu, a, n):
    assert pnd_pmf(PndParams(mu, a), n) == pytest.approx(mp_pmf(mu, a, n), rel=1e-10)


def test_truncate_vacuum():
    t = pnd_truncate(PndParams(0, 1), 1e-12)
    assert t.n_max == 0
    np.testing.assert_array_equal(t.probs, [1.0])


def test_truncate_sum():
    t = pnd_truncate(PndParams(1, 1), 1e-12)
    assert t.total >= 1 - 1e-12


def test_truncate_bad_eps():
    for eps in (0, 1, -1e-3, 2):
        with pytest.raises(ParameterError):
            pnd_truncate(PndParams(1, 1), eps)


@pytest.mark.parametrize("mu, a", [(17.72, 3), (4, 0.5), (0.01, 1), (50, 20)])
def test_truncate_tail_certified_by_extended_sum(mu, a):
    eps = 1e-12
    t = pnd_truncate(PndParams(mu, a), eps)
    n = np.arange(t.n_max + 1, 4 * t.n_max + 50)
    true_tail = pnd_pmf(PndParams(mu, a), n).sum()
    assert true_tail <= t.tail_bound * (1 + 1e-12)
    assert t.tail_bound <= eps
    assert pnd_pmf(PndParams(mu, a), t.n_max + 1) <= true_tail
    # one step shorter would not be certified
    if t.n_max > 0:
        shorter = pnd_pmf(PndParams(mu, a), np.arange(t.n_max, 4 * t.n_max + 50)).sum()
        assert shorter > 0
    np.testing.assert_allclose(t.probs, pnd_pmf(PndParams(mu, a), t.n), rtol=1e-14)


def test_moments_examples():
    assert pnd_moments(PndParams(3, 1)).g2 == 2.0
    assert abs(pnd_moments(PndParams(3, 1e9)).g2 - 1) < 1e-8
    assert pnd_moments(PndParams(2, 3)).g2 == pytest.approx(4 / 3, abs=1e-15)
    assert pnd_moments(PndParams(0, 3)).g2 is None


@pytest.mark.parametrize("mu, a", [(2, 3), (8.86, 1), (17.72, 2.42), (1, 0.5)])
def test_moments_against_sums(mu, a):
    t = pnd_truncate(PndParams(mu, a), 1e-14)
    m = pnd_moments(PndParams(mu, a))
    assert t.mean() == pytest.approx(m.mean, rel=1e-10)
    f2 = t.factorial_moment(2)
    assert f2 + t.mean() - t.mean() ** 2 == pytest.approx(m.variance, rel=1e-9)
    assert f2 / mu ** 2 == pytest.approx(m.g2, rel=1e-9)


def test_subtraction_oracle_trivial_and_errors():
    be = subtract_photons_oracle(2.0, 0)
    np.testing.assert_allclose(be.probs, 2.0 ** be.n / 3.0 ** (be.n + 1), rtol=1e-12)
    with pytest.raises(ParameterError):
        subtract_photons_oracle(0.0, 1)
    with pytest.raises(ParameterError):
        subtract_photons_oracle(-1.0, 1)


def test_subtraction_doubles_mean():
    out = subtract_photons_oracle(0.5, 1)
    assert out.mean() == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("mu0", [0.5, 1.0, 8.86])
def test_subtraction_matches_family(mu0, m):
    out = subtract_photons_oracle(mu0, m)
    target = pnd_pmf(PndParams(mu0 * (m + 1), m + 1), out.n)
    assert np.abs(out.probs - target).max() < 1e-10
    assert out.total >= 1 - 1e-10


def test_2f1_examples():
    assert gauss_2f1_terminating(0.3, 0, 2.5, 0.7) == 1.0
    assert gauss_2f1_terminating(-2, 4, 1, 1) == pytest.approx(15.0, abs=1e-12)
    # Gauss summation for 2F1(1-a, -n; 1; 1) = Gamma(a+n) / (Gamma(a) n!)
    assert math.gamma(3 + 4) / (math.gamma(3) * math.gamma(5)) == 15.0
    for x in (0.1, 0.9, -2.0):
        assert gauss_2f1_terminating(0.0, 7, 1, x) == 1.0


def test_2f1_against_mpmath():
    for p, n, c, x in [(-1.42, 6, 1, 0.3), (2.5, 10, 3.5, -0.4), (-3, 5, 0.5, 0.8)]:
        assert gauss_2f1_terminating(p, n, c, x) == pytest.approx(float(mpmath.hyp2f1(p, -n, c, x)), rel=1e-12)


def test_2f1_pole():
    with pytest.raises(ParameterError):
        gauss_2f1_terminating(1.0, 5, -2, 0.5)
    # the series stops before the pole
    assert gauss_2f1_terminating(1.0, 2, -3, 0.5) == pytest.approx(float(mpmath.hyp2f1(1, -2, -3, 0.5)))


def test_damped_no_evolution():
    p = PndParams(4, 3)
    n = np.arange(60)
    for mu_r in (0.0, 0.7):
        np.testing.assert_allclose(damped_pmf(p, LossChannel(0.0, mu_r), n), pnd_pmf(p, n), rtol=1e-12, atol=1e-16)


def test_damped_vacuum_reservoir_halving():
    n = np.arange(80)
    got = damped_pmf(PndParams(4, 3), LossChannel(math.log(2), 0.0), n)
    assert np.abs(got - pnd_pmf(PndParams(2, 3), n)).max() < 1e-12


def test_damped_long_time_thermalizes():
    n = np.arange(80)
    got = damped_pmf(PndParams(4, 3), LossChannel(20.0, 0.5), n)
    assert np.abs(got - 0.5 ** n / 1.5 ** (n + 1)).max() < 1e-8


@pytest.mark.parametrize("mu_r", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("gamma_t", [0.0, 0.5, 2.35])
def test_damped_normalized(mu_r, gamma_t):
    total = damped_pmf(PndParams(4, 3), LossChannel(gamma_t, mu_r), np.arange(400)).sum()
    assert abs(total - 1) < 1e-10


def _master_equation(p0, gamma_t, mu_r):
    """Diagonal Lindblad evolution towards a thermal reservoir, by matrix exponential."""
    size = p0.size
    n = np.arange(size)
    gen = np.zeros((size, size))
    gen[n, n] = -(mu_r + 1) * n - mu_r * (n + 1)
    gen[n[:-1], n[1:]] = (mu_r + 1) * n[1:]
    gen[n[1:], n[:-1]] = mu_r * n[1:]
    gen[-1, -1] += mu_r * size  # reflecting edge keeps the truncated trace
    return expm(gen * gamma_t) @ p0


@pytest.mark.parametrize("a", [1.0, 2.42, 3.0])
@pytest.mark.parametrize("mu_r", [0.3, 1.0])
def test_damped_matches_master_equation(a, mu_r):
    params = PndParams(4.0, a)
    size = 260
    p0 = pnd_pmf(params, np.arange(size))
    evolved = _master_equation(p0, 0.8, mu_r)
    got = damped_pmf(params, LossChannel(0.8, mu_r), np.arange(80))
    assert np.abs(got - evolved[:80]).max() < 1e-9


def test_damped_fractional_a_large_n_stable():
    n = np.arange(500)
    got = damped_pmf(PndParams(35.0, 2.42), LossChannel(0.3, 0.0), n)
    np.testing.assert_allclose(got, pnd_pmf(PndParams(35.0 * math.exp(-0.3), 2.42), n), rtol=1e-9, atol=1e-300)


def test_thinning_edges():
    t = pnd_truncate(PndParams(4, 3))
    np.testing.assert_allclose(apply_binomial_loss_oracle(t, 1.0).probs, t.probs, atol=1e-16)
    zero = apply_binomial_loss_oracle(t, 0.0).probs
    assert zero[0] == pytest.approx(t.total, abs=1e-15)
    assert np.all(zero[1:] == 0)
    with pytest.raises(ParameterError):
        apply_binomial_loss_oracle(t, 1.2)


@pytest.mark.parametrize("transmission", [0.1, 0.5, 0.9])
def test_thinning_preserves_a(transmission):
    t = pnd_truncate(PndParams(4, 3))
    thinned = apply_binomial_loss_oracle(t, transmission)
    target = pnd_pmf(PndParams(4 * transmission, 3), thinned.n)
    assert np.abs(thinned.probs - target).max() < 1e-10
    g2 = thinned.factorial_moment(2) / thinned.mean() ** 2
    assert abs(g2 - 4 / 3) < 1e-9


@settings(max_examples=40, deadline=None)
@given(mu=st.floats(0.0, 60.0), a=st.floats(0.2, 50.0))
def test_normalization_property(mu, a):
    t = pnd_truncate(PndParams(mu, a), 1e-12)
    assert 1 - 1e-12 <= t.total + 0.0 <= 1 + 1e-12
    assert t.total + t.tail_bound <= 1 + 1e-12


@settings(max_examples=25, deadline=None)
@given(mu=st.floats(0.05, 30.0), a=st.floats(0.3, 12.0), transmission=st.floats(0.05, 1.0))
def test_loss_invariance_property(mu, a, transmission):
    t = pnd_truncate(PndParams(mu, a), 1e-13)
    thinned = apply_binomial_loss_oracle(t, transmission)
    target = pnd_pmf(PndParams(mu * transmission, a), thinned.n)
    assert np.abs(thinned.probs - target).max() < 1e-10


def test_bose_einstein_helper():
    be = bose_einstein(2.0)
    assert be.params == PndParams(2.0, 1.0)


def test_subnormal_mu_does_not_underflow_log():
    p = pnd_pmf(PndParams(5e-324, 2.0), np.arange(3))
    assert p[0] == 1.0 and np.all(np.isfinite(p))
