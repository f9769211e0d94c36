import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import eval_hermite, gammaln

from mpsts.errors import InsufficientDataError, ParameterError, UnphysicalDataError
from mpsts.pnd import PndParams
from mpsts.quadrature import (
    DetectorModel,
    corrected_kurtosis,
    detector_smear_pdf,
    eigenfunctions_squared,
    ideal_moments,
    integrate,
    mixture_pdf,
    numeric_moments,
    oscillator_eigenfunction,
    quadrature_cdf,
    quadrature_pdf,
    sample_moments,
)
from mpsts.sampling import make_rng, sample_quadrature_dataset


def hermite_function(n, q):
    log_norm = -0.5 * (n * math.log(2.0) + gammaln(n + 1) + 0.5 * math.log(math.pi))
    return eval_hermite(n, q) * np.exp(-q * q / 2 + log_norm)


def test_detector_model():
    assert DetectorModel(1.0).sigma_c_sq == 0.0
    d = DetectorModel(0.78)
    assert d.sigma_c_sq == pytest.approx(0.22 / 1.56)
    assert d.eta * d.sigma_c_sq == pytest.approx(d.noise_variance)
    for eta in (0.0, -0.1, 1.01, math.nan):
        with pytest.raises(ParameterError):
            DetectorModel(eta)


def test_ground_state():
    assert oscillator_eigenfunction(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert oscillator_eigenfunction(0, 0.0) == pytest.approx(0.751126, abs=1e-6)


@pytest.mark.parametrize("n", [0, 1, 2, 7, 20, 40])
def test_eigenfunction_matches_hermite(n):
    q = np.linspace(-9, 9, 301)
    np.testing.assert_allclose(oscillator_eigenfunction(n, q), hermite_function(n, q), rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("n", [0, 5, 50])
def test_eigenfunction_normalized(n):
    w = math.sqrt(2 * n + 1) + 10
    assert integrate(lambda q: oscillator_eigenfunction(n, q) ** 2, -w, w) == pytest.approx(1.0, abs=1e-9)


def test_eigenfunction_orthogonal():
    val = integrate(lambda q: oscillator_eigenfunction(3, q) * oscillator_eigenfunction(5, q), -12, 12)
    assert abs(val) < 1e-9


def test_eigenfunction_high_order_stable():
    q = np.linspace(-80, 80, 64001)
    v = oscillator_eigenfunction(2000, q)
    assert (v ** 2).sum() * (q[1] - q[0]) == pytest.approx(1.0, abs=1e-9)
    far = oscillator_eigenfunction(10000, np.linspace(-150, 150, 301))
    assert np.all(np.isfinite(far)) and np.abs(far).max() < 1.0


def test_eigenfunction_bad_n():
    with pytest.raises(ParameterError):
        oscillator_eigenfunction(-1, 0.0)


def test_eigenfunctions_squared_rows():
    q = np.linspace(-5, 5, 11)
    table = eigenfunctions_squared(6, q)
    assert table.shape == (7, 11)
    for n in range(7):
        np.testing.assert_allclose(table[n], oscillator_eigenfunction(n, q) ** 2, rtol=1e-13, atol=1e-300)


def test_vacuum_pdf():
    assert quadrature_pdf(PndParams(1e-12, 1), 0.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-9)


def test_pdf_symmetric():
    q = np.linspace(-20, 20, 201)
    p = quadrature_pdf(PndParams(8.86, 1), q)
    assert np.abs(p - p[::-1]).max() < 1e-14


def test_pdf_thermal_is_gaussian():
    mu = 8.86
    q = np.linspace(-15, 15, 101)
    var = mu + 0.5
    np.testing.assert_allclose(quadrature_pdf(PndParams(mu, 1), q),
                               np.exp(-q * q / (2 * var)) / math.sqrt(2 * math.pi * var), rtol=1e-10, atol=1e-13)


def test_second_moment_example():
    m = numeric_moments(PndParams(2, 3))
    assert m.m2 == pytest.approx(2.5, abs=1e-6)


@pytest.mark.parametrize("mu, a", [(0.5, 1), (2, 3), (8.86, 2.42), (30, 0.5)])
def test_pdf_normalized(mu, a):
    w = 6 * math.sqrt(mu + 0.5) * (2 if a < 1 else 1)
    total = integrate(lambda q: quadrature_pdf(PndParams(mu, a), q), -w, w, rtol=1e-11)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_ideal_moments_examples():
    assert ideal_moments(PndParams(5, 1)).beta2 == 0.0
    assert ideal_moments(PndParams(2, 3)).beta2 == pytest.approx(-0.64, abs=1e-15)
    assert ideal_moments(PndParams(1e9, 1e9)).beta2 == pytest.approx(-1.5, abs=1e-6)
    m = ideal_moments(PndParams(2, 3))
    assert m.kurtosis == pytest.approx(m.m4 / m.m2 ** 2)


@pytest.mark.parametrize("mu", [0.5, 2, 8.86])
@pytest.mark.parametrize("a", [1, 2, 5])
def test_moment_closure(mu, a):
    num = numeric_moments(PndParams(mu, a))
    ana = ideal_moments(PndParams(mu, a))
    assert num.m2 == pytest.approx(ana.m2, rel=1e-6)
    if a == 1:
        assert abs(num.beta2) < 1e-6
    else:
        assert num.beta2 == pytest.approx(ana.beta2, rel=1e-6)


def test_kurtosis_sign_sub_unity_a():
    assert ideal_moments(PndParams(3, 0.5)).beta2 > 0
    assert numeric_moments(PndParams(3, 0.5)).beta2 == pytest.approx(ideal_moments(PndParams(3, 0.5)).beta2, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(0.0, 1e6), a=st.floats(1.0, 1e6))
def test_beta2_range_property(mu, a):
    b = ideal_moments(PndParams(mu, a)).beta2
    assert -1.5 <= b <= 0.0


def test_smear_identity_at_unit_efficiency():
    q = np.linspace(-6, 6, 31)
    np.testing.assert_array_equal(detector_smear_pdf(PndParams(4, 3), DetectorModel(1.0), q),
                                  quadrature_pdf(PndParams(4, 3), q))


@pytest.mark.parametrize("mu, a", [(4, 3), (8.86, 1)])
def test_smear_equals_loss(mu, a):
    det = DetectorModel(0.78)
    q = np.linspace(-6 * math.sqrt(mu + 0.5), 6 * math.sqrt(mu + 0.5), 201)
    smeared = detector_smear_pdf(PndParams(mu, a), det, q)
    lossy = quadrature_pdf(PndParams(0.78 * mu, a), q)
    assert np.abs(smeared - lossy).max() < 1e-8


def test_smear_variance_and_corrected_kurtosis():
    det = DetectorModel(0.78)
    params = PndParams(2, 3)
    w = 14.0

    def f(q):
        p = detector_smear_pdf(params, det, q)
        return np.stack([p, q * q * p, q ** 4 * p])

    norm, m2, m4 = integrate(f, -w, w, rtol=1e-12)
    m2, m4 = m2 / norm, m4 / norm
    assert m2 == pytest.approx(0.78 * 2 + 0.5, abs=1e-8)
    assert corrected_kurtosis(m2, m4, det) == pytest.approx(-0.64, abs=1e-6)


def test_corrected_kurtosis_unit_efficiency_and_errors():
    assert corrected_kurtosis(2.0, 10.0, DetectorModel(1.0)) == pytest.approx((10 - 12) / 4)
    with pytest.raises(UnphysicalDataError):
        corrected_kurtosis(0.1, 1.0, DetectorModel(0.78))


def test_sample_moments_errors():
    with pytest.raises(InsufficientDataError):
        sample_moments([1.0, 2.0, 3.0])
    with pytest.raises(InsufficientDataError):
        sample_moments(np.full(10, 2.5))


def test_sample_moments_normal():
    x = make_rng(11).standard_normal(1_000_000)
    assert abs(sample_moments(x).beta2) < 3 * math.sqrt(24 / 1e6)


def test_sample_moments_gaussian_raw_data_corrected():
    det = DetectorModel(0.78)
    ds = sample_quadrature_dataset(PndParams(3.0, 1.0), det, 400_000, seed=5)
    m = sample_moments(ds.samples)
    # standard error of a kurtosis estimate is about sqrt(24/N) relative to m2^2
    assert abs(corrected_kurtosis(m.m2, m.m4, det)) < 3 * math.sqrt(24 / 4e5) * 1.5


def test_sample_moments_mpsts():
    ds = sample_quadrature_dataset(PndParams(2, 3), DetectorModel(1.0), 1_000_000, seed=3)
    m = sample_moments(ds.samples)
    # kurtosis sampling error from the m8 moment of the model is below 0.01 here
    assert m.beta2 == pytest.approx(-0.64, abs=0.015)


def test_mixture_pdf_vectorized():
    q = np.linspace(-3, 3, 7)
    probs = np.array([[1.0, 0.0], [0.0, 1.0]])
    out = mixture_pdf(probs, q)
    np.testing.assert_allclose(out[0], oscillator_eigenfunction(0, q) ** 2)
    np.testing.assert_allclose(out[1], oscillator_eigenfunction(1, q) ** 2)


def test_cdf_monotone_and_symmetric():
    q = np.linspace(-10, 10, 401)
    c = quadrature_cdf(PndParams(4, 3), q)
    assert np.all(np.diff(c) >= 0)
    assert quadrature_cdf(PndParams(4, 3), 0.0) == pytest.approx(0.5, abs=1e-9)
    assert c[0] < 1e-8 and c[-1] > 1 - 1e-8


def test_integrate_basic():
    assert integrate(lambda x: np.exp(-x * x), -10.0, 10.0) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    both = integrate(lambda x: np.stack([np.exp(-x * x), x * x * np.exp(-x * x)]), -10.0, 10.0)
    np.testing.assert_allclose(both, [math.sqrt(math.pi), math.sqrt(math.pi) / 2], rtol=1e-12)
