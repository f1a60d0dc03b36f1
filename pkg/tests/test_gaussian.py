"""Unit tests for gaussian module"""

import math

import numpy as np
import pytest

from eznet.core.errors import DomainError
from eznet.core.gaussian import (
    GaussianMoments,
    ez_test_gaussian,
    gaussian_moments,
    gaussian_moments_oracle,
    gaussian_variance,
    standardize_columns,
    theoretical_delta_gaussian,
)
from eznet.core.generators import dcbm_correlation, sample_gaussian_dcbm
from eznet.core.graph_io import DataMatrix
from eznet.core.models import DcbmParams, WeightDistribution, block_moments


def _weighted_densities(sigma):
    """Edge, vee and triangle averages of the off-diagonal correlations."""
    p = sigma.shape[0]
    off = sigma - np.diag(np.diag(sigma))
    triples = math.comb(p, 3)
    e = off[np.triu_indices(p, k=1)].sum() / math.comb(p, 2)
    v = ((off.sum(axis=1) ** 2 - (off**2).sum(axis=1)) / 2).sum() / (3 * triples)
    t = np.trace(off @ off @ off) / 6 / triples
    return np.array([e, v, t])


def test_zero_rows():
    """Test that all-zero observations give E = V = 0 and T = 1/4"""
    m = gaussian_moments(DataMatrix(np.zeros((2, 4))))
    assert (m.e_hat, m.v_hat, m.t_hat) == pytest.approx((0.0, 0.0, 0.25))
    assert m.per_sample.shape == (2, 3)
    assert (m.n, m.p) == (2, 4)


def test_power_sums_match_oracle():
    """Test the power-sum reductions against literal pair and triple sums"""
    rng = np.random.default_rng(2)
    for p in (3, 4, 7):
        data = DataMatrix(rng.standard_normal((6, p)))
        fast = gaussian_moments(data)
        slow = gaussian_moments_oracle(data)
        np.testing.assert_allclose(fast.per_sample, slow.per_sample, rtol=1e-10, atol=1e-10)


def test_moments_unbiased_under_identity():
    """Test that independent standard normal columns give E = V = T = 0 on average"""
    rng = np.random.default_rng(8)
    m = gaussian_moments(DataMatrix(rng.standard_normal((50000, 20))))
    errors = m.per_sample.std(axis=0, ddof=1) / math.sqrt(m.n)
    assert np.all(np.abs([m.e_hat, m.v_hat, m.t_hat]) < 4 * errors)


def test_moment_shape_errors():
    """Test the row and column preconditions"""
    with pytest.raises(DomainError):
        gaussian_moments(DataMatrix(np.ones((5, 2))))
    with pytest.raises(DomainError):
        gaussian_moments(DataMatrix(np.ones((1, 5))))


def test_gaussian_variance():
    """Test the delta-method variance on hand-built per-sample estimates"""
    per_sample = np.array([[1.0, 0.5, 0.2], [1.0, 0.5, 0.4], [1.0, 0.5, 0.6]])
    moments = GaussianMoments.from_per_sample(per_sample, p=4)
    # With E = 1 and V = 1/2 the E and V terms of Q cancel, leaving Q_i = T_i
    variance = gaussian_variance(moments)
    np.testing.assert_allclose(variance.q_values, [0.2, 0.4, 0.6])
    assert variance.sigma2_hat == pytest.approx(0.04)


def test_gaussian_variance_errors():
    """Test that zero edge density and a single sample are rejected"""
    with pytest.raises(DomainError):
        gaussian_variance(GaussianMoments.from_per_sample(np.array([[0.0, 0.1, 0.2], [0.0, 0.3, 0.1]]), p=3))
    with pytest.raises(DomainError):
        gaussian_variance(GaussianMoments.from_per_sample(np.array([[0.5, 0.1, 0.2]]), p=3))


def test_standardize_columns():
    """Test centring and scaling"""
    d = standardize_columns(DataMatrix(np.array([[1.0, 10.0], [2.0, 30.0], [3.0, 20.0]]), ("a", "b")))
    np.testing.assert_allclose(d.values.mean(axis=0), 0.0, atol=1e-15)
    np.testing.assert_allclose(d.values.std(axis=0, ddof=1), 1.0)
    assert d.columns == ("a", "b")
    with pytest.raises(DomainError, match="'c'"):
        standardize_columns(DataMatrix(np.array([[1.0, 2.0], [2.0, 2.0]]), ("a", "c")))


def test_ez_test_gaussian_scale_invariance():
    """Test that standardization removes column scales"""
    params = DcbmParams(12, 2, 0.4, 0.05)
    data = sample_gaussian_dcbm(400, params, seed=1).data
    scaled = DataMatrix(data.values * np.arange(1, 13) + 5.0, data.columns)
    result = ez_test_gaussian(data)
    assert ez_test_gaussian(scaled).statistic == pytest.approx(result.statistic, rel=1e-9, abs=1e-9)
    assert result.test_id == "ez_gaussian"
    assert result.notes == ("standardized columns",)
    assert 0 <= result.p_value <= 1


def test_ez_test_gaussian_raw():
    """Test the raw-column path"""
    data = sample_gaussian_dcbm(300, DcbmParams(8, 1, 0.3, 0.3), seed=4).data
    result = ez_test_gaussian(data, standardize=False)
    assert result.notes == ("raw columns",)
    assert isinstance(result.densities, GaussianMoments)
    assert math.isfinite(result.statistic)


def test_ez_test_gaussian_errors():
    """Test preconditions of the Gaussian test"""
    with pytest.raises(DomainError):
        ez_test_gaussian(DataMatrix(np.ones((10, 2))))
    with pytest.raises(DomainError):
        ez_test_gaussian(DataMatrix(np.zeros((4, 3))), standardize=False)


def test_theoretical_delta_gaussian():
    """Test the Gaussian non-centrality"""
    assert theoretical_delta_gaussian(2, 0.35, 0.05, 2000) == pytest.approx(1.1384, abs=1e-4)
    assert theoretical_delta_gaussian(1, 0.2, 0.2, 2000) == 0.0
    with pytest.raises(DomainError):
        theoretical_delta_gaussian(2, 0.0, 0.0, 100)


def test_population_moments_of_correlation_model():
    """Test that averaged correlation densities match the block-model closed forms"""
    rng = np.random.default_rng(21)
    for w_dist in (WeightDistribution.constant_one(), WeightDistribution.two_point(0.8, 0.2)):
        params = DcbmParams(30, 3, 0.3, 0.1, w_dist)
        draws = []
        for _ in range(400):
            labels = rng.integers(params.k, size=params.n)
            weights = w_dist.sample(rng, params.n)
            draws.append(_weighted_densities(dcbm_correlation(params, labels, weights)))
        draws = np.array(draws)
        expected = block_moments(params.k, params.a, params.b, w_dist.mean)
        errors = draws.std(axis=0, ddof=1) / math.sqrt(len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - [expected.e, expected.v, expected.t]) < 4 * errors + 1e-12)


@pytest.mark.slow
def test_wick_identities():
    """Test the fourth- and sixth-order Wick identities on Gaussian block-model draws"""
    params = DcbmParams(3, 2, 0.5, 0.2, WeightDistribution.two_point(0.9, 0.5))
    for seed in range(3):
        sample = sample_gaussian_dcbm(200000, params, seed=seed)
        s = sample.sigma
        x1, x2, x3 = sample.data.values.T

        vee_term = x1 * x2**2 * x3
        expected = 2 * s[0, 1] * s[1, 2] + s[0, 2]
        assert abs(vee_term.mean() - expected) < 4 * vee_term.std(ddof=1) / math.sqrt(len(vee_term))

        sq1, sq2, sq3 = x1**2, x2**2, x3**2
        d_term = sq1 * sq2 * sq3 - sq1 * sq2 - sq1 * sq3 - sq2 * sq3
        expected = 8 * s[0, 1] * s[1, 2] * s[0, 2] - 2
        assert abs(d_term.mean() - expected) < 4 * d_term.std(ddof=1) / math.sqrt(len(d_term))


@pytest.mark.slow
def test_moment_estimators_unbiased():
    """Test that per-sample estimates average to the correlation densities of the realized matrix"""
    params = DcbmParams(10, 2, 0.4, 0.1)
    for seed in range(3):
        sample = sample_gaussian_dcbm(100000, params, seed=seed)
        m = gaussian_moments(sample.data)
        errors = m.per_sample.std(axis=0, ddof=1) / math.sqrt(m.n)
        expected = _weighted_densities(sample.sigma)
        assert np.all(np.abs([m.e_hat, m.v_hat, m.t_hat] - expected) < 4 * errors)


def test_weighted_densities_helper():
    """Test the reference densities on a correlation matrix with equal off-diagonal entries"""
    p, rho = 5, 0.3
    sigma = np.full((p, p), rho)
    np.fill_diagonal(sigma, 1.0)
    np.testing.assert_allclose(_weighted_densities(sigma), [rho, rho**2, rho**3])
