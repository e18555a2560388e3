import math

import numpy as np
import pytest
from scipy import stats

from enstails.errors import DataError, FitError
from enstails.gev import (
    GevParams,
    gev_cdf,
    gev_log_likelihood,
    gev_max_params,
    gev_mean,
    gev_quantile,
    lmoments_estimate,
    mle_fit,
    sample_lmoments,
)
from enstails.synthetic import SyntheticSpec, synth_member_maxima
from enstails.grid import Grid

P_GRID = (0.001, 0.01, 0.1, 0.5, 0.9, 0.99, 0.999, 0.9999)
XI_LATTICE = (-0.4, -0.1, -1e-12, 0.0, 1e-12, 0.1, 0.4)


def _draws(params: GevParams, n: int, seed: int) -> np.ndarray:
    spec = SyntheticSpec(
        grid=Grid(np.array([0.0]), np.array([0.0])),
        location=params.mu, scale=params.sigma, shape=params.xi,
        n_members=n, seed=seed,
    )
    return synth_member_maxima(spec).values[:, 0, 0]


# ---------------------------------------------------------------------------
# distribution functions
# ---------------------------------------------------------------------------

def test_quantile_known_values():
    # Gumbel at p = exp(-1) sits exactly at the location.
    assert gev_quantile(math.exp(-1.0), GevParams(5.0, 2.0, 0.0)) == pytest.approx(5.0, abs=1e-12)
    # ((-ln 0.999)^-0.2 - 1) / 0.2 evaluated by hand: 14.90337 (14.904 when
    # carrying rounded intermediates).
    by_hand = (math.pow(-math.log(0.999), -0.2) - 1.0) / 0.2
    assert by_hand == pytest.approx(14.9034, abs=1e-4)
    assert by_hand == pytest.approx(14.904, abs=1e-3)
    assert gev_quantile(0.999, GevParams(0.0, 1.0, 0.2)) == pytest.approx(by_hand, rel=1e-12)
    assert gev_quantile(0.999, GevParams(0.0, 1.0, 0.0)) == pytest.approx(
        -math.log(-math.log(0.999)), rel=1e-12
    )
    assert -math.log(-math.log(0.999)) == pytest.approx(6.9073, abs=5e-5)


def test_cdf_known_values():
    assert gev_cdf(0.0, GevParams(0.0, 1.0, 0.0)) == pytest.approx(math.exp(-1.0), rel=1e-14)
    # Inverse of the quantile example above.
    assert gev_cdf(14.9035, GevParams(0.0, 1.0, 0.2)) == pytest.approx(0.999, abs=1e-5)


def test_cdf_outside_bounded_support_is_exact():
    upper = GevParams(0.0, 1.0, -0.5)  # upper endpoint mu + sigma/|xi| = 2
    assert gev_cdf(2.0, upper) == 1.0
    assert gev_cdf(3.0, upper) == 1.0
    lower = GevParams(0.0, 1.0, 0.5)  # lower endpoint mu - sigma/xi = -2
    assert gev_cdf(-2.0, lower) == 0.0
    assert gev_cdf(-5.0, lower) == 0.0


@pytest.mark.parametrize("xi", XI_LATTICE)
@pytest.mark.parametrize("mu,sigma", [(0.0, 1.0), (30.0, 2.5)])
def test_quantile_cdf_round_trip(mu, sigma, xi):
    params = GevParams(mu, sigma, xi)
    for p in P_GRID:
        assert abs(gev_cdf(gev_quantile(p, params), params) - p) < 1e-10


def test_gumbel_limit_continuity():
    params0 = GevParams(10.0, 3.0, 0.0)
    for xi in (1e-9, -1e-9):
        params = GevParams(10.0, 3.0, xi)
        for p in P_GRID:
            assert abs(gev_quantile(p, params) - gev_quantile(p, params0)) < 1e-6 * 3.0


@pytest.mark.parametrize("xi", (-0.3, 0.0, 0.25))
def test_matches_scipy_genextreme(xi):
    # scipy parameterizes the shape as c = -xi.
    params = GevParams(12.0, 2.0, xi)
    dist = stats.genextreme(c=-xi, loc=12.0, scale=2.0)
    x = np.linspace(5.0, 30.0, 41)
    np.testing.assert_allclose(gev_cdf(x, params), dist.cdf(x), rtol=1e-10, atol=1e-12)
    p = np.array(P_GRID)
    np.testing.assert_allclose(gev_quantile(p, params), dist.ppf(p), rtol=1e-9)
    inside = x[(dist.cdf(x) > 0) & (dist.cdf(x) < 1)]
    want = dist.logpdf(inside).sum()
    assert gev_log_likelihood(inside, params) == pytest.approx(want, rel=1e-10)


def test_quantile_rejects_bad_probability():
    params = GevParams(0.0, 1.0, 0.1)
    for p in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            gev_quantile(p, params)


def test_params_validation():
    with pytest.raises(ValueError):
        GevParams(0.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        GevParams(math.nan, 1.0, 0.1)


# ---------------------------------------------------------------------------
# log likelihood
# ---------------------------------------------------------------------------

def test_log_likelihood_single_point_at_location():
    # Gumbel log density at the location: -ln(sigma) - 0 - exp(0) = -1.
    assert gev_log_likelihood([0.0], GevParams(0.0, 1.0, 0.0)) == -1.0


def test_log_likelihood_outside_support():
    params = GevParams(0.0, 1.0, 0.5)  # support bounded below at -2
    assert gev_log_likelihood([-3.0], params) == -math.inf
    assert gev_log_likelihood([0.0, -3.0], params) == -math.inf


def test_log_likelihood_translation_invariance():
    data = _draws(GevParams(30.0, 2.0, 0.1), 200, seed=11)
    base = gev_log_likelihood(data, GevParams(30.0, 2.0, 0.1))
    shifted = gev_log_likelihood(data + 7.5, GevParams(37.5, 2.0, 0.1))
    assert shifted == pytest.approx(base, rel=1e-9)


def test_log_likelihood_argument_errors():
    with pytest.raises(ValueError):
        gev_log_likelihood([], GevParams(0.0, 1.0, 0.0))
    with pytest.raises(DataError):
        gev_log_likelihood([1.0, math.nan], GevParams(0.0, 1.0, 0.0))


def _loglik_gradient(data, params):
    """Analytic gradient of the GEV log likelihood wrt (mu, sigma, xi).

    Testing aid only; valid at interior points with xi != 0.
    """
    x = np.asarray(data, dtype=float)
    mu, sigma, xi = params.mu, params.sigma, params.xi
    s = (x - mu) / sigma
    t = 1.0 + xi * s
    tp = t ** (-1.0 / xi)
    d_mu = (1.0 + xi) / (sigma * t) - tp / (t * sigma)
    d_sigma = -1.0 / sigma + (1.0 + xi) * s / (sigma * t) - (s / sigma) * tp / t
    d_xi = (
        np.log(t) / xi**2
        - (1.0 + 1.0 / xi) * s / t
        - tp * (np.log(t) / xi**2 - s / (xi * t))
    )
    return np.array([d_mu.sum(), d_sigma.sum(), d_xi.sum()])


@pytest.mark.parametrize("xi", (-0.2, 0.2))
def test_log_likelihood_gradient_matches_finite_differences(xi):
    params = GevParams(30.0, 2.0, xi)
    data = _draws(params, 100, seed=3)
    analytic = _loglik_gradient(data, params)
    h = 1e-6
    fd = []
    for k, (dm, ds, dx) in enumerate([(h, 0, 0), (0, h, 0), (0, 0, h)]):
        hi = gev_log_likelihood(data, GevParams(params.mu + dm, params.sigma + ds, params.xi + dx))
        lo = gev_log_likelihood(data, GevParams(params.mu - dm, params.sigma - ds, params.xi - dx))
        fd.append((hi - lo) / (2 * h))
    np.testing.assert_allclose(np.array(fd), analytic, rtol=1e-6)


# ---------------------------------------------------------------------------
# closed-form facts used as oracles elsewhere
# ---------------------------------------------------------------------------

def test_gev_mean_against_quadrature():
    params = GevParams(30.0, 2.0, 0.1)
    dist = stats.genextreme(c=-0.1, loc=30.0, scale=2.0)
    assert gev_mean(params) == pytest.approx(dist.mean(), rel=1e-12)
    gumbel = GevParams(5.0, 2.0, 0.0)
    assert gev_mean(gumbel) == pytest.approx(stats.gumbel_r(loc=5, scale=2).mean(), rel=1e-12)


@pytest.mark.parametrize("xi", (-0.2, 0.0, 0.15))
def test_max_stability_identity(xi):
    params = GevParams(25.0, 3.0, xi)
    k = 12
    folded = gev_max_params(params, k)
    x = np.linspace(20.0, 70.0, 25)
    np.testing.assert_allclose(
        gev_cdf(x, folded), gev_cdf(x, params) ** k, rtol=1e-12, atol=1e-15
    )


# ---------------------------------------------------------------------------
# L-moments
# ---------------------------------------------------------------------------

def test_sample_lmoments_small_case():
    # For {1,2,3,4}: b0=2.5, b1=(0+2+6+12)/12=5/3, b2=(0+0+6+24)/24=5/4.
    l1, l2, t3 = sample_lmoments([4.0, 1.0, 3.0, 2.0])
    assert l1 == pytest.approx(2.5, abs=1e-14)
    assert l2 == pytest.approx(2 * 5 / 3 - 2.5, abs=1e-14)
    assert t3 == pytest.approx((6 * 5 / 4 - 6 * 5 / 3 + 2.5) / (2 * 5 / 3 - 2.5), abs=1e-14)


def test_lmoments_gumbel_shape_goes_to_zero():
    data = _draws(GevParams(30.0, 2.0, 0.0), 10_000, seed=21)
    fit = lmoments_estimate(data)
    assert abs(fit.xi) < 0.05


def test_lmoments_recovery():
    data = _draws(GevParams(30.0, 2.0, 0.1), 10_000, seed=22)
    fit = lmoments_estimate(data)
    assert abs(fit.mu - 30.0) < 0.1
    assert abs(fit.sigma - 2.0) < 0.1
    assert abs(fit.xi - 0.1) < 0.05


def test_lmoments_affine_equivariance():
    data = _draws(GevParams(30.0, 2.0, 0.1), 500, seed=23)
    base = lmoments_estimate(data)
    scaled = lmoments_estimate(3.0 * data + 10.0)
    assert scaled.mu == pytest.approx(3.0 * base.mu + 10.0, rel=1e-9)
    assert scaled.sigma == pytest.approx(3.0 * base.sigma, rel=1e-9)
    assert scaled.xi == pytest.approx(base.xi, abs=1e-9)


def test_lmoments_degenerate_data():
    with pytest.raises(FitError):
        lmoments_estimate([2.0, 2.0, 2.0, 2.0, 2.0])
    with pytest.raises(ValueError):
        lmoments_estimate([1.0, 2.0, 3.0])


# ---------------------------------------------------------------------------
# maximum likelihood
# ---------------------------------------------------------------------------

def test_mle_recovery_and_ascent():
    truth = GevParams(30.0, 2.0, 0.1)
    data = _draws(truth, 5_000, seed=31)
    init = lmoments_estimate(data)
    fit = mle_fit(data, init)
    assert abs(fit.mu - 30.0) < 0.15
    assert abs(fit.sigma - 2.0) < 0.15
    assert abs(fit.xi - 0.1) < 0.08
    assert gev_log_likelihood(data, fit) >= gev_log_likelihood(data, init)


def test_mle_ascent_over_many_datasets():
    for seed in range(20):
        data = _draws(GevParams(28.0, 1.5, -0.05), 400, seed=100 + seed)
        init = lmoments_estimate(data)
        fit = mle_fit(data, init)
        assert gev_log_likelihood(data, fit) >= gev_log_likelihood(data, init)


def test_mle_translation_equivariance():
    data = _draws(GevParams(30.0, 2.0, 0.1), 5_000, seed=32)
    base = mle_fit(data)
    shifted = mle_fit(data + 100.0)
    assert abs(shifted.mu - base.mu - 100.0) < 1e-6
    assert abs(shifted.sigma - base.sigma) < 1e-6
    assert abs(shifted.xi - base.xi) < 1e-6
