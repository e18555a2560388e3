import math

import numpy as np
import pytest

from enstails.gev import (
    GevParams,
    bayes_fit,
    bayes_fit_cells,
    posterior_quantile_draws,
    sample_lmoments,
)
from enstails.errors import DataError, FitError
from enstails.mcmc import McmcConfig, adaptive_rwm, split_rhat
from enstails.rng import stream
from enstails.synthetic import SyntheticSpec, synth_member_maxima
from enstails.grid import Grid


def _draws(params: GevParams, n: int, seed: int) -> np.ndarray:
    spec = SyntheticSpec(
        grid=Grid(np.array([0.0]), np.array([0.0])),
        location=params.mu, scale=params.sigma, shape=params.xi,
        n_members=n, seed=seed,
    )
    return synth_member_maxima(spec).values[:, 0, 0]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        McmcConfig(burn_in=1000, n_iterations=1000)
    with pytest.raises(ValueError):
        McmcConfig(thinning=0)
    with pytest.raises(ValueError):
        McmcConfig(n_iterations=1001, burn_in=500, thinning=7)  # 501 % 7 != 0
    with pytest.raises(ValueError):
        McmcConfig(burn_in=5025, n_iterations=10025, adapt_window=50)
    with pytest.raises(ValueError):
        McmcConfig(target_acceptance=0.0)
    assert McmcConfig().n_kept == 1000


# ---------------------------------------------------------------------------
# split R-hat
# ---------------------------------------------------------------------------

def test_split_rhat_mixed_chains_near_one():
    rng = np.random.default_rng(0)
    chains = rng.standard_normal((1, 4, 500, 2))
    r = split_rhat(chains)
    assert r.shape == (1, 2)
    assert np.all(r < 1.02)


def test_split_rhat_flags_separated_chains():
    rng = np.random.default_rng(1)
    chains = rng.standard_normal((1, 4, 500, 1)) * 0.05
    chains[0, 0] += 3.0  # one chain stuck far away
    assert split_rhat(chains)[0, 0] > 1.5


def test_split_rhat_constant_chains():
    chains = np.ones((1, 4, 100, 1))
    assert split_rhat(chains)[0, 0] == 1.0


# ---------------------------------------------------------------------------
# sampler vs numeric integration (restricted 2-parameter model)
# ---------------------------------------------------------------------------

def test_sampler_matches_quadrature_posterior_mean():
    # Gumbel model (location, log scale) with the package's normal priors:
    # the posterior is a smooth 2-D density we can integrate on a grid.
    data = _draws(GevParams(30.0, 2.0, 0.0), 50, seed=77)
    l1, l2, _ = sample_lmoments(data)
    prior_mu_mean = float(np.median(data))
    prior_mu_sd = 10.0 * l2
    prior_ls_mean = math.log(l2) + math.log(2.0)

    def log_post_grid(mu, log_sigma):
        s = (data[None, None, :] - mu[..., None]) / np.exp(log_sigma)[..., None]
        ll = -data.size * log_sigma - s.sum(-1) - np.exp(-s).sum(-1)
        lp = ll - 0.5 * ((mu - prior_mu_mean) / prior_mu_sd) ** 2
        return lp - 0.5 * (log_sigma - prior_ls_mean) ** 2

    mu_grid = np.linspace(28.0, 32.5, 901)
    ls_grid = np.linspace(0.1, 1.4, 901)
    mu_mesh, ls_mesh = np.meshgrid(mu_grid, ls_grid, indexing="ij")
    lp = log_post_grid(mu_mesh, ls_mesh)
    w = np.exp(lp - lp.max())
    quad_mu = float((w * mu_mesh).sum() / w.sum())
    quad_ls = float((w * ls_mesh).sum() / w.sum())

    def log_post_states(states):
        return log_post_grid(states[..., 0], states[..., 1])

    config = McmcConfig(n_chains=4, n_iterations=10_000, burn_in=5_000, thinning=5, seed=5)
    x0 = np.broadcast_to(np.array([l1, prior_ls_mean - math.log(2.0)]), (1, 4, 2))
    result = adaptive_rwm(log_post_states, x0, np.array([0.3, 0.1]), config, [stream(5)])
    draws = result.draws[0].reshape(-1, 2)
    assert abs(draws[:, 0].mean() - quad_mu) / abs(quad_mu) < 0.02
    assert abs(draws[:, 1].mean() - quad_ls) / abs(quad_ls) < 0.02


# ---------------------------------------------------------------------------
# Bayesian GEV fit
# ---------------------------------------------------------------------------

def test_bayes_fit_deterministic_and_counted():
    data = _draws(GevParams(30.0, 2.0, 0.1), 50, seed=41)
    config = McmcConfig(n_chains=2, n_iterations=2_000, burn_in=1_000, thinning=4, seed=9)
    a = bayes_fit(data, config)
    b = bayes_fit(data, config)
    assert np.array_equal(a.draws, b.draws)
    assert a.n_draws == 2 * (2_000 - 1_000) // 4
    c = bayes_fit(data, McmcConfig(n_chains=2, n_iterations=2_000, burn_in=1_000, thinning=4, seed=10))
    assert not np.array_equal(a.draws, c.draws)


def test_bayes_fit_draws_respect_invariants():
    data = _draws(GevParams(30.0, 2.0, 0.1), 50, seed=42)
    post = bayes_fit(data, McmcConfig(n_chains=2, n_iterations=2_000, burn_in=1_000, thinning=4, seed=1))
    assert np.all(post.sigma > 0.0)
    assert np.all(np.abs(post.xi) < 1.0)
    assert post.rhat.shape == (3,)
    assert post.acceptance.shape == (2,)
    assert np.all((post.acceptance > 0.0) & (post.acceptance < 1.0))


def test_bayes_fit_batch_matches_solo():
    rng_data = np.vstack([
        _draws(GevParams(30.0, 2.0, 0.1), 50, seed=50),
        _draws(GevParams(25.0, 1.5, -0.1), 50, seed=51),
        _draws(GevParams(33.0, 3.0, 0.0), 50, seed=52),
    ])
    config = McmcConfig(n_chains=2, n_iterations=1_000, burn_in=500, thinning=5)
    seeds = [500, 501, 502]
    batch = bayes_fit_cells(rng_data, config, seeds=seeds)
    for k in range(3):
        solo = bayes_fit_cells(rng_data[k : k + 1], config, seeds=[seeds[k]])[0]
        assert np.array_equal(solo.draws, batch[k].draws)


def test_bayes_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        bayes_fit(np.arange(5.0), McmcConfig())  # fewer than 10 points
    with pytest.raises(FitError):
        bayes_fit(np.full(50, 3.25), McmcConfig())  # all-identical sample
    bad = np.arange(50.0)
    bad[7] = np.nan
    with pytest.raises(DataError):
        bayes_fit(bad, McmcConfig())
    with pytest.raises(ValueError):
        bayes_fit_cells(np.vstack([np.arange(50.0)] * 2), McmcConfig())  # no seeds


def test_posterior_quantile_draws_monotone_in_p():
    data = _draws(GevParams(30.0, 2.0, 0.1), 50, seed=43)
    post = bayes_fit(data, McmcConfig(n_chains=2, n_iterations=1_000, burn_in=500, thinning=5, seed=2))
    lower = posterior_quantile_draws(post, 0.999)
    upper = posterior_quantile_draws(post, 0.9999)
    assert np.all(upper >= lower)
    assert lower.shape == (post.n_draws,)
    with pytest.raises(ValueError):
        posterior_quantile_draws(post, 1.0)
