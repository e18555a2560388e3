"""Adaptive random-walk Metropolis sampling.

The kernel is dimension-generic and batched: it advances many independent
posterior problems ("cells") with several chains each in lock-step numpy
operations.  Each cell consumes randomness only from its own counter-based
stream, so fitting a cell alone or inside any batch yields bit-identical
draws, and the batch layout never affects results.

Random-number consumption order per cell (fixed, documented):
  1. ``standard_normal((n_chains, ndim))`` - initial-state jitter;
  2. per adaptation window of length ``w``:
     ``standard_normal((w, n_chains, ndim))`` - proposal increments, then
     ``random((w, n_chains, ndim))`` - acceptance uniforms.

Coordinates are updated one at a time (Metropolis within Gibbs) with
per-coordinate step sizes.  During burn-in the log step sizes follow a
Robbins-Monro recursion toward the target acceptance rate and are frozen
afterward.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class McmcConfig:
    """Chain settings for the adaptive random-walk Metropolis sampler."""

    n_chains: int = 4
    n_iterations: int = 10_000
    burn_in: int = 5_000
    thinning: int = 5
    adapt_window: int = 50
    target_acceptance: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")
        if not 0 <= self.burn_in < self.n_iterations:
            raise ValueError("burn-in must satisfy 0 <= burn_in < n_iterations")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if (self.n_iterations - self.burn_in) % self.thinning != 0:
            raise ValueError("(n_iterations - burn_in) must be a multiple of thinning")
        if self.adapt_window < 1 or self.burn_in % self.adapt_window != 0:
            raise ValueError("burn-in must be a multiple of adapt_window")
        if not 0.0 < self.target_acceptance < 1.0:
            raise ValueError("target_acceptance must lie in (0, 1)")

    @property
    def n_kept(self) -> int:
        """Post-burn-in, post-thinning draws per chain."""
        return (self.n_iterations - self.burn_in) // self.thinning


@dataclass(frozen=True)
class RwmResult:
    """Raw sampler output: per-chain draws plus acceptance bookkeeping."""

    draws: np.ndarray        # (n_cells, n_chains, n_kept, ndim)
    acceptance: np.ndarray   # (n_cells, n_chains) post-burn-in acceptance rate
    steps: np.ndarray        # (n_cells, n_chains, ndim) frozen step sizes


def adaptive_rwm(
    log_post: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    step0: np.ndarray,
    config: McmcConfig,
    rngs: Sequence[np.random.Generator],
) -> RwmResult:
    """Run batched adaptive random-walk Metropolis.

    Parameters
    ----------
    log_post : callable
        Maps states of shape (n_cells, n_chains, ndim) to log posterior
        densities of shape (n_cells, n_chains).  ``-inf`` marks zero density.
    x0 : ndarray, shape (n_cells, n_chains, ndim)
        Initial states; every state must have finite log posterior.
    step0 : ndarray broadcastable to (n_cells, n_chains, ndim)
        Initial proposal step sizes (strictly positive).
    config : McmcConfig
    rngs : sequence of n_cells generators, one per cell.
    """
    x = np.array(x0, dtype=float)
    n_cells, n_chains, ndim = x.shape
    if len(rngs) != n_cells:
        raise ValueError("need exactly one generator per cell")

    # Initial jitter (consumed even when callers pre-jittered x0 themselves,
    # to keep the stream layout identical across entry points).
    jitter = np.stack([rng.standard_normal((n_chains, ndim)) for rng in rngs])
    x = x + jitter * step0
    lp = log_post(x)
    if not np.all(np.isfinite(lp)):
        # Fall back to the unjittered center for chains that left the support.
        bad = ~np.isfinite(lp)
        x = np.where(bad[..., None], np.asarray(x0, dtype=float), x)
        lp = log_post(x)
    if not np.all(np.isfinite(lp)):
        raise ValueError("initial states have non-finite log posterior")

    log_step = np.log(np.broadcast_to(np.asarray(step0, dtype=float), x.shape)).copy()
    kept = np.empty((n_cells, n_chains, config.n_kept, ndim))
    win_accepts = np.zeros((n_cells, n_chains, ndim))
    post_accepts = np.zeros((n_cells, n_chains))

    n_post = config.n_iterations - config.burn_in
    window = config.adapt_window
    edges = list(range(0, config.n_iterations, window))
    window_index = 0
    rec = 0
    for start in edges:
        length = min(window, config.n_iterations - start)
        normals = np.stack([rng.standard_normal((length, n_chains, ndim)) for rng in rngs])
        uniforms = np.stack([rng.random((length, n_chains, ndim)) for rng in rngs])
        step = np.exp(log_step)
        for t in range(length):
            i = start + t
            for d in range(ndim):
                prop = x.copy()
                prop[..., d] += step[..., d] * normals[:, t, :, d]
                lp_prop = log_post(prop)
                with np.errstate(invalid="ignore"):
                    accept = np.log(uniforms[:, t, :, d]) < lp_prop - lp
                x[..., d] = np.where(accept, prop[..., d], x[..., d])
                lp = np.where(accept, lp_prop, lp)
                if i < config.burn_in:
                    win_accepts[..., d] += accept
                else:
                    post_accepts += accept
            if i >= config.burn_in and (i - config.burn_in) % config.thinning == 0:
                kept[:, :, rec, :] = x
                rec += 1
        if start + length <= config.burn_in:
            window_index += 1
            rate = win_accepts / length
            log_step += (rate - config.target_acceptance) / np.sqrt(window_index)
            win_accepts[:] = 0.0

    acceptance = post_accepts / (n_post * ndim)
    return RwmResult(draws=kept, acceptance=acceptance, steps=np.exp(log_step))


def split_rhat(chains: np.ndarray) -> np.ndarray:
    """Split-chain potential scale reduction factor.

    Parameters
    ----------
    chains : ndarray, shape (n_cells, n_chains, n_draws, ndim)

    Returns
    -------
    ndarray, shape (n_cells, ndim); 1.0 marks perfect mixing.  Degenerate
    chains with zero within-variance but nonzero between-variance map to inf.
    """
    n_cells, n_chains, n_draws, ndim = chains.shape
    half = n_draws // 2
    if half < 2:
        raise ValueError("need at least 4 draws per chain for split R-hat")
    split = chains[:, :, : 2 * half, :].reshape(n_cells, 2 * n_chains, half, ndim)
    means = split.mean(axis=2)                      # (cells, 2K, ndim)
    variances = split.var(axis=2, ddof=1)           # (cells, 2K, ndim)
    w = variances.mean(axis=1)                      # (cells, ndim)
    b_over_n = means.var(axis=1, ddof=1)            # (cells, ndim)
    var_hat = (half - 1) / half * w + b_over_n
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(var_hat / w)
    r = np.where((w == 0.0) & (b_over_n == 0.0), 1.0, r)
    r = np.where((w == 0.0) & (b_over_n > 0.0), np.inf, r)
    return r
