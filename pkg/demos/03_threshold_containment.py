"""Does a small ensemble's GEV extrapolation contain a huge ensemble's tail?

For each grid cell, a 50-member ensemble is fitted with the Bayesian GEV
sampler and its 99.9% threshold posterior is compared to the empirical
99.9% quantile of a 7424-member ensemble. When both ensembles share a
distribution the containment probability hovers around one half; shifting
the huge ensemble hotter drives it toward zero.
"""

import numpy as np

from enstails import Grid, SyntheticSpec, storyline_field, synth_member_maxima
from enstails.compare import compare_thresholds, confidence_category
from enstails.gev import bayes_fit_cells, posterior_quantile_draws
from enstails.mcmc import McmcConfig
from enstails.rng import mix_seed

P = 0.999
GRID = Grid(np.linspace(-60.0, 60.0, 4), np.arange(5) * 72.0)
MCMC = McmcConfig(n_iterations=4000, burn_in=2000, thinning=2)


def containment_map(shift_sigmas):
    location, scale, shape = 28.0, 2.0, -0.1
    small = synth_member_maxima(SyntheticSpec(
        grid=GRID, location=location, scale=scale, shape=shape,
        n_members=50, seed=100,
    ))
    huge = synth_member_maxima(SyntheticSpec(
        grid=GRID, location=location + shift_sigmas * scale, scale=scale, shape=shape,
        n_members=7424, seed=200,
    ))
    data = small.values.reshape(50, -1).T
    seeds = [mix_seed(1, 4, c) for c in range(GRID.ncells)]
    posteriors = bayes_fit_cells(data, MCMC, seeds=seeds)
    draws = np.stack([posterior_quantile_draws(p, P) for p in posteriors], axis=1)
    draws = draws.reshape(-1, GRID.nlat, GRID.nlon)
    return compare_thresholds(draws, storyline_field(huge, P), P)


for shift in (0.0, 3.0):
    result = containment_map(shift)
    probs = result.probability.ravel()
    print(f"\nhuge ensemble shifted by +{shift:.0f} sigma:")
    print(f"  containment probability: median={np.median(probs):.2f} "
          f"min={probs.min():.2f} max={probs.max():.2f}")
    labels = [confidence_category(p).label for p in probs]
    for label in sorted(set(labels)):
        print(f"  {labels.count(label):3d} cells: {label}")
