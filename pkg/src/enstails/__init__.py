"""Extreme-tail statistics for huge weather ensembles.

Per-grid-cell seasonal block maxima, Bayesian GEV fitting, containment of
huge-ensemble empirical thresholds within small-ensemble posteriors, and
humid-heat storylines with public-safety risk categories - verifiable at
desk scale against synthetic ensembles with known distributions.
"""

from .compare import (
    ComparisonResult,
    ConfidenceCategory,
    category_fractions,
    compare_thresholds,
    confidence_category,
    containment_probability,
    difference_field,
)
from .extremes import (
    AnalysisConfig,
    MemberMaxima,
    empirical_quantile,
    ensemble_max_field,
    extract_member_maxima,
    read_member_maxima,
    storyline_field,
    write_member_maxima,
)
from .blockio import EnsembleBlock, read_block, read_land_mask, write_block, write_land_mask
from .gev import (
    GevParams,
    PosteriorSamples,
    bayes_fit,
    bayes_fit_cells,
    gev_cdf,
    gev_log_likelihood,
    gev_max_params,
    gev_mean,
    gev_quantile,
    lmoments_estimate,
    mle_fit,
    posterior_quantile_draws,
    sample_lmoments,
)
from .grid import Field, Grid, LandMask, area_weight, land_selector, weighted_fraction
from .heatindex import (
    RiskCategory,
    dewpoint_to_rh,
    heat_index,
    heat_index_field,
    risk_category,
    risk_category_codes,
)
from .mcmc import McmcConfig
from .pipeline import RunConfig, load_config, run_pipeline, validate_config
from .report import (
    ExceedanceEntry,
    JointHistogram,
    TransitionTable,
    category_transition_table,
    exceedance_report,
    joint_histogram,
    render_map,
)
from .synthetic import SyntheticSpec, synth_member_maxima

__version__ = "0.1.0"
