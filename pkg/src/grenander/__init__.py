"""Grenander estimator: exact fitting, likelihood derivatives, plug-in functionals and rate experiments."""

from .convolution import PiecewiseLinearFn, convolve_reference, convolve_steps, decomposition_terms
from .densities import Linear, StepJump, TruncExp, Uniform, density_from_config, sample_iid
from .estimator import (
    ConcaveMajorant,
    EmpiricalCDF,
    Sample,
    StepDensity,
    bounds_diagnostics,
    empirical_cdf,
    eval_density,
    eval_fitted_cdf,
    grenander_fit,
    grenander_oracle,
    least_concave_majorant,
    log_likelihood,
    make_sample,
)
from .harness import ExperimentConfig, ExperimentResult, ks_against_normal, rate_slope, run_experiment
from .likelihood import (
    TestFunction,
    clt_statistic,
    dlog_likelihood,
    gaussian_covariance,
    hoelder,
    indicator,
    limit_variance,
    perturbation_bound,
    pi0_projection,
    plugin_minus_empirical,
    score_self,
)
from .metrics import hellinger, l1_distance, l2_distance, sup_diff_cdf

__version__ = "0.1.0"
