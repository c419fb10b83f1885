"""Likelihood-free Bayesian inference with synthetic and empirical likelihoods.

Two replacements for an intractable likelihood are provided: a parametric
synthetic likelihood (plug-in and exactly unbiased multivariate-normal
estimators, sampled by random-walk MCMC) and a nonparametric empirical
likelihood (profile maximization under moment constraints, used as the
weight in importance and adaptive multiple importance samplers).  Built-in
models (normal toy, g-and-k quantile distribution, Clayton copula) exercise
the samplers end to end.
"""

from .bcel import AmisConfig, BcelConfig, el_log_weight, run_bcel, run_bcel_amis, run_bcel_resampled
from .copula import (
    ClaytonCopula,
    clayton_sample,
    pseudo_observations,
    run_bcop,
    spearman_rho_multivariate,
)
from .empirical_likelihood import (
    ELResult,
    ELTestResult,
    betel_logweight,
    el_confint,
    el_maximize,
    el_solve_values,
    el_test,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateSampleError,
    InvalidWeightsError,
    NoEstimateError,
    NotPositiveDefiniteError,
    SimulationError,
    SynelError,
)
from .mcmc import MCMCConfig, MCMCTrace, normalized_ess, run_mcmc_bsl
from .models import (
    GkParams,
    MvnToyModel,
    QuantileConstraintSpec,
    gk_log_bayes_factor,
    gk_quantile,
    gk_quantile_constraints,
    gk_simulate,
    mvn_toy_simulator,
)
from .priors import FlatPrior, NormalPrior, ProductPrior, UniformBoxPrior
from .rng import RngStream
from .special import MvtStudentT3, chi2_sf, mvt3_logpdf, mvt3_sample
from .synthetic_likelihood import (
    ZERO_MASS,
    SyntheticLikelihoodFit,
    fit_moments,
    ghurye_olkin_log_unbiased,
    is_zero_mass,
    max_synthetic_likelihood,
    sl_logdensity,
    tune_n_diagnostic,
)
from .weights import WeightedSample, ess, multinomial_resample, weighted_moments

__version__ = "0.1.0"

__all__ = [
    "AmisConfig",
    "BcelConfig",
    "ClaytonCopula",
    "ConfigError",
    "DataError",
    "DegenerateSampleError",
    "ELResult",
    "ELTestResult",
    "FlatPrior",
    "GkParams",
    "InvalidWeightsError",
    "MCMCConfig",
    "MCMCTrace",
    "MvnToyModel",
    "MvtStudentT3",
    "NoEstimateError",
    "NormalPrior",
    "NotPositiveDefiniteError",
    "ProductPrior",
    "QuantileConstraintSpec",
    "RngStream",
    "SimulationError",
    "SynelError",
    "SyntheticLikelihoodFit",
    "UniformBoxPrior",
    "WeightedSample",
    "ZERO_MASS",
    "betel_logweight",
    "chi2_sf",
    "clayton_sample",
    "el_confint",
    "el_log_weight",
    "el_maximize",
    "el_solve_values",
    "el_test",
    "ess",
    "fit_moments",
    "ghurye_olkin_log_unbiased",
    "gk_log_bayes_factor",
    "gk_quantile",
    "gk_quantile_constraints",
    "gk_simulate",
    "is_zero_mass",
    "max_synthetic_likelihood",
    "multinomial_resample",
    "mvn_toy_simulator",
    "mvt3_logpdf",
    "mvt3_sample",
    "normalized_ess",
    "pseudo_observations",
    "run_bcel",
    "run_bcel_amis",
    "run_bcel_resampled",
    "run_bcop",
    "run_mcmc_bsl",
    "sl_logdensity",
    "spearman_rho_multivariate",
    "tune_n_diagnostic",
    "weighted_moments",
]
