"""Bayesian change-point SIR fitting of daily COVID-19 death counts.

The pipeline: parse cumulative NYT-format counts into daily series, build
an infection-to-death delay distribution by Monte Carlo, integrate a
change-point SIR model for new infections, score death counts with a
Poisson convolution likelihood under truncated-normal/uniform priors, and
sample the posterior with adaptive Metropolis. Posterior draws become
reproduction-number tables, case-undercount factors, predictive bands and
short-term forecasts.
"""

__version__ = "0.1.0"

from .data import DeathSeries, RegionConfig, load_region_config, parse_nyt_csv
from .delay import DelayDistribution, PoissonGammaParams, build_time_to_death, sample_poisson_gamma
from .likelihood import death_intensity, log_likelihood, log_posterior, log_prior
from .posterior import predictive_band, summarize, synthesize_data, undercount_series
from .sampler import Chain, SamplerConfig, default_init, run_chain
from .sir import Params, Trajectory, effective_rt, r0, simulate_sir

__all__ = [
    "__version__",
    "DeathSeries",
    "RegionConfig",
    "load_region_config",
    "parse_nyt_csv",
    "DelayDistribution",
    "PoissonGammaParams",
    "build_time_to_death",
    "sample_poisson_gamma",
    "death_intensity",
    "log_likelihood",
    "log_posterior",
    "log_prior",
    "predictive_band",
    "summarize",
    "synthesize_data",
    "undercount_series",
    "Chain",
    "SamplerConfig",
    "default_init",
    "run_chain",
    "Params",
    "Trajectory",
    "effective_rt",
    "r0",
    "simulate_sir",
]
