"""Poisson death likelihood, parameter priors, and the log posterior.

Deaths on day r are Poisson with intensity p * sum_t nu_t * theta_{r-t}:
the new-infection series convolved with the infection-to-death delay
distribution, scaled by the infection fatality rate. The prior places a
truncated normal on the inverse removal rate 1/gamma (support [3.4, 9.4]),
a conditional truncated normal on beta given gamma (support [gamma,
4*gamma], so R0 ranges over 1..4), a uniform on the epidemic start time t0
over [0, 50], and a uniform on the intervention multiplier phi over
(0.01, 0.99).

All densities are proper: the gamma-dependent normalization of the
beta-given-gamma term and the Jacobian of the 1/gamma reparameterization
are included, since both vary along the chain.
"""

import math

import numpy as np
from scipy.special import gammaln, ndtr

from .data import DeathSeries, RegionConfig
from .delay import DelayDistribution
from .sir import (
    GAMMA_INV_HI,
    GAMMA_INV_LO,
    PHI_HI,
    PHI_LO,
    T0_HI,
    T0_LO,
    Params,
    simulate_sir,
)

NEG_INF = float("-inf")

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Prior hyperparameters: 1/gamma ~ N(6.4, 1.5^2) truncated to [3.4, 9.4];
# beta | gamma ~ N(2.5*gamma, (1.5*gamma)^2) truncated to [gamma, 4*gamma].
GAMMA_INV_MEAN = 6.4
GAMMA_INV_SD = 1.5
BETA_MEAN_FACTOR = 2.5
BETA_SD_FACTOR = 1.5


def truncated_normal_logpdf(x: float, mean: float, sd: float, lo: float, hi: float) -> float:
    """Proper log density of a normal truncated to [lo, hi]."""
    if not lo <= x <= hi:
        return NEG_INF
    z = (x - mean) / sd
    log_norm = math.log(ndtr((hi - mean) / sd) - ndtr((lo - mean) / sd))
    return -0.5 * z * z - _LOG_SQRT_2PI - math.log(sd) - log_norm


def death_intensity(nu: np.ndarray, theta: DelayDistribution, p: float, r: int) -> float:
    """Expected deaths on day r: p * sum_t nu_t * theta_{r-t} (theta_s = 0 beyond m)."""
    nu = np.asarray(nu, dtype=np.float64)
    if not 0 <= r < nu.size:
        raise IndexError(f"day {r} outside the nu grid")
    s_max = min(r, theta.max_delay)
    acc = 0.0
    for s in range(s_max + 1):
        acc += nu[r - s] * theta.probs[s]
    return p * acc


def death_intensity_series(nu: np.ndarray, theta: DelayDistribution, p: float) -> np.ndarray:
    """Vectorized death_intensity for every day of the nu grid."""
    nu = np.asarray(nu, dtype=np.float64)
    return p * np.convolve(nu, theta.probs)[: nu.size]


def poisson_logpmf(counts: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Sum-ready Poisson log pmf with the 0-intensity conventions.

    lam == 0 contributes 0 where the count is 0 and -inf where it is not.
    """
    counts = np.asarray(counts, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    out = np.full(np.broadcast_shapes(counts.shape, lam.shape), NEG_INF)
    zero = lam == 0.0
    out[zero & (counts == 0)] = 0.0
    pos = ~zero
    out[pos] = counts[pos] * np.log(lam[pos]) - lam[pos] - gammaln(counts[pos] + 1.0)
    return out


def log_likelihood(
    deaths: DeathSeries, nu: np.ndarray, theta: DelayDistribution, p: float
) -> float:
    """Log probability of the observed daily deaths given new infections.

    ``nu`` must be on the absolute day grid starting at day 0 and cover the
    full series range, so infections preceding the first data day still
    feed the convolution.
    """
    nu = np.asarray(nu, dtype=np.float64)
    if nu.size < deaths.end_day + 1:
        raise ValueError(
            f"nu grid ends at day {nu.size - 1} but deaths run through day {deaths.end_day}"
        )
    lam = death_intensity_series(nu, theta, p)[deaths.start_day : deaths.end_day + 1]
    total = float(poisson_logpmf(deaths.daily_deaths, lam).sum())
    return total


def log_prior(params: Params) -> float:
    """Proper joint log prior density, evaluated in (beta, gamma, t0, phi) space.

    The 1/gamma prior is mapped to gamma space with the Jacobian
    |d(1/gamma)/d gamma| = gamma^-2.
    """
    if params.gamma <= 0 or params.beta <= 0:
        return NEG_INF
    ginv = 1.0 / params.gamma
    lp = truncated_normal_logpdf(ginv, GAMMA_INV_MEAN, GAMMA_INV_SD, GAMMA_INV_LO, GAMMA_INV_HI)
    if lp == NEG_INF:
        return NEG_INF
    lp += 2.0 * math.log(ginv)  # Jacobian of gamma -> 1/gamma
    lp_beta = truncated_normal_logpdf(
        params.beta,
        BETA_MEAN_FACTOR * params.gamma,
        BETA_SD_FACTOR * params.gamma,
        params.gamma,
        4.0 * params.gamma,
    )
    if lp_beta == NEG_INF:
        return NEG_INF
    lp += lp_beta
    if not T0_LO <= params.t0 <= T0_HI:
        return NEG_INF
    lp += -math.log(T0_HI - T0_LO)
    if not PHI_LO < params.phi < PHI_HI:
        return NEG_INF
    lp += -math.log(PHI_HI - PHI_LO)
    return lp


def log_posterior(
    params: Params,
    deaths: DeathSeries,
    theta: DelayDistribution,
    region: RegionConfig,
) -> float:
    """Unnormalized log posterior; skips the ODE entirely off prior support."""
    lp = log_prior(params)
    if lp == NEG_INF:
        return NEG_INF
    traj = simulate_sir(params, region.population, region.t1_day, region.end_day)
    ll = log_likelihood(deaths, traj.nu, theta, params.p)
    value = ll + lp
    if math.isnan(value):
        raise FloatingPointError("log posterior evaluated to NaN")
    return value


def make_log_posterior(deaths: DeathSeries, theta: DelayDistribution, region: RegionConfig):
    """Bind data, delay distribution, and region into a Params -> float target."""

    def target(params: Params) -> float:
        return log_posterior(params, deaths, theta, region)

    return target
