"""Posterior summaries: reproduction numbers, undercount factors, predictive bands.

Every operation here maps chain draws back through the epidemic model:
each draw is re-simulated to recover its trajectory, and summaries are
empirical means and equal-tailed percentile intervals across draws.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .data import DeathSeries, RegionConfig
from .dates import date_of
from .likelihood import death_intensity_series
from .delay import DelayDistribution
from .sampler import Chain
from .sir import Params, Trajectory, simulate_sir

MAX_FORECAST_DAYS = 60  # longer horizons are refused as policy-dependent speculation
PREDICTIVE_THIN = 2_000


@dataclass(frozen=True)
class CredibleSummary:
    """Posterior mean with an equal-tailed 95% credible interval."""

    mean: float
    lower: float
    upper: float


def _credible(values: np.ndarray) -> CredibleSummary:
    lo, hi = np.percentile(values, [2.5, 97.5])
    return CredibleSummary(float(values.mean()), float(lo), float(hi))


@dataclass(frozen=True)
class SummaryRow:
    """One (region, p) cell of the summary tables."""

    region_id: str
    p: float
    r0: CredibleSummary
    rt_end: CredibleSummary
    undercount_end: CredibleSummary | None


@dataclass(frozen=True)
class UndercountSeries:
    """Per-day posterior mean and 95% interval of infections / confirmed cases."""

    days: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["day", "date", "lower", "mean", "upper"])
            for k in range(self.days.size):
                writer.writerow(
                    [
                        int(self.days[k]),
                        date_of(int(self.days[k])).isoformat(),
                        repr(float(self.lower[k])),
                        repr(float(self.mean[k])),
                        repr(float(self.upper[k])),
                    ]
                )


@dataclass(frozen=True)
class PredictiveBand:
    """Pointwise posterior predictive quantiles for daily death counts."""

    days: np.ndarray
    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray
    mean_intensity: np.ndarray
    data_end_day: int  # days beyond this are forecast

    def __post_init__(self):
        if not ((self.lower <= self.median).all() and (self.median <= self.upper).all()):
            raise ValueError("band quantiles must be ordered pointwise")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["day", "date", "lower", "median", "upper", "mean_intensity", "forecast"])
            for k in range(self.days.size):
                day = int(self.days[k])
                writer.writerow(
                    [
                        day,
                        date_of(day).isoformat(),
                        int(self.lower[k]),
                        int(self.median[k]),
                        int(self.upper[k]),
                        repr(float(self.mean_intensity[k])),
                        int(day > self.data_end_day),
                    ]
                )


def _simulate_draw(row: np.ndarray, p: float, region: RegionConfig, horizon: int) -> Trajectory:
    params = Params(beta=row[0], gamma=row[1], t0=row[2], phi=row[3], p=p)
    return simulate_sir(params, region.population, region.t1_day, horizon)


def summarize(chain: Chain, region: RegionConfig, deaths: DeathSeries | None = None) -> SummaryRow:
    """Posterior mean and 95% interval of R0, R_t at the data end, and (when a
    death series is supplied) the undercount factor at the data end."""
    draws = chain.draws
    if draws.shape[0] == 0:
        raise ValueError("chain has no post-burn-in draws")
    end = region.end_day

    r0s = draws[:, 0] / draws[:, 1]
    rts = np.empty(draws.shape[0])
    cum_inf_end = np.empty(draws.shape[0])
    for k in range(draws.shape[0]):
        traj = _simulate_draw(draws[k], chain.p, region, end)
        beta, gamma, _, phi = draws[k]
        rts[k] = phi * beta * traj.s_at(end) / (region.population * gamma)
        cum_inf_end[k] = traj.cumulative_infections()[end]

    undercount = None
    if deaths is not None:
        cases_end = int(deaths.truncated(region.data_end_date).cumulative_cases[-1])
        if cases_end > 0:
            undercount = _credible(cum_inf_end / cases_end)

    return SummaryRow(
        region_id=region.region_id,
        p=chain.p,
        r0=_credible(r0s),
        rt_end=_credible(rts),
        undercount_end=undercount,
    )


def undercount_series(chain: Chain, deaths: DeathSeries, region: RegionConfig) -> UndercountSeries:
    """Posterior undercount factor (cumulative infections over confirmed cases) per day.

    Days with zero confirmed cases are omitted. An all-zero case series
    yields an empty result.
    """
    series = deaths.truncated(region.data_end_date)
    cases = series.cumulative_cases
    keep = cases > 0
    if not keep.any():
        import warnings

        warnings.warn(f"region {region.region_id}: no confirmed cases, undercount undefined")
        empty = np.array([])
        return UndercountSeries(empty, empty, empty, empty)

    draws = chain.draws
    days = series.days[keep]
    factors = np.empty((draws.shape[0], days.size))
    for k in range(draws.shape[0]):
        traj = _simulate_draw(draws[k], chain.p, region, series.end_day)
        cum_inf = traj.cumulative_infections()[days]
        factors[k] = cum_inf / cases[keep]

    lo, hi = np.percentile(factors, [2.5, 97.5], axis=0)
    return UndercountSeries(days=days, mean=factors.mean(axis=0), lower=lo, upper=hi)


def thin_indices(n: int, max_draws: int) -> np.ndarray:
    """Evenly spaced, deterministic draw indices for predictive sampling."""
    if n <= max_draws:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, max_draws).round().astype(int))


def predictive_band(
    chain: Chain,
    theta: DelayDistribution,
    region: RegionConfig,
    forecast_days: int,
    seed: int,
    max_draws: int = PREDICTIVE_THIN,
) -> PredictiveBand:
    """Pointwise 95% posterior predictive band for daily deaths.

    Each (thinned) draw is simulated through the forecast horizon with its
    parameters held fixed, one Poisson death count is drawn per day per
    draw, and pointwise 2.5/50/97.5 percentiles are reported. Deterministic
    for a given predictive seed. Horizons beyond 60 days are refused.
    """
    if forecast_days < 0:
        raise ValueError("forecast_days must be non-negative")
    if forecast_days > MAX_FORECAST_DAYS:
        raise ValueError(
            f"forecast horizon {forecast_days} days exceeds the {MAX_FORECAST_DAYS}-day cap"
        )
    draws = chain.draws
    if draws.shape[0] == 0:
        raise ValueError("chain has no post-burn-in draws")

    horizon = region.end_day + forecast_days
    idx = thin_indices(draws.shape[0], max_draws)
    lam = np.empty((idx.size, horizon + 1))
    for k, di in enumerate(idx):
        traj = _simulate_draw(draws[di], chain.p, region, horizon)
        lam[k] = death_intensity_series(traj.nu, theta, chain.p)

    rng = np.random.default_rng(seed)
    counts = rng.poisson(lam)
    lo, med, hi = np.quantile(counts, [0.025, 0.5, 0.975], axis=0, method="inverted_cdf")
    return PredictiveBand(
        days=np.arange(horizon + 1),
        lower=lo.astype(np.int64),
        median=med.astype(np.int64),
        upper=hi.astype(np.int64),
        mean_intensity=lam.mean(axis=0),
        data_end_day=region.end_day,
    )


def synthesize_data(
    true_params: Params,
    region: RegionConfig,
    theta: DelayDistribution,
    seed: int,
    case_detection: float = 0.1,
) -> DeathSeries:
    """Generate a death series from known parameters (the model run forwards).

    Daily deaths are Poisson draws from the model intensity; the confirmed
    case column is a fixed detection fraction of cumulative infections, so
    the true undercount factor is 1 / case_detection by construction.
    """
    traj = simulate_sir(true_params, region.population, region.t1_day, region.end_day)
    lam = death_intensity_series(traj.nu, theta, true_params.p)
    rng = np.random.default_rng(seed)
    deaths = rng.poisson(lam)
    cases = np.floor(case_detection * traj.cumulative_infections()).astype(np.int64)
    return DeathSeries(
        region_id=region.region_id,
        start_date=date_of(0),
        daily_deaths=deaths,
        cumulative_cases=cases,
    )


def summary_table_csv(rows: list[SummaryRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "region",
                "p",
                "r0_mean",
                "r0_lower",
                "r0_upper",
                "rt_mean",
                "rt_lower",
                "rt_upper",
                "undercount_mean",
                "undercount_lower",
                "undercount_upper",
            ]
        )
        for row in rows:
            record = [row.region_id, repr(row.p)]
            for summary in (row.r0, row.rt_end, row.undercount_end):
                if summary is None:
                    record += ["", "", ""]
                else:
                    record += [repr(summary.mean), repr(summary.lower), repr(summary.upper)]
            writer.writerow(record)


def summary_table_text(rows: list[SummaryRow]) -> str:
    """Aligned text tables (one per quantity): rows are p values, columns regions."""
    regions = sorted({r.region_id for r in rows})
    ps = sorted({r.p for r in rows})
    by_key = {(r.region_id, r.p): r for r in rows}

    def cell(row: SummaryRow | None, attr: str) -> str:
        if row is None:
            return "-"
        summary = getattr(row, attr)
        if summary is None:
            return "-"
        return f"{summary.mean:.2f} ({summary.lower:.2f},{summary.upper:.2f})"

    blocks = []
    for title, attr in [
        ("R0 (pre-intervention)", "r0"),
        ("Undercount factor at data end", "undercount_end"),
        ("R_t at data end", "rt_end"),
    ]:
        width = 22
        header = "p".ljust(8) + "".join(region.ljust(width) for region in regions)
        lines = [title, header]
        for p in ps:
            line = f"{p:<8g}" + "".join(
                cell(by_key.get((region, p)), attr).ljust(width) for region in regions
            )
            lines.append(line)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
