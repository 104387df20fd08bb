import datetime as dt

import numpy as np
import pytest
from scipy import stats

from epifit.data import RegionConfig
from epifit.likelihood import make_log_posterior
from epifit.posterior import (
    predictive_band,
    summarize,
    summary_table_csv,
    summary_table_text,
    synthesize_data,
    thin_indices,
    undercount_series,
)
from epifit.sampler import Chain, SamplerConfig, default_init, run_chain
from epifit.sir import Params, simulate_sir


def constant_chain(params: Params, n: int = 50) -> Chain:
    """A degenerate chain whose draws are all the same point."""
    history = np.tile(params.as_vector(), (n, 1))
    return Chain(
        history=history,
        log_posteriors=np.zeros(n),
        accepted=np.ones(n, dtype=bool),
        burn_in=0,
        p=params.p,
        seed=0,
    )


class TestSummarize:
    def test_degenerate_chain_collapses_interval(self, synth_truth, synth_region, synth_deaths):
        row = summarize(constant_chain(synth_truth), synth_region, synth_deaths)
        assert row.r0.lower == pytest.approx(row.r0.mean) == pytest.approx(row.r0.upper)
        assert row.r0.mean == pytest.approx(2.5)
        assert row.rt_end.lower == pytest.approx(row.rt_end.upper)
        assert row.undercount_end is not None

    def test_interval_orders(self, synth_chain, synth_region, synth_deaths):
        row = summarize(synth_chain, synth_region, synth_deaths)
        for summary in (row.r0, row.rt_end, row.undercount_end):
            assert summary.lower <= summary.mean <= summary.upper

    def test_empty_chain_rejected(self, synth_truth, synth_region):
        chain = constant_chain(synth_truth, n=10)
        empty = Chain(
            history=chain.history,
            log_posteriors=chain.log_posteriors,
            accepted=np.array(chain.accepted),
            burn_in=10,
            p=chain.p,
            seed=0,
        )
        with pytest.raises(ValueError):
            summarize(empty, synth_region)

    def test_rt_uses_susceptible_depletion(self, synth_truth, synth_region):
        row = summarize(constant_chain(synth_truth), synth_region)
        traj = simulate_sir(
            synth_truth, synth_region.population, synth_region.t1_day, synth_region.end_day
        )
        s_frac = traj.S[synth_region.end_day] / synth_region.population
        expected = synth_truth.phi * 2.5 * s_frac
        assert row.rt_end.mean == pytest.approx(expected)


class TestUndercount:
    def test_definition(self, synth_truth, synth_region, theta):
        deaths = synthesize_data(synth_truth, synth_region, theta, seed=5, case_detection=0.1)
        series = undercount_series(constant_chain(synth_truth), deaths, synth_region)
        # cases are exactly 10% of true cumulative infections (floored), so
        # the generating draw must see an undercount of ~10 once counts are
        # large enough for the floor to be negligible
        late = series.days >= synth_region.t1_day
        assert np.allclose(series.mean[late], 10.0, rtol=0.02)

    def test_simple_ratio(self, synth_truth, synth_region, theta):
        deaths = synthesize_data(synth_truth, synth_region, theta, seed=5, case_detection=0.1)
        chain = constant_chain(synth_truth)
        series = undercount_series(chain, deaths, synth_region)
        traj = simulate_sir(
            synth_truth, synth_region.population, synth_region.t1_day, synth_region.end_day
        )
        day = int(series.days[-1])
        cases = deaths.cumulative_cases[day - deaths.start_day]
        assert series.mean[-1] == pytest.approx(traj.cumulative_infections()[day] / cases)

    def test_zero_case_days_omitted(self, synth_truth, synth_region, theta):
        deaths = synthesize_data(synth_truth, synth_region, theta, seed=5)
        n_zero = int((deaths.cumulative_cases == 0).sum())
        assert n_zero > 0
        series = undercount_series(constant_chain(synth_truth), deaths, synth_region)
        assert series.days.size == deaths.n_days - n_zero

    def test_all_zero_cases_warns_and_empty(self, synth_truth, synth_region, theta):
        deaths = synthesize_data(synth_truth, synth_region, theta, seed=5, case_detection=0.0)
        with pytest.warns(UserWarning):
            series = undercount_series(constant_chain(synth_truth), deaths, synth_region)
        assert series.days.size == 0

    def test_inverse_scaling_with_p(self, synth_region, synth_deaths, theta):
        # halving p roughly doubles the undercount estimate
        rows = {}
        for p in (0.005, 0.01):
            region = RegionConfig(
                region_id=synth_region.region_id,
                population=synth_region.population,
                intervention_date=synth_region.intervention_date,
                ifr=p,
                data_end_date=synth_region.data_end_date,
            )
            target = make_log_posterior(synth_deaths, theta, region)
            chain = run_chain(
                target,
                default_init(region, synth_deaths),
                SamplerConfig(n_iterations=8_000, adapt_start=1_500, burn_in=4_000, seed=29),
            )
            rows[p] = summarize(chain, region, synth_deaths)
        ratio = rows[0.005].undercount_end.mean / rows[0.01].undercount_end.mean
        assert 1.8 <= ratio <= 2.2


class TestPredictiveBand:
    def test_zero_intensity_zero_band(self, synth_truth, synth_region, theta):
        silent = Params(
            beta=synth_truth.beta, gamma=synth_truth.gamma,
            t0=synth_truth.t0, phi=synth_truth.phi, p=0.0,
        )
        band = predictive_band(constant_chain(silent), theta, synth_region, 0, seed=1)
        assert (band.upper == 0).all()
        assert (band.lower == 0).all()

    def test_poisson_quantile_oracle(self, synth_truth, synth_region, theta):
        chain = constant_chain(synth_truth, n=4_000)
        band = predictive_band(chain, theta, synth_region, 0, seed=2, max_draws=4_000)
        lam = band.mean_intensity
        day = int(np.argmin(np.abs(lam - 100.0)))
        assert abs(lam[day] - 100.0) < 15.0  # the fixture epidemic passes near 100/day
        expected = stats.poisson.ppf([0.025, 0.5, 0.975], lam[day])
        assert abs(band.lower[day] - expected[0]) <= 2
        assert abs(band.median[day] - expected[1]) <= 2
        assert abs(band.upper[day] - expected[2]) <= 2

    def test_band_orders_and_ints(self, synth_chain, synth_region, theta):
        band = predictive_band(synth_chain, theta, synth_region, 14, seed=3)
        assert (band.lower <= band.median).all() and (band.median <= band.upper).all()
        assert band.lower.dtype.kind == "i" and (band.lower >= 0).all()
        assert band.days.size == synth_region.end_day + 15

    def test_widths_grow_into_forecast(self, synth_chain, synth_region, theta):
        band = predictive_band(synth_chain, theta, synth_region, 21, seed=3)
        widths = (band.upper - band.lower).astype(float)
        end = synth_region.end_day
        # relative width: the forecast tail should be fuzzier than the
        # in-sample fit at comparable intensity
        last_in = widths[end - 13 : end + 1] / np.maximum(band.mean_intensity[end - 13 : end + 1], 1)
        tail = widths[end + 8 :] / np.maximum(band.mean_intensity[end + 8 :], 1)
        assert tail.mean() > last_in.mean()

    def test_deterministic_given_seed(self, synth_chain, synth_region, theta):
        a = predictive_band(synth_chain, theta, synth_region, 7, seed=9)
        b = predictive_band(synth_chain, theta, synth_region, 7, seed=9)
        assert (a.lower == b.lower).all() and (a.upper == b.upper).all()

    def test_horizon_cap(self, synth_chain, synth_region, theta):
        with pytest.raises(ValueError, match="cap"):
            predictive_band(synth_chain, theta, synth_region, 61, seed=1)
        with pytest.raises(ValueError):
            predictive_band(synth_chain, theta, synth_region, -1, seed=1)

    def test_in_sample_coverage(self, synth_chain, synth_region, synth_deaths, theta):
        band = predictive_band(synth_chain, theta, synth_region, 0, seed=4)
        observed = np.zeros(band.days.size, dtype=int)
        observed[synth_deaths.start_day : synth_deaths.end_day + 1] = synth_deaths.daily_deaths
        covered = (observed >= band.lower) & (observed <= band.upper)
        assert covered.mean() > 0.85


class TestThinning:
    def test_identity_when_small(self):
        assert thin_indices(10, 100).tolist() == list(range(10))

    def test_bounded_and_deterministic(self):
        idx = thin_indices(100_000, 2_000)
        assert idx.size <= 2_000
        assert idx[0] == 0 and idx[-1] == 99_999
        assert (thin_indices(100_000, 2_000) == idx).all()


class TestSynthesizeData:
    def test_zero_ifr_zero_deaths(self, synth_truth, synth_region, theta):
        silent = Params(
            beta=synth_truth.beta, gamma=synth_truth.gamma,
            t0=synth_truth.t0, phi=synth_truth.phi, p=0.0,
        )
        deaths = synthesize_data(silent, synth_region, theta, seed=8)
        assert (deaths.daily_deaths == 0).all()

    def test_deterministic(self, synth_truth, synth_region, theta):
        a = synthesize_data(synth_truth, synth_region, theta, seed=8)
        b = synthesize_data(synth_truth, synth_region, theta, seed=8)
        assert (a.daily_deaths == b.daily_deaths).all()
        assert (a.cumulative_cases == b.cumulative_cases).all()

    def test_total_deaths_match_intensity_budget(self, synth_truth, theta):
        # with a horizon long past the epidemic, total deaths ~ p * total infections
        region = RegionConfig(
            region_id="LongRun",
            population=1_000_000,
            intervention_date=dt.date(2020, 3, 1),
            ifr=0.01,
            data_end_date=dt.date(2020, 12, 31),
        )
        params = Params(beta=2.5 / 6.4, gamma=1 / 6.4, t0=0.0, phi=1.0, p=0.01)
        deaths = synthesize_data(params, region, theta, seed=13)
        traj = simulate_sir(params, region.population, region.t1_day, region.end_day)
        expected = params.p * traj.cumulative_infections()[-1]
        assert abs(deaths.daily_deaths.sum() - expected) < 5 * np.sqrt(expected)

    def test_undercount_identity(self, synth_truth, synth_region):
        traj = simulate_sir(
            synth_truth, synth_region.population, synth_region.t1_day, synth_region.end_day
        )
        running = np.cumsum(traj.nu)
        boundary = synth_region.population - traj.S
        # infections accumulated through end of day t == N - S at the day t+1 boundary
        assert np.abs(running[:-1] - boundary[1:]).max() <= 1e-6 * synth_region.population


class TestSummaryTables:
    def test_csv_and_text(self, synth_truth, synth_region, synth_deaths, tmp_path):
        row = summarize(constant_chain(synth_truth), synth_region, synth_deaths)
        path = tmp_path / "summary.csv"
        summary_table_csv([row], path)
        lines = path.read_text().strip().splitlines()
        assert lines[0].startswith("region,p,r0_mean")
        assert len(lines) == 2
        text = summary_table_text([row])
        assert "R0" in text and synth_region.region_id in text
