import datetime as dt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from epifit.data import (
    ConfigError,
    CsvParseError,
    DeathSeries,
    EmptyRegionError,
    RegionConfig,
    load_region_config,
    parse_nyt_csv,
    to_nyt_csv,
)

HEADER = "date,state,fips,cases,deaths"


def make_csv(rows):
    return HEADER + "\n" + "\n".join(rows) + "\n"


def wa_rows(cum_deaths, cum_cases=None, start=dt.date(2020, 3, 1), state="Washington"):
    cum_cases = cum_cases if cum_cases is not None else [10 * (i + 1) for i in range(len(cum_deaths))]
    rows = []
    for i, (c, d) in enumerate(zip(cum_cases, cum_deaths)):
        date = (start + dt.timedelta(days=i)).isoformat()
        rows.append(f"{date},{state},53,{c},{d}")
    return rows


class TestParseNytCsv:
    def test_first_differences(self):
        series = parse_nyt_csv(make_csv(wa_rows([0, 0, 1, 3, 3])), "Washington")
        assert series.daily_deaths.tolist() == [0, 0, 1, 2, 0]

    def test_negative_revision_clamped(self):
        series = parse_nyt_csv(make_csv(wa_rows([5, 4, 7])), "Washington")
        assert series.daily_deaths.tolist() == [5, 0, 3]
        assert series.negative_revisions == 1

    def test_single_row(self):
        series = parse_nyt_csv(make_csv(wa_rows([2], cum_cases=[10])), "Washington")
        assert series.daily_deaths.tolist() == [2]
        assert series.cumulative_cases.tolist() == [10]
        assert series.start_date == series.end_date == dt.date(2020, 3, 1)

    def test_malformed_header(self):
        with pytest.raises(CsvParseError, match="header"):
            parse_nyt_csv("date,region,fips,cases,deaths\n", "Washington")

    def test_empty_region(self):
        with pytest.raises(EmptyRegionError, match="Oregon"):
            parse_nyt_csv(make_csv(wa_rows([1, 2])), "Oregon")

    def test_non_numeric_count_names_line(self):
        rows = wa_rows([1, 2])
        rows[1] = rows[1].replace(",2", ",two")
        with pytest.raises(CsvParseError, match="line 3"):
            parse_nyt_csv(make_csv(rows), "Washington")

    def test_bad_date_names_line(self):
        rows = wa_rows([1])
        rows[0] = rows[0].replace("2020-03-01", "03/01/2020")
        with pytest.raises(CsvParseError, match="line 2"):
            parse_nyt_csv(make_csv(rows), "Washington")

    def test_interior_gap_forward_filled(self):
        rows = wa_rows([1, 2, 4])
        del rows[1]  # drop 2020-03-02
        series = parse_nyt_csv(make_csv(rows), "Washington")
        assert series.n_days == 3  # grid stays contiguous
        assert series.daily_deaths.tolist() == [1, 0, 3]

    def test_case_series_monotone_via_running_max(self):
        series = parse_nyt_csv(make_csv(wa_rows([0, 0, 0], cum_cases=[5, 3, 9])), "Washington")
        assert series.cumulative_cases.tolist() == [5, 5, 9]

    def test_region_match_is_exact_and_case_sensitive(self):
        text = make_csv(wa_rows([1]) + wa_rows([7], state="washington"))
        assert parse_nyt_csv(text, "Washington").daily_deaths.tolist() == [1]
        assert parse_nyt_csv(text, "washington").daily_deaths.tolist() == [7]

    def test_other_states_ignored(self):
        text = make_csv(wa_rows([1, 2]) + wa_rows([90, 95], state="New York"))
        series = parse_nyt_csv(text, "Washington")
        assert series.daily_deaths.tolist() == [1, 1]

    @given(
        st.lists(st.integers(min_value=0, max_value=500), min_size=1, max_size=40),
        st.lists(st.integers(min_value=0, max_value=10_000), min_size=1, max_size=40),
    )
    def test_reaccumulation_matches_cleaned_cumulative(self, cum_deaths, cum_cases):
        n = min(len(cum_deaths), len(cum_cases))
        cum_deaths, cum_cases = cum_deaths[:n], cum_cases[:n]
        series = parse_nyt_csv(make_csv(wa_rows(cum_deaths, cum_cases)), "Washington")
        # independently apply the cleaning rule, then accumulate
        cleaned = []
        prev = 0
        for value in cum_deaths:
            cleaned.append(max(0, value - prev))
            prev = value
        assert np.cumsum(series.daily_deaths).tolist() == np.cumsum(cleaned).tolist()
        assert series.n_days == (series.end_date - series.start_date).days + 1
        assert (np.diff(series.cumulative_cases) >= 0).all()

    @given(st.lists(st.integers(min_value=0, max_value=99), min_size=1, max_size=25))
    def test_parsing_deterministic(self, cum_deaths):
        text = make_csv(wa_rows(cum_deaths))
        a = parse_nyt_csv(text, "Washington")
        b = parse_nyt_csv(text, "Washington")
        assert (a.daily_deaths == b.daily_deaths).all()
        assert (a.cumulative_cases == b.cumulative_cases).all()
        assert a.start_date == b.start_date


class TestDeathSeries:
    def test_rejects_negative_deaths(self):
        with pytest.raises(ValueError):
            DeathSeries("X", dt.date(2020, 3, 1), np.array([1, -1]), np.array([1, 2]))

    def test_rejects_decreasing_cases(self):
        with pytest.raises(ValueError):
            DeathSeries("X", dt.date(2020, 3, 1), np.array([1, 1]), np.array([5, 3]))

    def test_day_indexing(self):
        series = DeathSeries("X", dt.date(2020, 3, 1), np.array([0, 1, 0]), np.array([1, 2, 3]))
        assert series.start_day == 60
        assert series.end_day == 62
        assert series.first_death_day() == 61

    def test_truncated(self):
        series = DeathSeries("X", dt.date(2020, 3, 1), np.array([0, 1, 2]), np.array([1, 2, 3]))
        cut = series.truncated(dt.date(2020, 3, 2))
        assert cut.n_days == 2
        assert cut.daily_deaths.tolist() == [0, 1]


class TestRegionConfig:
    def test_loads_full_config(self, tmp_path):
        path = tmp_path / "wa.cfg"
        path.write_text(
            "region_id = Washington\n"
            "population = 7614893\n"
            "intervention_date = 2020-03-16\n"
            "ifr = 0.01\n"
            "data_end_date = 2020-04-17\n"
        )
        region = load_region_config(path)
        assert region.population == 7_614_893
        assert region.intervention_date == dt.date(2020, 3, 16)
        assert region.ifr == 0.01
        assert region.t1_day == 75

    def test_ifr_defaults(self, tmp_path):
        path = tmp_path / "r.cfg"
        path.write_text(
            "region_id = X\npopulation = 1000\n"
            "intervention_date = 2020-03-16\ndata_end_date = 2020-04-17\n"
        )
        assert load_region_config(path).ifr == 0.01

    def test_ifr_out_of_range(self, tmp_path):
        path = tmp_path / "r.cfg"
        path.write_text(
            "region_id = X\npopulation = 1000\nifr = 1.5\n"
            "intervention_date = 2020-03-16\ndata_end_date = 2020-04-17\n"
        )
        with pytest.raises(ConfigError, match="ifr"):
            load_region_config(path)

    def test_missing_key_named(self, tmp_path):
        path = tmp_path / "r.cfg"
        path.write_text("region_id = X\nintervention_date = 2020-03-16\ndata_end_date = 2020-04-17\n")
        with pytest.raises(ConfigError, match="population"):
            load_region_config(path)

    def test_intervention_after_data_end(self):
        with pytest.raises(ConfigError):
            RegionConfig("X", 1000, dt.date(2020, 5, 1), 0.01, dt.date(2020, 4, 17))

    def test_nonpositive_population(self):
        with pytest.raises(ConfigError):
            RegionConfig("X", 0, dt.date(2020, 3, 16), 0.01, dt.date(2020, 4, 17))


class TestNytRoundTrip:
    def test_write_then_parse_recovers_series(self):
        series = DeathSeries(
            "Testonia",
            dt.date(2020, 2, 10),
            np.array([0, 2, 1, 0, 5]),
            np.array([3, 4, 9, 9, 12]),
        )
        text = to_nyt_csv([series], fips={"Testonia": "99"}, start_at_first_case=False)
        back = parse_nyt_csv(text, "Testonia")
        assert back.daily_deaths.tolist() == series.daily_deaths.tolist()
        assert back.cumulative_cases.tolist() == series.cumulative_cases.tolist()
        assert back.start_date == series.start_date
