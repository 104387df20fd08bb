"""Ingestion of NYT-format cumulative case/death CSVs and region configs.

The CSV format is the state-level layout published by the New York Times
(header ``date,state,fips,cases,deaths``, one row per state per day,
cumulative counts). Parsing turns one state's rows into a contiguous daily
grid of death increments plus a cleaned cumulative case series.

Cleaning rules:
  * interior missing dates are forward-filled at the cumulative level,
  * negative day-over-day death revisions are clamped to zero (a Poisson
    observation model cannot take negative counts); the number of clamped
    days is kept on the series as metadata,
  * cumulative cases are made monotone with a running maximum.
"""

import csv
import datetime as dt
import io
from dataclasses import dataclass

import numpy as np

from .dates import day_of

NYT_HEADER = ["date", "state", "fips", "cases", "deaths"]


class DataError(Exception):
    """Base class for ingestion failures."""


class CsvParseError(DataError):
    pass


class EmptyRegionError(DataError):
    pass


class ConfigError(DataError):
    pass


@dataclass(frozen=True)
class DeathSeries:
    """Daily death increments and cumulative confirmed cases for one region.

    The day grid is contiguous from ``start_date``; ``daily_deaths[i]`` and
    ``cumulative_cases[i]`` both refer to ``start_date + i`` days.
    """

    region_id: str
    start_date: dt.date
    daily_deaths: np.ndarray
    cumulative_cases: np.ndarray
    negative_revisions: int = 0  # days on which a negative revision was clamped

    def __post_init__(self):
        deaths = np.asarray(self.daily_deaths, dtype=np.int64)
        cases = np.asarray(self.cumulative_cases, dtype=np.int64)
        if deaths.shape != cases.shape or deaths.ndim != 1:
            raise ValueError("daily_deaths and cumulative_cases must be 1-d and equal length")
        if deaths.size == 0:
            raise ValueError("empty series")
        if (deaths < 0).any():
            raise ValueError("daily_deaths must be non-negative")
        if (np.diff(cases) < 0).any():
            raise ValueError("cumulative_cases must be non-decreasing")
        deaths.setflags(write=False)
        cases.setflags(write=False)
        object.__setattr__(self, "daily_deaths", deaths)
        object.__setattr__(self, "cumulative_cases", cases)

    @property
    def n_days(self) -> int:
        return self.daily_deaths.size

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=self.n_days - 1)

    @property
    def start_day(self) -> int:
        return day_of(self.start_date)

    @property
    def end_day(self) -> int:
        return self.start_day + self.n_days - 1

    @property
    def days(self) -> np.ndarray:
        """Absolute day indices for each grid point."""
        return np.arange(self.start_day, self.start_day + self.n_days)

    def first_death_day(self) -> int | None:
        """Absolute day index of the first observed death, or None."""
        nz = np.nonzero(self.daily_deaths)[0]
        if nz.size == 0:
            return None
        return self.start_day + int(nz[0])

    def truncated(self, end_date: dt.date) -> "DeathSeries":
        """Series restricted to days <= end_date."""
        if end_date < self.start_date:
            raise ValueError("end_date before series start")
        keep = min((end_date - self.start_date).days + 1, self.n_days)
        return DeathSeries(
            self.region_id,
            self.start_date,
            self.daily_deaths[:keep],
            self.cumulative_cases[:keep],
            self.negative_revisions,
        )


@dataclass(frozen=True)
class RegionConfig:
    """Fixed per-region inputs of a fit: population, intervention date, IFR."""

    region_id: str
    population: int
    intervention_date: dt.date
    ifr: float
    data_end_date: dt.date

    def __post_init__(self):
        if self.population <= 0:
            raise ConfigError(f"population must be positive, got {self.population}")
        if not 0.0 < self.ifr < 1.0:
            raise ConfigError(f"ifr must be in (0, 1), got {self.ifr}")
        if self.intervention_date > self.data_end_date:
            raise ConfigError("intervention_date must be within or before the data range")

    @property
    def t1_day(self) -> int:
        return day_of(self.intervention_date)

    @property
    def end_day(self) -> int:
        return day_of(self.data_end_date)


def parse_nyt_csv(raw_text: str, region_id: str) -> DeathSeries:
    """Parse NYT-format cumulative counts into a daily series for one state.

    Region matching is an exact, case-sensitive match on the ``state``
    column. Interior missing dates are forward-filled at the cumulative
    level before differencing; negative death revisions are clamped to 0.
    """
    reader = csv.reader(io.StringIO(raw_text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvParseError("empty input") from None
    if [h.strip() for h in header] != NYT_HEADER:
        raise CsvParseError(
            f"malformed header: expected {','.join(NYT_HEADER)!r}, got {','.join(header)!r}"
        )

    by_date: dict[dt.date, tuple[int, int]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 5:
            raise CsvParseError(f"line {lineno}: expected 5 fields, got {len(row)}")
        if row[1] != region_id:
            continue
        try:
            date = dt.date.fromisoformat(row[0])
        except ValueError:
            raise CsvParseError(f"line {lineno}: bad date {row[0]!r}") from None
        try:
            cases = int(row[3])
            deaths = int(row[4])
        except ValueError:
            raise CsvParseError(f"line {lineno}: non-numeric count field") from None
        by_date[date] = (cases, deaths)

    if not by_date:
        raise EmptyRegionError(f"no rows for region {region_id!r}")

    start = min(by_date)
    end = max(by_date)
    n = (end - start).days + 1
    cum_cases = np.empty(n, dtype=np.int64)
    cum_deaths = np.empty(n, dtype=np.int64)
    prev = (0, 0)
    for i in range(n):
        date = start + dt.timedelta(days=i)
        prev = by_date.get(date, prev)  # forward-fill interior gaps
        cum_cases[i], cum_deaths[i] = prev

    diffs = np.diff(cum_deaths, prepend=0)
    negative_revisions = int((diffs < 0).sum())
    daily_deaths = np.maximum(diffs, 0)
    cumulative_cases = np.maximum.accumulate(cum_cases)

    return DeathSeries(region_id, start, daily_deaths, cumulative_cases, negative_revisions)


def to_nyt_csv(series_list: list[DeathSeries], fips: dict[str, str] | None = None,
               start_at_first_case: bool = True) -> str:
    """Render death series back into the NYT cumulative CSV layout.

    Rows are sorted by (date, state). With ``start_at_first_case`` each
    region's rows begin on the first day with a confirmed case, matching
    how the source data enters states.
    """
    fips = fips or {}
    rows = []
    for series in series_list:
        cum_deaths = np.cumsum(series.daily_deaths)
        first = 0
        if start_at_first_case:
            nz = np.nonzero(series.cumulative_cases)[0]
            if nz.size == 0:
                continue
            first = int(nz[0])
        for i in range(first, series.n_days):
            date = series.start_date + dt.timedelta(days=i)
            rows.append(
                (
                    date.isoformat(),
                    series.region_id,
                    fips.get(series.region_id, ""),
                    int(series.cumulative_cases[i]),
                    int(cum_deaths[i]),
                )
            )
    rows.sort(key=lambda r: (r[0], r[1]))
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(NYT_HEADER)
    writer.writerows(rows)
    return out.getvalue()


_REQUIRED_KEYS = ("region_id", "population", "intervention_date", "data_end_date")


def load_region_config(path) -> RegionConfig:
    """Load a flat ``key = value`` region config file.

    Required keys: region_id, population, intervention_date, data_end_date.
    Optional: ifr (defaults to 0.01). Blank lines and ``#`` comments are
    ignored.
    """
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()

    for key in _REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"{path}: missing required key {key!r}")

    try:
        population = int(values["population"].replace(",", ""))
    except ValueError:
        raise ConfigError(f"{path}: population must be an integer") from None
    try:
        intervention_date = dt.date.fromisoformat(values["intervention_date"])
        data_end_date = dt.date.fromisoformat(values["data_end_date"])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        ifr = float(values.get("ifr", "0.01"))
    except ValueError:
        raise ConfigError(f"{path}: ifr must be a number") from None

    return RegionConfig(
        region_id=values["region_id"],
        population=population,
        intervention_date=intervention_date,
        ifr=ifr,
        data_end_date=data_end_date,
    )
