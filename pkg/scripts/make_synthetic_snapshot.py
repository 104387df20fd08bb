#!/usr/bin/env python3
"""Regenerate the bundled synthetic state-level snapshot.

The bundled ``data/synthetic_states.csv`` is NOT real surveillance data.
It is produced by this script from the package's own generative model with
the ground-truth parameters below, chosen so that the four synthetic
states span the interesting regimes: a large early epidemic brought under
control (New York), a mid-size controlled epidemic (Washington), and
post-intervention growth that is, respectively, clearly continuing
(California) and marginal (Florida). The truth values are written next to
the CSV so tests can check that fits recover them.

Run from the repository root:

    python3 scripts/make_synthetic_snapshot.py
"""

import datetime as dt
import json
from pathlib import Path

import sys

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from epifit.data import RegionConfig, to_nyt_csv
from epifit.delay import build_time_to_death, incubation_default, onset_to_death_default
from epifit.posterior import synthesize_data
from epifit.sir import Params

DATA_END = dt.date(2020, 4, 17)
DELAY_SEED = 0
CASE_DETECTION = 0.1  # true undercount factor is 10 for every state

FIPS = {"California": "06", "Florida": "12", "New York": "36", "Washington": "53"}

# region_id -> (population, intervention date, truth dict)
STATES = {
    "Washington": (
        7_614_893,
        dt.date(2020, 3, 16),
        {"r0": 1.8, "phi": 0.35, "t0": 5.0, "gamma_inv": 6.4, "seed": 101},
    ),
    "New York": (
        19_453_561,
        dt.date(2020, 3, 18),
        {"r0": 2.5, "phi": 0.38, "t0": 20.0, "gamma_inv": 6.4, "seed": 102},
    ),
    "California": (
        39_512_223,
        dt.date(2020, 3, 19),
        {"r0": 2.3, "phi": 0.58, "t0": 28.0, "gamma_inv": 6.4, "seed": 103},
    ),
    "Florida": (
        21_477_737,
        dt.date(2020, 3, 20),
        {"r0": 2.3, "phi": 0.50, "t0": 35.0, "gamma_inv": 6.4, "seed": 104},
    ),
}


def main() -> None:
    root = Path(__file__).resolve().parent.parent
    data_dir = root / "data"
    regions_dir = data_dir / "regions"
    regions_dir.mkdir(parents=True, exist_ok=True)

    theta = build_time_to_death(
        incubation_default(), onset_to_death_default(), 100_000, seed=DELAY_SEED
    )

    series_list = []
    truth_out = {}
    for region_id, (population, t1, truth) in STATES.items():
        gamma = 1.0 / truth["gamma_inv"]
        params = Params(
            beta=truth["r0"] * gamma, gamma=gamma, t0=truth["t0"], phi=truth["phi"], p=0.01
        )
        region = RegionConfig(
            region_id=region_id,
            population=population,
            intervention_date=t1,
            ifr=0.01,
            data_end_date=DATA_END,
        )
        series = synthesize_data(params, region, theta, seed=truth["seed"], case_detection=CASE_DETECTION)
        series_list.append(series)
        truth_out[region_id] = {
            "population": population,
            "intervention_date": t1.isoformat(),
            "beta": params.beta,
            "gamma": params.gamma,
            "t0": params.t0,
            "phi": params.phi,
            "p": params.p,
            "r0": truth["r0"],
            "undercount": 1.0 / CASE_DETECTION,
            "seed": truth["seed"],
            "total_deaths": int(series.daily_deaths.sum()),
        }
        print(f"{region_id:12s} total deaths {series.daily_deaths.sum():6d}  "
              f"cases at end {series.cumulative_cases[-1]:8d}")

        config_path = regions_dir / f"{region_id.lower().replace(' ', '_')}.cfg"
        config_path.write_text(
            f"region_id = {region_id}\n"
            f"population = {population}\n"
            f"intervention_date = {t1.isoformat()}\n"
            f"ifr = 0.01\n"
            f"data_end_date = {DATA_END.isoformat()}\n"
        )

    csv_text = to_nyt_csv(series_list, fips=FIPS, start_at_first_case=True)
    (data_dir / "synthetic_states.csv").write_text(csv_text)
    (data_dir / "synthetic_truth.json").write_text(json.dumps(truth_out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {data_dir / 'synthetic_states.csv'}")


if __name__ == "__main__":
    main()
