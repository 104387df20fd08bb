"""Command-line pipeline: fit, forecast, simulate, summarize.

Every run writes a ``manifest.json`` capturing the data hash, all seeds,
the sampler schedule, and the delay-distribution settings, so any output
directory can be reproduced bit-for-bit with ``--from-manifest``. All
randomness flows from CLI-provided seeds.
"""

import argparse
import datetime as dt
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .data import ConfigError, DataError, DeathSeries, RegionConfig, load_region_config, parse_nyt_csv, to_nyt_csv
from .dates import date_of
from .delay import (
    DEFAULT_N_SAMPLES,
    DelayDistribution,
    PoissonGammaParams,
    build_time_to_death,
    incubation_default,
    onset_to_death_default,
)
from .posterior import (
    PredictiveBand,
    SummaryRow,
    predictive_band,
    summarize,
    summary_table_csv,
    summary_table_text,
    synthesize_data,
    undercount_series,
)
from .sampler import Chain, SamplerConfig, SamplerInitError, default_init, pool_chains, run_chain
from .likelihood import make_log_posterior
from .sir import Params, in_prior_support, simulate_sir

DEFAULT_P_SCENARIOS = (0.005, 0.01, 0.015)
DEFAULT_FORECAST_DAYS = 21
PREDICTIVE_SEED_OFFSET = 777_000


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def atomic_emit(path: Path, write_fn) -> None:
    """Run a writer against a temp file, then rename into place."""
    tmp = path.with_name(path.name + ".tmp")
    write_fn(tmp)
    os.replace(tmp, path)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def slug(region_id: str) -> str:
    return region_id.replace(" ", "_")


def n_workers(n_jobs: int) -> int:
    env = os.environ.get("EPIFIT_THREADS", "1")
    try:
        cap = max(1, int(env))
    except ValueError:
        cap = 1
    return min(cap, n_jobs)


# ---------------------------------------------------------------------------
# manifest plumbing


def region_to_manifest(region: RegionConfig) -> dict:
    return {
        "region_id": region.region_id,
        "population": region.population,
        "intervention_date": region.intervention_date.isoformat(),
        "ifr": region.ifr,
        "data_end_date": region.data_end_date.isoformat(),
    }


def region_from_manifest(entry: dict, p: float | None = None) -> RegionConfig:
    return RegionConfig(
        region_id=entry["region_id"],
        population=entry["population"],
        intervention_date=dt.date.fromisoformat(entry["intervention_date"]),
        ifr=p if p is not None else entry["ifr"],
        data_end_date=dt.date.fromisoformat(entry["data_end_date"]),
    )


def delay_to_manifest(inc: PoissonGammaParams, otd: PoissonGammaParams, n_samples: int, seed: int) -> dict:
    return {
        "incubation_alpha": inc.alpha,
        "incubation_beta": inc.beta,
        "onset_to_death_alpha": otd.alpha,
        "onset_to_death_beta": otd.beta,
        "n_samples": n_samples,
        "seed": seed,
    }


def delay_from_manifest(entry: dict) -> DelayDistribution:
    return build_time_to_death(
        PoissonGammaParams(entry["incubation_alpha"], entry["incubation_beta"]),
        PoissonGammaParams(entry["onset_to_death_alpha"], entry["onset_to_death_beta"]),
        entry["n_samples"],
        entry["seed"],
    )


def write_manifest(out_dir: Path, manifest: dict, name: str = "manifest.json") -> None:
    atomic_write_text(out_dir / name, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# fit


@dataclass
class FitJob:
    """One (region, p) unit of work, fully seeded and self-describing."""

    region: RegionConfig
    p: float
    deaths: DeathSeries
    theta: DelayDistribution
    sampler: SamplerConfig
    chain_seeds: list[int]
    predictive_seed: int
    out_dir: str
    svg: bool

    def chain_file(self, k: int) -> str:
        return f"chains/{slug(self.region.region_id)}_p{self.p:g}_c{k}.csv"


def run_fit_job(job: FitJob) -> SummaryRow:
    out = Path(job.out_dir)
    region = RegionConfig(
        region_id=job.region.region_id,
        population=job.region.population,
        intervention_date=job.region.intervention_date,
        ifr=job.p,
        data_end_date=job.region.data_end_date,
    )
    deaths = job.deaths.truncated(region.data_end_date)
    target = make_log_posterior(deaths, job.theta, region)
    init = default_init(region, deaths)

    chains = []
    for k, seed in enumerate(job.chain_seeds):
        chain = run_chain(target, init, SamplerConfig(
            n_iterations=job.sampler.n_iterations,
            adapt_start=job.sampler.adapt_start,
            burn_in=job.sampler.burn_in,
            initial_step_scales=job.sampler.initial_step_scales,
            epsilon=job.sampler.epsilon,
            seed=seed,
        ))
        atomic_emit(out / job.chain_file(k), chain.to_csv)
        chains.append(chain)
    pooled = pool_chains(chains)

    tag = f"{slug(region.region_id)}_p{job.p:g}"
    row = summarize(pooled, region, deaths)
    ucs = undercount_series(pooled, deaths, region)
    atomic_emit(out / f"undercount_{tag}.csv", ucs.to_csv)
    band = predictive_band(pooled, job.theta, region, 0, seed=job.predictive_seed)
    atomic_emit(out / f"band_{tag}.csv", band.to_csv)
    if job.svg:
        write_band_svg(out / f"band_{tag}.svg", band, deaths, f"{region.region_id} daily deaths, p={job.p:g}")
        if ucs.days.size:
            from .svg import write_plot_svg

            write_plot_svg(
                out / f"undercount_{tag}.svg",
                ucs.days,
                {"mean undercount": (ucs.mean, "#1f4e8c")},
                band=(ucs.lower, ucs.upper),
                title=f"{region.region_id} undercount factor, p={job.p:g}",
                ylabel="undercount",
            )
    return row


def write_band_svg(path, band: PredictiveBand, deaths: DeathSeries | None, title: str) -> None:
    from .svg import write_plot_svg

    series = {"median predicted deaths": (band.median, "#1f4e8c")}
    if deaths is not None:
        observed = np.zeros(band.days.size)
        lo = deaths.start_day
        hi = min(deaths.end_day, int(band.days[-1]))
        observed[lo : hi + 1] = deaths.daily_deaths[: hi - lo + 1]
        series["observed deaths"] = (observed, "#000000")
    write_plot_svg(path, band.days, series, band=(band.lower, band.upper), title=title, ylabel="deaths/day")


def build_fit_manifest(args, regions, data_sha: str) -> dict:
    sampler = {
        "n_iterations": args.iters,
        "adapt_start": args.adapt_start,
        "burn_in": args.burn_in,
        "initial_step_scales": list(SamplerConfig().initial_step_scales),
        "epsilon": SamplerConfig().epsilon,
    }
    jobs = []
    job_index = 0
    for region in sorted(regions, key=lambda r: r.region_id):
        for p in args.p:
            jobs.append(
                {
                    "region_id": region.region_id,
                    "p": p,
                    "chain_seeds": [args.seed + 1000 * job_index + k for k in range(args.chains)],
                    "predictive_seed": args.seed + PREDICTIVE_SEED_OFFSET + job_index,
                }
            )
            job_index += 1
    return {
        "tool": "epifit",
        "version": __version__,
        "command": "fit",
        "data": {"path": str(args.data), "sha256": data_sha},
        "regions": [region_to_manifest(r) for r in sorted(regions, key=lambda r: r.region_id)],
        "p_scenarios": list(args.p),
        "sampler": sampler,
        "chains_per_job": args.chains,
        "base_seed": args.seed,
        "jobs": jobs,
        "delay": delay_to_manifest(args.incubation, args.onset_to_death, args.delay_samples, args.delay_seed),
        "svg": bool(args.svg),
    }


def cmd_fit(args) -> int:
    if args.from_manifest:
        manifest = load_manifest(args.from_manifest)
        if manifest.get("command") != "fit":
            raise ConfigError(f"{args.from_manifest} is not a fit manifest")
        return fit_from_manifest(manifest, Path(args.out), data_override=args.data)

    if not args.data or not args.region_config:
        raise ConfigError("fit requires --data and --region-config (or --from-manifest)")
    for p in args.p:
        if not 0.0 < p < 1.0:
            raise ConfigError(f"IFR scenario p={p} outside (0, 1)")
    if args.iters <= 0:
        raise ConfigError("--iters must be positive")

    regions = [load_region_config(path) for path in args.region_config]
    if args.heavy:
        args.iters, args.adapt_start, args.burn_in = 2 * args.iters, 2 * args.adapt_start, 2 * args.burn_in
    args.incubation = incubation_default()
    args.onset_to_death = onset_to_death_default()
    data_sha = sha256_file(args.data)
    manifest = build_fit_manifest(args, regions, data_sha)
    return fit_from_manifest(manifest, Path(args.out))


def fit_from_manifest(manifest: dict, out: Path, data_override=None) -> int:
    data_path = data_override or manifest["data"]["path"]
    raw_bytes = Path(data_path).read_bytes()
    raw_text = raw_bytes.decode("utf-8")
    sha = hashlib.sha256(raw_bytes).hexdigest()
    if data_override is None and sha != manifest["data"]["sha256"]:
        raise DataError(
            f"data file {data_path} hash {sha[:12]}... does not match manifest"
        )
    manifest = dict(manifest)
    manifest["data"] = {"path": str(data_path), "sha256": sha}

    regions = {entry["region_id"]: entry for entry in manifest["regions"]}
    theta = delay_from_manifest(manifest["delay"])
    sampler = SamplerConfig(
        n_iterations=manifest["sampler"]["n_iterations"],
        adapt_start=manifest["sampler"]["adapt_start"],
        burn_in=manifest["sampler"]["burn_in"],
        initial_step_scales=tuple(manifest["sampler"]["initial_step_scales"]),
        epsilon=manifest["sampler"]["epsilon"],
    )

    out.mkdir(parents=True, exist_ok=True)
    (out / "chains").mkdir(exist_ok=True)
    atomic_emit(out / "theta.csv", theta.to_csv)

    jobs = []
    for entry in manifest["jobs"]:
        region = region_from_manifest(regions[entry["region_id"]])
        deaths = parse_nyt_csv(raw_text, region.region_id)
        jobs.append(
            FitJob(
                region=region,
                p=entry["p"],
                deaths=deaths,
                theta=theta,
                sampler=sampler,
                chain_seeds=entry["chain_seeds"],
                predictive_seed=entry["predictive_seed"],
                out_dir=str(out),
                svg=manifest.get("svg", False),
            )
        )

    workers = n_workers(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_fit_job, jobs))
    else:
        rows = [run_fit_job(job) for job in jobs]

    atomic_emit(out / "summary.csv", lambda path: summary_table_csv(rows, path))
    atomic_write_text(out / "summary.txt", summary_table_text(rows))
    write_manifest(out, manifest)
    print(f"fit complete: {len(jobs)} (region, p) jobs -> {out}")
    print(summary_table_text(rows))
    return 0


# ---------------------------------------------------------------------------
# forecast


def load_run(run_dir: Path):
    manifest = load_manifest(run_dir / "manifest.json")
    theta = delay_from_manifest(manifest["delay"])
    burn_in = manifest["sampler"]["burn_in"]
    loaded = []
    for entry in manifest["jobs"]:
        region_entry = next(r for r in manifest["regions"] if r["region_id"] == entry["region_id"])
        region = region_from_manifest(region_entry, p=entry["p"])
        chains = []
        for k, seed in enumerate(entry["chain_seeds"]):
            path = run_dir / f"chains/{slug(region.region_id)}_p{entry['p']:g}_c{k}.csv"
            if not path.exists():
                raise DataError(f"missing chain file {path}")
            chains.append(Chain.from_csv(path, burn_in=burn_in, p=entry["p"], seed=seed))
        loaded.append((region, entry, pool_chains(chains)))
    return manifest, theta, loaded


def cmd_forecast(args) -> int:
    if args.from_manifest:
        fm = load_manifest(args.from_manifest)
        if fm.get("command") != "forecast":
            raise ConfigError(f"{args.from_manifest} is not a forecast manifest")
        args.run = Path(fm["run_dir"])
        args.days = fm["forecast_days"]
        args.svg = fm.get("svg", False)

    if args.run is None:
        raise ConfigError("forecast requires --run (or --from-manifest)")
    if args.days > 60:
        raise ConfigError(f"--days {args.days} exceeds the 60-day forecast cap")
    if args.days < 0:
        raise ConfigError("--days must be non-negative")

    run_dir = Path(args.run)
    manifest, theta, loaded = load_run(run_dir)
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)

    deaths_cache: dict[str, DeathSeries] = {}
    data_path = Path(manifest["data"]["path"])
    raw_text = data_path.read_text() if data_path.exists() else None

    for region, entry, chain in loaded:
        band = predictive_band(chain, theta, region, args.days, seed=entry["predictive_seed"] + 1)
        tag = f"{slug(region.region_id)}_p{entry['p']:g}"
        atomic_emit(out / f"forecast_{tag}.csv", band.to_csv)
        if args.svg:
            deaths = None
            if raw_text is not None:
                if region.region_id not in deaths_cache:
                    deaths_cache[region.region_id] = parse_nyt_csv(raw_text, region.region_id)
                deaths = deaths_cache[region.region_id]
            write_band_svg(
                out / f"forecast_{tag}.svg",
                band,
                deaths,
                f"{region.region_id} deaths with {args.days}-day forecast, p={entry['p']:g}",
            )

    write_manifest(
        out,
        {
            "tool": "epifit",
            "version": __version__,
            "command": "forecast",
            "run_dir": str(run_dir),
            "forecast_days": args.days,
            "svg": bool(args.svg),
        },
        name="forecast_manifest.json",
    )
    print(f"forecast complete: {args.days} days past data end -> {out}")
    return 0


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    if args.from_manifest:
        sm = load_manifest(args.from_manifest)
        if sm.get("command") != "simulate":
            raise ConfigError(f"{args.from_manifest} is not a simulate manifest")
        ns = argparse.Namespace(**sm["args"])
        ns.out = args.out
        ns.from_manifest = None
        return cmd_simulate(ns)

    for name in ("beta", "gamma", "phi", "population", "t1"):
        if getattr(args, name) is None:
            raise ConfigError(f"simulate requires --{name}")
    params = Params(beta=args.beta, gamma=args.gamma, t0=args.T0, phi=args.phi, p=args.p)
    if not in_prior_support(params):
        raise ConfigError(
            "parameters outside prior support: need 1/gamma in [3.4, 9.4], "
            "beta/gamma in [1, 4], T0 in [0, 50], phi in (0.01, 0.99)"
        )
    t1 = dt.date.fromisoformat(args.t1)
    end_date = dt.date.fromisoformat(args.end_date) if args.end_date else t1 + dt.timedelta(days=60)
    region = RegionConfig(
        region_id=args.region_id,
        population=args.population,
        intervention_date=t1,
        ifr=args.p if 0 < args.p < 1 else 0.01,
        data_end_date=end_date,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    series = synthesize_data(params, region, _theta_from_args(args), seed=args.seed)
    traj = simulate_sir(params, region.population, region.t1_day, region.end_day)

    atomic_emit(out / "trajectory.csv", traj.to_csv)
    atomic_write_text(out / "synthetic_nyt.csv", to_nyt_csv([series], start_at_first_case=False))
    lines = ["day,date,deaths"]
    for k in range(series.n_days):
        lines.append(f"{series.start_day + k},{date_of(series.start_day + k).isoformat()},{series.daily_deaths[k]}")
    atomic_write_text(out / "deaths_daily.csv", "\n".join(lines) + "\n")
    if args.svg:
        from .svg import write_plot_svg

        write_plot_svg(
            out / "trajectory.svg",
            traj.days,
            {
                "S": (traj.S, "#1f4e8c"),
                "I": (traj.I, "#b22222"),
                "R": (traj.R, "#2e7d32"),
            },
            title=f"{args.region_id}: SIR trajectory",
            ylabel="people",
        )
        write_plot_svg(
            out / "deaths_daily.svg",
            np.arange(series.n_days),
            {"daily deaths": (series.daily_deaths, "#000000"), "new infections/100": (traj.nu / 100.0, "#b22222")},
            title=f"{args.region_id}: synthetic daily deaths",
            ylabel="deaths/day",
        )

    write_manifest(
        out,
        {
            "tool": "epifit",
            "version": __version__,
            "command": "simulate",
            "args": {
                "beta": args.beta,
                "gamma": args.gamma,
                "T0": args.T0,
                "phi": args.phi,
                "p": args.p,
                "population": args.population,
                "t1": args.t1,
                "end_date": end_date.isoformat(),
                "region_id": args.region_id,
                "seed": args.seed,
                "delay_seed": args.delay_seed,
                "delay_samples": args.delay_samples,
                "svg": bool(args.svg),
            },
        },
    )
    print(f"simulate complete -> {out}")
    return 0


def _theta_from_args(args) -> DelayDistribution:
    return build_time_to_death(
        incubation_default(), onset_to_death_default(), args.delay_samples, args.delay_seed
    )


# ---------------------------------------------------------------------------
# summarize


def cmd_summarize(args) -> int:
    run_dir = Path(args.run)
    manifest, theta, loaded = load_run(run_dir)
    data_path = Path(manifest["data"]["path"])
    if not data_path.exists():
        raise DataError(f"data file {data_path} from the manifest is missing")
    raw_text = data_path.read_text()

    rows = []
    for region, entry, chain in loaded:
        deaths = parse_nyt_csv(raw_text, region.region_id).truncated(region.data_end_date)
        rows.append(summarize(chain, region, deaths))
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    atomic_emit(out / "summary.csv", lambda path: summary_table_csv(rows, path))
    atomic_write_text(out / "summary.txt", summary_table_text(rows))
    print(summary_table_text(rows))
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epifit",
        description="Bayesian change-point SIR fitting of daily COVID-19 death counts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit chains for one or more regions")
    fit.add_argument("--data", help="NYT-format cumulative CSV")
    fit.add_argument("--region-config", nargs="+", default=[], help="region config file(s)")
    fit.add_argument("--p", nargs="+", type=float, default=list(DEFAULT_P_SCENARIOS),
                     help="IFR scenarios (default: 0.005 0.01 0.015)")
    fit.add_argument("--iters", type=int, default=SamplerConfig().n_iterations)
    fit.add_argument("--adapt-start", type=int, default=SamplerConfig().adapt_start)
    fit.add_argument("--burn-in", type=int, default=SamplerConfig().burn_in)
    fit.add_argument("--heavy", action="store_true", help="double the iteration schedule")
    fit.add_argument("--chains", type=int, default=1, help="independent chains per (region, p)")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--delay-seed", type=int, default=0)
    fit.add_argument("--delay-samples", type=int, default=DEFAULT_N_SAMPLES)
    fit.add_argument("--svg", action="store_true", help="also write SVG plots")
    fit.add_argument("--from-manifest", default=None, help="re-run a stored fit manifest")
    fit.add_argument("--out", required=True, help="output directory")
    fit.set_defaults(func=cmd_fit)

    forecast = sub.add_parser("forecast", help="project deaths past the data end")
    forecast.add_argument("--run", help="directory produced by fit")
    forecast.add_argument("--days", type=int, default=DEFAULT_FORECAST_DAYS)
    forecast.add_argument("--svg", action="store_true")
    forecast.add_argument("--from-manifest", default=None, help="re-run a stored forecast manifest")
    forecast.add_argument("--out", default=None, help="output directory (default: run dir)")
    forecast.set_defaults(func=cmd_forecast)

    simulate = sub.add_parser("simulate", help="generate a synthetic dataset from known parameters")
    simulate.add_argument("--beta", type=float)
    simulate.add_argument("--gamma", type=float)
    simulate.add_argument("--T0", type=float, default=20.0)
    simulate.add_argument("--phi", type=float)
    simulate.add_argument("--p", type=float, default=0.01)
    simulate.add_argument("--population", type=int)
    simulate.add_argument("--t1", help="intervention date YYYY-MM-DD")
    simulate.add_argument("--end-date", default=None, help="last simulated day (default: t1 + 60d)")
    simulate.add_argument("--region-id", default="Synthetic")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--delay-seed", type=int, default=0)
    simulate.add_argument("--delay-samples", type=int, default=DEFAULT_N_SAMPLES)
    simulate.add_argument("--svg", action="store_true")
    simulate.add_argument("--from-manifest", default=None, help="re-run a stored simulate manifest")
    simulate.add_argument("--out", required=True)
    simulate.set_defaults(func=cmd_simulate)

    summ = sub.add_parser("summarize", help="re-render summary tables from stored chains")
    summ.add_argument("--run", required=True)
    summ.add_argument("--out", default=None)
    summ.set_defaults(func=cmd_summarize)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SamplerInitError as exc:
        print(f"error: sampler initialization failed: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
