#!/usr/bin/env python3
"""Full multi-state analysis on the bundled snapshot.

Fits every bundled region at the three IFR scenarios, writes chains,
summary tables, undercount series, in-sample bands and SVG plots, then
adds three-week forecasts. With the default schedule this is a few
minutes of compute; pass --quick for a smoke-test schedule.

    python3 scripts/fit_states.py --out runs/states [--quick]

Set EPIFIT_THREADS to fan the (region, p) jobs out over processes.
"""

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from epifit.cli import main as epifit  # noqa: E402

DATA = ROOT / "data"


def run(argv):
    code = epifit([str(a) for a in argv])
    if code != 0:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/states")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quick", action="store_true", help="tiny sampler schedule for smoke tests")
    args = parser.parse_args()

    region_configs = sorted((DATA / "regions").glob("*.cfg"))
    fit_cmd = [
        "fit",
        "--data", DATA / "synthetic_states.csv",
        "--region-config", *region_configs,
        "--seed", args.seed,
        "--svg",
        "--out", args.out,
    ]
    if args.quick:
        fit_cmd += ["--iters", "4000", "--adapt-start", "800", "--burn-in", "2000"]
    run(fit_cmd)
    run(["forecast", "--run", args.out, "--days", "21", "--svg"])
    print(f"\nall outputs in {args.out}/ (summary.txt has the three tables)")


if __name__ == "__main__":
    main()
