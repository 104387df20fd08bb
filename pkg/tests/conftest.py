import datetime as dt
from pathlib import Path

import hypothesis
import pytest

from epifit.data import RegionConfig
from epifit.delay import build_time_to_death, incubation_default, onset_to_death_default
from epifit.likelihood import make_log_posterior
from epifit.posterior import synthesize_data
from epifit.sampler import SamplerConfig, default_init, run_chain
from epifit.sir import Params

hypothesis.settings.register_profile(
    "epifit", deadline=None, max_examples=hypothesis.settings().max_examples
)
hypothesis.settings.load_profile("epifit")

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"


@pytest.fixture(scope="session")
def theta():
    return build_time_to_death(incubation_default(), onset_to_death_default(), 100_000, seed=0)


@pytest.fixture(scope="session")
def synth_truth():
    gamma = 1.0 / 6.4
    return Params(beta=2.5 * gamma, gamma=gamma, t0=20.0, phi=0.4, p=0.01)


@pytest.fixture(scope="session")
def synth_region(synth_truth):
    t1 = dt.date(2020, 1, 1) + dt.timedelta(days=int(synth_truth.t0) + 60)
    return RegionConfig(
        region_id="Synthetica",
        population=10_000_000,
        intervention_date=t1,
        ifr=synth_truth.p,
        data_end_date=t1 + dt.timedelta(days=45),
    )


@pytest.fixture(scope="session")
def synth_deaths(synth_truth, synth_region, theta):
    return synthesize_data(synth_truth, synth_region, theta, seed=3)


@pytest.fixture(scope="session")
def synth_chain(synth_truth, synth_region, synth_deaths, theta):
    """A moderately long chain on the synthetic fixture, shared across tests."""
    target = make_log_posterior(synth_deaths, theta, synth_region)
    init = default_init(synth_region, synth_deaths)
    config = SamplerConfig(n_iterations=12_000, adapt_start=2_000, burn_in=6_000, seed=11)
    return run_chain(target, init, config)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            if "test_acceptance" in report.nodeid and report.when == "call":
                label = report.nodeid.split("::")[-1]
                lines.append((label, "PASS" if status == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for label, verdict in sorted(lines):
            terminalreporter.write_line(f"[{verdict}] {label}")
