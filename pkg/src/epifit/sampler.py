"""Adaptive Metropolis sampling of the 4-d parameter vector (beta, gamma, t0, phi).

Proposals are Gaussian random walks. Before ``adapt_start`` iterations the
proposal is diagonal with fixed per-coordinate scales; from then on the
covariance is the running empirical covariance of the whole chain history
scaled by 2.38^2/d, plus a small diagonal regularizer (the classic
adaptive-Metropolis scheme of Haario, Saksman & Tamminen 2001). The
running covariance is maintained with a single-pass Welford update so long
chains stay O(1) per iteration.
"""

import csv
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .data import DeathSeries, RegionConfig
from .likelihood import BETA_MEAN_FACTOR, GAMMA_INV_MEAN, NEG_INF, log_prior
from .sir import Params, T0_HI, T0_LO

N_DIM = 4
SCALING = 2.38**2 / N_DIM  # Haario's s_d for d = 4

CHAIN_CSV_HEADER = ["iteration", "beta", "gamma", "T0", "phi", "log_posterior", "accepted"]


class SamplerInitError(Exception):
    pass


class SamplerError(Exception):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    """Iteration schedule and proposal tuning for one chain."""

    n_iterations: int = 50_000
    adapt_start: int = 10_000
    burn_in: int = 25_000
    initial_step_scales: tuple[float, float, float, float] = (0.05, 0.01, 2.0, 0.05)
    epsilon: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.burn_in < self.n_iterations:
            raise ValueError("burn_in must satisfy 0 < burn_in < n_iterations")
        if not 0 < self.adapt_start < self.n_iterations:
            raise ValueError("adapt_start must satisfy 0 < adapt_start < n_iterations")
        if len(self.initial_step_scales) != N_DIM:
            raise ValueError(f"initial_step_scales must have {N_DIM} entries")
        if any(s <= 0 for s in self.initial_step_scales):
            raise ValueError("initial_step_scales must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def heavy(self) -> "SamplerConfig":
        """Doubled schedule (used for slow-mixing regions)."""
        return replace(
            self,
            n_iterations=2 * self.n_iterations,
            adapt_start=2 * self.adapt_start,
            burn_in=2 * self.burn_in,
        )


@dataclass(frozen=True)
class Chain:
    """Full per-iteration history of one Metropolis run.

    ``history`` has one row per iteration in (beta, gamma, t0, phi) order;
    ``draws`` exposes the post-burn-in rows used for inference.
    """

    history: np.ndarray
    log_posteriors: np.ndarray
    accepted: np.ndarray
    burn_in: int
    p: float
    seed: int

    def __post_init__(self):
        for name in ("history", "log_posteriors", "accepted"):
            getattr(self, name).setflags(write=False)

    @property
    def n_iterations(self) -> int:
        return self.history.shape[0]

    @property
    def draws(self) -> np.ndarray:
        return self.history[self.burn_in :]

    @property
    def draw_log_posteriors(self) -> np.ndarray:
        return self.log_posteriors[self.burn_in :]

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.mean())

    def acceptance_rate_from(self, iteration: int) -> float:
        return float(self.accepted[iteration:].mean())

    def draw_params(self, i: int) -> Params:
        beta, gamma, t0, phi = self.draws[i]
        return Params(beta=beta, gamma=gamma, t0=t0, phi=phi, p=self.p)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CHAIN_CSV_HEADER)
            for it in range(self.n_iterations):
                beta, gamma, t0, phi = self.history[it]
                writer.writerow(
                    [
                        it,
                        repr(float(beta)),
                        repr(float(gamma)),
                        repr(float(t0)),
                        repr(float(phi)),
                        repr(float(self.log_posteriors[it])),
                        int(self.accepted[it]),
                    ]
                )

    @classmethod
    def from_csv(cls, path, burn_in: int, p: float, seed: int = -1) -> "Chain":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CHAIN_CSV_HEADER:
                raise SamplerError(f"{path}: unexpected chain header {header!r}")
            rows = list(reader)
        history = np.array([[float(r[1]), float(r[2]), float(r[3]), float(r[4])] for r in rows])
        log_posts = np.array([float(r[5]) for r in rows])
        accepted = np.array([bool(int(r[6])) for r in rows])
        return cls(history, log_posts, accepted, burn_in=burn_in, p=p, seed=seed)


def run_chain(target: Callable[[Params], float], init: Params, config: SamplerConfig) -> Chain:
    """Sample the target log density, adapting the proposal covariance.

    The target is evaluated exactly once per iteration (on the proposal);
    -inf proposals are always rejected. Fully deterministic for a given
    config seed.
    """
    rng = np.random.default_rng(config.seed)
    x = init.as_vector().astype(np.float64)
    current_lp = target(init)
    if not np.isfinite(current_lp):
        raise SamplerInitError(f"target is not finite at the initial point: {current_lp}")

    n = config.n_iterations
    scales = np.asarray(config.initial_step_scales, dtype=np.float64)
    reg = SCALING * config.epsilon * np.eye(N_DIM)

    history = np.empty((n, N_DIM))
    log_posts = np.empty(n)
    accepted = np.zeros(n, dtype=bool)

    # Welford running moments over the full history (init included).
    mean = x.copy()
    m2 = np.zeros((N_DIM, N_DIM))
    count = 1

    for it in range(n):
        if it < config.adapt_start:
            proposal = x + scales * rng.standard_normal(N_DIM)
        else:
            cov = m2 / (count - 1)
            try:
                chol = np.linalg.cholesky(SCALING * cov + reg)
            except np.linalg.LinAlgError as exc:
                raise SamplerError("proposal covariance is not positive definite") from exc
            proposal = x + chol @ rng.standard_normal(N_DIM)

        candidate = replace(init, beta=proposal[0], gamma=proposal[1], t0=proposal[2], phi=proposal[3])
        proposal_lp = target(candidate)
        log_u = np.log(rng.random())
        if proposal_lp > NEG_INF and log_u < proposal_lp - current_lp:
            x = proposal
            current_lp = proposal_lp
            accepted[it] = True

        history[it] = x
        log_posts[it] = current_lp

        count += 1
        delta = x - mean
        mean += delta / count
        m2 += np.outer(delta, x - mean)

    return Chain(
        history=history,
        log_posteriors=log_posts,
        accepted=accepted,
        burn_in=config.burn_in,
        p=init.p,
        seed=config.seed,
    )


def default_init(region: RegionConfig, deaths: DeathSeries) -> Params:
    """Prior-modal starting point with t0 placed 30 days before the first death."""
    gamma = 1.0 / GAMMA_INV_MEAN
    first = deaths.first_death_day()
    anchor = first if first is not None else deaths.end_day
    t0 = float(np.clip(anchor - 30, T0_LO, T0_HI))
    init = Params(beta=BETA_MEAN_FACTOR * gamma, gamma=gamma, t0=t0, phi=0.5, p=region.ifr)
    assert log_prior(init) > NEG_INF
    return init


def batch_means_se(x: np.ndarray, n_batches: int = 20) -> float:
    """Monte Carlo standard error of the mean via batch means."""
    n = x.size
    if n < 2 * n_batches:
        n_batches = max(2, n // 2)
    batch = n // n_batches
    means = x[: batch * n_batches].reshape(n_batches, batch).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def pool_chains(chains: list[Chain]) -> Chain:
    """Merge post-burn-in draws of independently seeded chains into one Chain.

    Before pooling, chains whose R0 posterior means differ by more than
    twice the combined batch-means standard error trigger a warning (a
    mixing red flag); the draws are still pooled.
    """
    if not chains:
        raise ValueError("no chains to pool")
    if len({c.p for c in chains}) != 1:
        raise ValueError("cannot pool chains with different fixed p")
    r0s = [c.draws[:, 0] / c.draws[:, 1] for c in chains]
    for i in range(len(chains)):
        for j in range(i + 1, len(chains)):
            gap = abs(r0s[i].mean() - r0s[j].mean())
            tol = 2.0 * np.hypot(batch_means_se(r0s[i]), batch_means_se(r0s[j]))
            if gap > tol:
                warnings.warn(
                    f"chains {i} and {j} disagree on R0 mean by {gap:.4f} "
                    f"(> 2 x combined MC SE {tol:.4f}); check convergence",
                    stacklevel=2,
                )
    if len(chains) == 1:
        return chains[0]
    return Chain(
        history=np.vstack([c.draws for c in chains]),
        log_posteriors=np.concatenate([c.draw_log_posteriors for c in chains]),
        accepted=np.concatenate([c.accepted[c.burn_in :] for c in chains]),
        burn_in=0,
        p=chains[0].p,
        seed=chains[0].seed,
    )
