"""Change-point SIR dynamics and daily new-infection extraction.

The transmission coefficient is beta before the intervention day T1 and
phi*beta from T1 on; the removal rate gamma is unchanged. Integration is
fixed-step 4th-order Runge-Kutta at 0.1 day, starting from the exact
real-valued epidemic start time T0 with one initial infection, recording
state at integer day boundaries. New infections nu_t on day t are the drop
in S between consecutive recorded days (the only way to leave S).
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

RK4_STEP = 0.1

# Prior support for the sampled parameters.
GAMMA_INV_LO, GAMMA_INV_HI = 3.4, 9.4
BETA_OVER_GAMMA_LO, BETA_OVER_GAMMA_HI = 1.0, 4.0
T0_LO, T0_HI = 0.0, 50.0
PHI_LO, PHI_HI = 0.01, 0.99


class IntegrationError(Exception):
    pass


@dataclass(frozen=True)
class Params:
    """One point in parameter space: sampled (beta, gamma, t0, phi) plus fixed IFR p.

    The sampled fields are deliberately unconstrained so that arbitrary
    proposals can be scored; support is enforced by the prior, which is
    -inf outside it.
    """

    beta: float
    gamma: float
    t0: float
    phi: float
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must be in [0, 1), got {self.p}")

    def as_vector(self) -> np.ndarray:
        return np.array([self.beta, self.gamma, self.t0, self.phi])


def in_prior_support(params: Params) -> bool:
    ginv = 1.0 / params.gamma
    return (
        GAMMA_INV_LO <= ginv <= GAMMA_INV_HI
        and BETA_OVER_GAMMA_LO * params.gamma <= params.beta <= BETA_OVER_GAMMA_HI * params.gamma
        and T0_LO <= params.t0 <= T0_HI
        and PHI_LO < params.phi < PHI_HI
    )


def r0(params: Params) -> float:
    """Basic reproduction number beta/gamma."""
    return params.beta / params.gamma


def effective_rt(params: Params, s_t: float, n_pop: float) -> float:
    """Post-intervention effective reproduction number phi*beta*S_t / (N*gamma)."""
    return params.phi * params.beta * s_t / (n_pop * params.gamma)


@dataclass(frozen=True)
class Trajectory:
    """Daily S/I/R states and new infections on the integer day grid 0..horizon."""

    days: np.ndarray
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        for name in ("days", "S", "I", "R", "nu"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def n_pop(self) -> float:
        return float(self.S[0] + self.I[0] + self.R[0])

    def s_at(self, day: int) -> float:
        """Susceptible count at an absolute day index."""
        idx = day - int(self.days[0])
        if not 0 <= idx < self.days.size:
            raise IndexError(f"day {day} outside trajectory grid")
        return float(self.S[idx])

    def cumulative_infections(self) -> np.ndarray:
        """New infections accumulated through the end of each day (sum of nu).

        Equals N - S at the next day boundary, up to the seed infection and
        any sub-day infections before ceil(t0).
        """
        return np.cumsum(self.nu)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["day", "S", "I", "R", "nu"])
            for k in range(self.days.size):
                writer.writerow(
                    [
                        int(self.days[k]),
                        repr(float(self.S[k])),
                        repr(float(self.I[k])),
                        repr(float(self.R[k])),
                        repr(float(self.nu[k])),
                    ]
                )


@njit(cache=True, inline="always")
def _rk4_step(s, i, b, gamma, n_pop, h):
    k1s = -b * s * i / n_pop
    k1i = -k1s - gamma * i
    s2 = s + 0.5 * h * k1s
    i2 = i + 0.5 * h * k1i
    k2s = -b * s2 * i2 / n_pop
    k2i = -k2s - gamma * i2
    s3 = s + 0.5 * h * k2s
    i3 = i + 0.5 * h * k2i
    k3s = -b * s3 * i3 / n_pop
    k3i = -k3s - gamma * i3
    s4 = s + h * k3s
    i4 = i + h * k3i
    k4s = -b * s4 * i4 / n_pop
    k4i = -k4s - gamma * i4
    s_new = s + h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    i_new = i + h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
    return s_new, i_new


@njit(cache=True)
def _integrate(beta, gamma, phi, n_pop, t0, t1, d0, n_rec, step, seed_infected):
    """States at integer days d0, ..., d0+n_rec-1, starting from S=N-I0, I=I0 at t0.

    The transmission coefficient for each RK4 step is chosen by the step's
    start time: beta before t1, phi*beta from t1 on. R is recovered from
    conservation (the stage increments cancel exactly).
    """
    S = np.empty(n_rec)
    I = np.empty(n_rec)
    s = n_pop - seed_infected
    i = seed_infected
    delta = d0 - t0
    if delta > 0.0:
        n_sub = int(math.ceil(delta / step - 1e-12))
        h = delta / n_sub
        for k in range(n_sub):
            tt = t0 + k * h
            b = beta if tt < t1 else phi * beta
            s, i = _rk4_step(s, i, b, gamma, n_pop, h)
    S[0] = s
    I[0] = i
    per_day = int(round(1.0 / step))
    for d in range(1, n_rec):
        day = d0 + (d - 1)
        for k in range(per_day):
            tt = day + step * k
            b = beta if tt < t1 else phi * beta
            s, i = _rk4_step(s, i, b, gamma, n_pop, step)
        S[d] = s
        I[d] = i
    return S, I


def simulate_sir(
    params: Params,
    n_pop: float,
    t1: float,
    horizon: int,
    step: float = RK4_STEP,
    initial_infected: float = 1.0,
) -> Trajectory:
    """Integrate the change-point SIR model and extract daily new infections.

    Returns a trajectory on integer days 0..horizon. Days before
    ceil(t0) carry the initial state (S=N-1, I=1, R=0) and nu=0; from
    ceil(t0) on, nu_t = S_t - S_{t+1} (integration runs one day past the
    horizon to supply the final difference). ``initial_infected`` exists
    for equilibrium tests only; the model proper seeds one infection.
    """
    if horizon < params.t0:
        raise IntegrationError(f"horizon {horizon} precedes epidemic start t0={params.t0}")
    if params.t0 < 0:
        raise IntegrationError(f"t0={params.t0} precedes the day grid origin")
    if n_pop <= initial_infected:
        raise ValueError("population must exceed the seed infections")

    d0 = int(math.ceil(params.t0))
    n_rec = horizon + 2 - d0  # through horizon+1 for the last nu difference
    S_tail, I_tail = _integrate(
        params.beta,
        params.gamma,
        params.phi,
        float(n_pop),
        float(params.t0),
        float(t1),
        d0,
        n_rec,
        step,
        float(initial_infected),
    )
    if not (np.isfinite(S_tail).all() and np.isfinite(I_tail).all()):
        raise IntegrationError("non-finite state encountered during integration")

    n_days = horizon + 1
    S = np.empty(n_days + 1)
    I = np.empty(n_days + 1)
    S[:d0] = n_pop - initial_infected
    I[:d0] = initial_infected
    S[d0:] = S_tail
    I[d0:] = I_tail
    R = n_pop - S - I

    nu = np.zeros(n_days)
    nu[d0:] = S[d0:n_days] - S[d0 + 1 :]

    return Trajectory(
        days=np.arange(n_days), S=S[:n_days], I=I[:n_days], R=R[:n_days], nu=nu
    )
