"""Discrete-accrual Monte Carlo valuation of fixed initiation strategies.

Each period of length ``h = 1/steps_per_year`` applies, in order: lognormal
growth of the account, deduction of fees (and withdrawals once initiated),
the bonus on the guarantee base (before initiation only, as ``exp(beta*h)``
so that ``beta`` is the same continuous rate the PDE uses), the ratchet
``M <- max(M, X)`` and the floor at zero, which marks ruin. Mortality is
deterministic (fully diversified): cash flows are weighted by the survival
curve rather than simulated deaths.

Any fixed strategy gives a lower bound on the optimal pre-initiation value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np
from numba import njit

from .contract import ContractParams, payout_rate, require_valid
from .errors import InvalidInputError
from .mortality import annuity_price, survival

if TYPE_CHECKING:
    from .region import InitiationRegion

# Paths per random-number block. Path i always draws from block i // CHUNK at
# offset i % CHUNK, which is what makes estimates independent of scheduling.
CHUNK = 8192


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 200_000
    seed: int = 20130225
    steps_per_year: int = 1

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise InvalidInputError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.steps_per_year < 1:
            raise InvalidInputError(f"steps_per_year must be >= 1, got {self.steps_per_year}")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass(frozen=True)
class FixedDelay:
    """Initiate ``years`` after the valuation date (or earlier, at ruin)."""

    years: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.years) and self.years >= 0):
            raise InvalidInputError(f"delay must be >= 0, got {self.years}")


@dataclass(frozen=True)
class RegionPolicy:
    """Initiate the first time (age, moneyness) falls in the region's initiate set."""

    region: "InitiationRegion"


@dataclass(frozen=True)
class NeverInitiate:
    """Accumulate until ruin forces initiation."""


@dataclass
class LocalState:
    """State of one account. ``step_up`` is the product of all ratchet factors."""

    X: float
    M: float = 1.0
    step_up: float = 1.0
    N: float = 1.0
    tau: float | None = None
    R: float | None = None
    t: float = 0.0

    @property
    def Y(self) -> float:
        return self.X / self.M


@njit(cache=True)
def _advance(X, M, z, r, sigma, alpha, beta, g, initiated, h):
    """One period of account dynamics. Returns ``(X, M, ratchet_factor, ruined)``."""
    X = X * math.exp((r - 0.5 * sigma * sigma) * h + sigma * math.sqrt(h) * z)
    if initiated:
        X -= M * (alpha + g) * h
    else:
        X -= M * alpha * h
        M = M * math.exp(beta * h)
    factor = 1.0
    if X > M:
        factor = X / M
        M = X
    ruined = False
    if X <= 0.0:
        X = 0.0
        ruined = True
    return X, M, factor, ruined


def step_year(state: LocalState, params: ContractParams, age: float, initiated: bool,
              rng: np.random.Generator | None = None, z: float | None = None,
              steps_per_year: int = 1) -> LocalState:
    """Advance ``state`` by one period; ``age`` is the age at the start of it.

    The shock ``z`` is drawn from ``rng`` unless given explicitly. A ruined
    state is returned unchanged.
    """
    if state.R is not None:
        return state
    if not (0.0 <= state.Y <= 1.0 + 1e-12) or state.M <= 0:
        raise InvalidInputError(f"invalid state: Y={state.Y}, M={state.M}")
    h = 1.0 / steps_per_year
    if z is None:
        z = rng.standard_normal()
    if initiated and state.tau is None:
        state = replace(state, tau=state.t)
    g = payout_rate(params.schedule, age - (state.t - state.tau)) if initiated else 0.0
    X, M, factor, ruined = _advance(state.X, state.M, float(z), params.r, params.sigma,
                                    params.alpha, params.beta, g, initiated, h)
    t = state.t + h
    return LocalState(
        X=X, M=M, step_up=state.step_up * factor,
        N=state.N * survival(params.mortality, age, h),
        tau=state.tau, R=t if ruined else None, t=t,
    )


@njit(cache=True)
def _paths(z, X0, r, sigma, alpha, beta, h, disc, surv, abar_next, rates_by_step,
           delay_steps, mode, mask, mask_age0, mask_dt, mask_ny, age_start, out):
    """Per-path discounted value for one block of shocks ``z[step, path]``.

    mode 0: initiate at step ``delay_steps``; 1: region mask; 2: only at ruin.
    """
    n_steps, n_paths = z.shape
    n_rows = mask.shape[0]
    for p in range(n_paths):
        X = X0
        M = 1.0
        initiated = False
        g = 0.0
        value = 0.0
        for k in range(n_steps):
            if not initiated:
                go = False
                if mode == 0:
                    go = k >= delay_steps
                elif mode == 1:
                    row = int(round((age_start + k * h - mask_age0) / mask_dt))
                    if row >= n_rows:
                        go = True
                    else:
                        col = int(round(X / M * mask_ny))
                        go = mask[row, col]
                if go:
                    initiated = True
                    g = rates_by_step[k]
            # deaths during the period get the start-of-period account value
            value += disc[k] * X * (surv[k] - surv[k + 1])
            if initiated:
                value += disc[k] * surv[k] * g * M * h
            X, M, factor, ruined = _advance(X, M, z[k, p], r, sigma, alpha, beta, g, initiated, h)
            if ruined:
                if not initiated:
                    g = rates_by_step[k + 1]
                value += disc[k + 1] * surv[k + 1] * g * M * abar_next[k]
                break
        out[p] = value


def _block_normals(seed: int, block: int, n_steps: int, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))
    return rng.standard_normal((n_steps, CHUNK))[:, :size]


def _prepare(params: ContractParams, age0: float, steps_per_year: int):
    mort = params.mortality
    horizon = mort.age_cap - age0
    n_steps = int(math.ceil(horizon * steps_per_year - 1e-9))
    h = 1.0 / steps_per_year
    t = np.minimum(np.arange(n_steps + 1) * h, horizon)
    disc = np.exp(-params.r * t)
    surv = survival(mort, age0, t)
    ages = age0 + t
    abar_next = np.array([annuity_price(mort, params.r, min(a, mort.age_cap)) for a in ages[1:]])
    rates = np.array([payout_rate(params.schedule, a) for a in np.round(ages, 9)])
    return n_steps, h, disc, surv, abar_next, rates


def path_values(params: ContractParams, age0: float, y0: float, strategy, config: McConfig,
                workers: int = 1) -> np.ndarray:
    """Discounted value of every simulated path (per unit of initial guarantee)."""
    require_valid(params)
    if not 0.0 < y0 <= 1.0:
        raise InvalidInputError(f"y0 must be in (0, 1], got {y0}")
    mort = params.mortality
    if not 0 <= age0 < mort.age_cap:
        raise InvalidInputError(f"age {age0} outside [0, {mort.age_cap})")
    n_steps, h, disc, surv, abar_next, rates = _prepare(params, age0, config.steps_per_year)

    mask = np.zeros((1, 1), dtype=np.bool_)
    mask_age0, mask_dt, mask_ny = 0.0, 1.0, 1
    delay_steps = 0
    if isinstance(strategy, FixedDelay):
        mode = 0
        delay_steps = int(round(strategy.years * config.steps_per_year))
    elif isinstance(strategy, RegionPolicy):
        mode = 1
        region = strategy.region
        mask = np.ascontiguousarray(region.mask)
        mask_age0 = region.ages[0]
        mask_dt = region.grid.dt
        mask_ny = region.grid.ny
        if age0 < mask_age0 - 1e-9:
            raise InvalidInputError(f"age {age0} precedes the region grid start {mask_age0}")
    elif isinstance(strategy, NeverInitiate):
        mode = 2
    else:
        raise InvalidInputError(f"unknown strategy {strategy!r}")

    n_blocks = -(-config.n_paths // CHUNK)

    def run_block(b: int) -> np.ndarray:
        size = min(CHUNK, config.n_paths - b * CHUNK)
        z = _block_normals(config.seed, b, n_steps, size)
        out = np.empty(size)
        _paths(z, float(y0), params.r, params.sigma, params.alpha, params.beta, h, disc, surv,
               abar_next, rates, delay_steps, mode, mask, mask_age0, mask_dt, mask_ny, float(age0), out)
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run_block, range(n_blocks)))
    else:
        blocks = [run_block(b) for b in range(n_blocks)]
    return np.concatenate(blocks)


def simulate_value(params: ContractParams, age0: float, y0: float, strategy, config: McConfig,
                   workers: int = 1) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of the strategy's hedge value."""
    values = path_values(params, age0, y0, strategy, config, workers)
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return float(values.mean()), se
