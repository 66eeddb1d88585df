"""Contract and market parameters, and the age-banded payout schedule."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .errors import InvalidInputError
from .mortality import GompertzModel


@dataclass(frozen=True)
class PayoutSchedule:
    """Guaranteed payout rate as a step function of initiation age.

    ``bands`` is a sequence of ``(start_age, rate)`` pairs with left-closed
    bands: initiating exactly at a start age earns that band's rate. The first
    band also covers every age below it and the last runs to the age cap.
    """

    bands: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bands", tuple((float(a), float(g)) for a, g in self.bands))

    @classmethod
    def constant(cls, rate: float) -> "PayoutSchedule":
        return cls(((0.0, rate),))

    @property
    def starts(self) -> list[float]:
        return [a for a, _ in self.bands]

    @property
    def rates(self) -> list[float]:
        return [g for _, g in self.bands]

    def __len__(self) -> int:
        return len(self.bands)


def band_index(schedule: PayoutSchedule, age: float) -> int:
    """Index of the band whose rate applies to initiation at ``age``."""
    if not schedule.bands:
        raise InvalidInputError("payout schedule has no bands")
    if not (math.isfinite(age) and age >= 0):
        raise InvalidInputError(f"age must be finite and non-negative, got {age}")
    return max(bisect.bisect_right(schedule.starts, age) - 1, 0)


def payout_rate(schedule: PayoutSchedule, age: float) -> float:
    return schedule.bands[band_index(schedule, age)][1]


@dataclass(frozen=True)
class ContractParams:
    """Market and product constants; defaults are the moderate-volatility base case."""

    r: float = 0.03
    sigma: float = 0.20
    alpha: float = 0.015
    beta: float = 0.04
    schedule: PayoutSchedule = field(default_factory=lambda: PayoutSchedule.constant(0.05))
    mortality: GompertzModel = field(default_factory=GompertzModel)

    def replace(self, **changes) -> "ContractParams":
        from dataclasses import replace

        return replace(self, **changes)


def validate(params: ContractParams, allow_zero_rate: bool = False) -> list[str]:
    """Return a list of violated invariants; an empty list means ``params`` is usable.

    ``allow_zero_rate`` admits a payout rate of exactly 0, which the solvers
    accept for the degenerate no-guarantee case.
    """
    problems = []
    for name in ("r", "sigma", "alpha", "beta"):
        value = getattr(params, name)
        if not math.isfinite(value):
            problems.append(f"{name} is not finite ({value})")
    if params.r < 0:
        problems.append(f"r must be >= 0 (got {params.r})")
    if not params.sigma > 0:
        problems.append(f"sigma must be > 0 (got {params.sigma})")
    if params.alpha < 0:
        problems.append(f"alpha must be >= 0 (got {params.alpha})")
    if params.beta < 0:
        problems.append(f"beta must be >= 0 (got {params.beta})")

    bands = params.schedule.bands
    if not bands:
        problems.append("payout schedule is empty")
    for age, rate in bands:
        lowest_ok = rate >= 0 if allow_zero_rate else rate > 0
        if not (math.isfinite(rate) and lowest_ok and rate < 1):
            problems.append(f"payout rate {rate} at age {age} outside (0, 1)")
    starts, rates = params.schedule.starts, params.schedule.rates
    if any(b <= a for a, b in zip(starts, starts[1:])):
        problems.append(f"band start ages not strictly increasing: {starts}")
    if any(b < a for a, b in zip(rates, rates[1:])):
        problems.append(f"payout rates step down across bands: {rates}")
    if starts and starts[-1] >= params.mortality.age_cap:
        problems.append("last band starts at or beyond age_cap")
    return problems


def require_valid(params: ContractParams, allow_zero_rate: bool = True) -> None:
    problems = validate(params, allow_zero_rate=allow_zero_rate)
    if problems:
        raise InvalidInputError("; ".join(problems))
