"""Gompertz mortality: hazard, survival and continuous life-annuity prices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Composite Simpson step for annuity integrals (one day).
ANNUITY_STEP = 1.0 / 365.0


@dataclass(frozen=True)
class GompertzModel:
    """Gompertz law with modal age ``m`` and dispersion ``b`` (both in years).

    Survival is truncated to zero at ``age_cap``, so every integral over the
    remaining lifetime is finite.
    """

    m: float = 87.25
    b: float = 9.5
    age0: float = 50.0
    age_cap: float = 120.0

    def __post_init__(self) -> None:
        for name in ("m", "b", "age0", "age_cap"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} must be finite")
        if self.b <= 0:
            raise InvalidInputError(f"b must be positive, got {self.b}")
        if self.m <= 0:
            raise InvalidInputError(f"m must be positive, got {self.m}")
        if not self.age0 < self.age_cap:
            raise InvalidInputError(f"age0 ({self.age0}) must be below age_cap ({self.age_cap})")


def _check_age(age) -> np.ndarray:
    a = np.asarray(age, dtype=float)
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise InvalidInputError(f"age must be finite and non-negative, got {age!r}")
    return a


def hazard(model: GompertzModel, age):
    """Force of mortality ``(1/b) exp((age - m)/b)``; accepts scalars or arrays."""
    a = _check_age(age)
    out = np.exp((a - model.m) / model.b) / model.b
    return float(out) if out.ndim == 0 else out


def survival(model: GompertzModel, age, t):
    """Probability that a life aged ``age`` survives ``t`` more years."""
    a = _check_age(age)
    tt = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(tt)) or np.any(tt < 0):
        raise InvalidInputError(f"t must be finite and non-negative, got {t!r}")
    lam = np.exp((a - model.m) / model.b) / model.b
    # expm1 keeps t -> 0 accurate
    s = np.exp(-lam * model.b * np.expm1(tt / model.b))
    s = np.where(a + tt >= model.age_cap, 0.0, s)
    return float(s) if s.ndim == 0 else s


def _simpson(values: np.ndarray, h: float) -> float:
    return h / 3.0 * (values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def annuity_price(model: GompertzModel, r: float, age: float, step: float = ANNUITY_STEP) -> float:
    """Price of 1 per year paid continuously for life, discounted at ``r``."""
    if not (math.isfinite(r) and r >= 0):
        raise InvalidInputError(f"r must be finite and non-negative, got {r}")
    age = float(_check_age(age))
    if age > model.age_cap:
        raise InvalidInputError(f"age {age} exceeds age_cap {model.age_cap}")
    horizon = model.age_cap - age
    if horizon == 0.0:
        return 0.0
    n = max(2, math.ceil(horizon / step))
    n += n % 2
    q = np.linspace(0.0, horizon, n + 1)
    lam = math.exp((age - model.m) / model.b) / model.b
    f = np.exp(-r * q - lam * model.b * np.expm1(q / model.b))
    return float(_simpson(f, horizon / n))


def annuity_curve(model: GompertzModel, r: float, ages: np.ndarray) -> np.ndarray:
    """``annuity_price`` evaluated at each of ``ages`` (convenience for grids)."""
    return np.array([annuity_price(model, r, a) for a in np.asarray(ages, dtype=float)])
