"""Break-even bonus rates and the nine-cell break-even table."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .contract import ContractParams, require_valid
from .errors import InvalidInputError
from .montecarlo import FixedDelay, McConfig, path_values
from .pde_engine import (
    DEFAULT_NY,
    DEFAULT_STEPS_PER_YEAR,
    Grid,
    exercise_values,
    interpolate,
    solve_v0,
    solve_v1_all,
)

log = logging.getLogger(__name__)

TABLE1_AGES = (55, 65, 75)
TABLE1_MONEYNESS = (1.0, 0.8, 0.5)


@dataclass(frozen=True)
class BreakevenQuery:
    age: float
    y: float
    delay: float = 5.0
    method: str = "pde"
    bracket: tuple[float, float] = (0.0, 0.20)
    tol: float = 1e-4

    def __post_init__(self) -> None:
        lo, hi = self.bracket
        if not lo < hi:
            raise InvalidInputError(f"bracket lower {lo} must be below upper {hi}")
        if not self.tol > 0:
            raise InvalidInputError(f"tolerance must be positive, got {self.tol}")
        if not 0 < self.y <= 1:
            raise InvalidInputError(f"moneyness must be in (0, 1], got {self.y}")
        if self.delay < 0:
            raise InvalidInputError(f"delay must be >= 0, got {self.delay}")
        if self.method not in ("pde", "mc"):
            raise InvalidInputError(f"method must be 'pde' or 'mc', got {self.method!r}")


@dataclass(frozen=True)
class BreakevenResult:
    """``status`` is ``root``, ``always-initiate`` (root above the bracket) or
    ``always-wait`` (root below it); for the latter two ``beta`` is the endpoint."""

    beta: float
    status: str
    initiate_value: float
    wait_value: float
    stderr: float = float("nan")


def bisect_increasing(f: Callable[[float], float], lo: float, hi: float, tol: float):
    """Root of a non-decreasing ``f`` on ``[lo, hi]`` by plain bisection.

    Returns ``(x, status)``; no sign change yields the relevant endpoint.
    """
    f_lo = f(lo)
    if f_lo > 0:
        return lo, "always-wait"
    f_hi = f(hi)
    if f_hi < 0:
        return hi, "always-initiate"
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), "root"


def breakeven_bonus_pde(
    query: BreakevenQuery,
    params: ContractParams,
    steps_per_year: int = DEFAULT_STEPS_PER_YEAR,
    ny: int = DEFAULT_NY,
) -> BreakevenResult:
    """Bonus rate at which waiting ``query.delay`` years (then acting
    optimally) is worth exactly as much as initiating now."""
    require_valid(params)
    grid = Grid.for_params(params, start_age=query.age, steps_per_year=steps_per_year, ny=ny)
    v1 = solve_v1_all(params, grid)
    exercise = exercise_values(params, grid, v1)
    t0 = grid.t0
    initiate = interpolate_row(exercise[0], grid, query.y)
    cache: dict[float, float] = {}

    def wait_value(beta: float) -> float:
        if beta not in cache:
            v0, _ = solve_v0(params.replace(beta=beta), grid, v1, t0 + query.delay, exercise=exercise)
            cache[beta] = interpolate(v0, t0, query.y)
        return cache[beta]

    beta, status = bisect_increasing(lambda b: wait_value(b) - initiate, *query.bracket, query.tol)
    log.info("pde break-even age=%s y=%s -> %.6f (%s)", query.age, query.y, beta, status)
    return BreakevenResult(beta, status, initiate, wait_value(beta))


def interpolate_row(row: np.ndarray, grid: Grid, y: float) -> float:
    return float(np.interp(y, grid.y, row))


def breakeven_bonus_mc(query: BreakevenQuery, params: ContractParams, config: McConfig,
                       workers: int = 1) -> BreakevenResult:
    """Monte Carlo break-even between initiating now and after ``query.delay``.

    The same shocks are reused for every bonus rate tried, so the difference
    is a deterministic non-decreasing function of the rate.
    """
    require_valid(params)
    now = path_values(params, query.age, query.y, FixedDelay(0.0), config, workers)
    initiate = float(now.mean())
    cache: dict[float, np.ndarray] = {}

    def wait_paths(beta: float) -> np.ndarray:
        if beta not in cache:
            cache[beta] = path_values(params.replace(beta=beta), query.age, query.y,
                                      FixedDelay(query.delay), config, workers)
        return cache[beta]

    beta, status = bisect_increasing(lambda b: float(wait_paths(b).mean()) - initiate,
                                     *query.bracket, query.tol)
    diff = wait_paths(beta) - now
    se = float(diff.std(ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else float("nan")
    log.info("mc break-even age=%s y=%s -> %.6f (%s)", query.age, query.y, beta, status)
    return BreakevenResult(beta, status, initiate, float(wait_paths(beta).mean()), se)


def breakeven(query: BreakevenQuery, params: ContractParams, config: McConfig | None = None,
              steps_per_year: int = DEFAULT_STEPS_PER_YEAR, ny: int = DEFAULT_NY) -> BreakevenResult:
    if query.method == "pde":
        return breakeven_bonus_pde(query, params, steps_per_year, ny)
    return breakeven_bonus_mc(query, params, config or McConfig())


@dataclass(frozen=True)
class Table1Row:
    age: float
    y: float
    pde: BreakevenResult
    mc: BreakevenResult | None


def run_table1(params: ContractParams, config: McConfig | None, delay: float = 5.0,
               ages=TABLE1_AGES, moneyness=TABLE1_MONEYNESS,
               steps_per_year: int = DEFAULT_STEPS_PER_YEAR, ny: int = DEFAULT_NY) -> list[Table1Row]:
    """Break-even rates for every (age, y) cell; ``config=None`` skips Monte Carlo."""
    rows = []
    for age in ages:
        for y in moneyness:
            q = BreakevenQuery(age=age, y=y, delay=delay)
            pde = breakeven_bonus_pde(q, params, steps_per_year, ny)
            mc = breakeven_bonus_mc(q, params, config) if config is not None else None
            rows.append(Table1Row(age, y, pde, mc))
    return rows


def write_table1_csv(rows: list[Table1Row], path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["age", "y", "pde_beta", "pde_status", "mc_beta", "mc_status", "mc_stderr"])
            for row in rows:
                mc = row.mc
                w.writerow([
                    repr(float(row.age)), repr(float(row.y)), repr(row.pde.beta), row.pde.status,
                    repr(mc.beta) if mc else "", mc.status if mc else "", repr(mc.stderr) if mc else "",
                ])
    except OSError as exc:
        raise OSError(f"cannot write table CSV {path}: {exc}") from exc


def table2_moves(base: ContractParams) -> list[tuple[str, ContractParams, ContractParams]]:
    """Pairwise parameter moves ``(label, a, b)`` where delay(a) should sit inside delay(b)."""
    from .contract import PayoutSchedule

    def g(rate: float) -> ContractParams:
        return base.replace(schedule=PayoutSchedule.constant(rate))

    return [
        ("beta 4% -> 6% expands delay", base.replace(beta=0.04), base.replace(beta=0.06)),
        ("beta 6% -> 8% expands delay", base.replace(beta=0.06), base.replace(beta=0.08)),
        ("sigma 10% -> 20% expands delay", base.replace(sigma=0.10), base.replace(sigma=0.20)),
        ("sigma 20% -> 30% expands delay", base.replace(sigma=0.20), base.replace(sigma=0.30)),
        ("alpha 1.5% -> 3% shrinks delay", base.replace(alpha=0.03), base.replace(alpha=0.015)),
        ("r 3% -> 5% shrinks delay", base.replace(r=0.05), base.replace(r=0.03)),
        ("g 5% -> 4% shrinks delay", g(0.04), g(0.05)),
    ]
