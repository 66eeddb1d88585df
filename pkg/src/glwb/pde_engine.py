"""Finite-difference solvers for the three value-function regimes.

All values are per dollar of guarantee base. Time ``t`` is measured in years
from the mortality model's ``age0``; moneyness ``y = X/M`` lives on [0, 1].

* ``v2``: after ruin, a pure life annuity ``g * abar``.
* ``v1``: after initiation, before ruin; one surface per payout band.
* ``v0``: before initiation; an obstacle problem against the ``v1`` surface of
  the band that would be locked in by initiating now.

Time stepping is backward Euler with upwinded convection. The reflecting
boundary at ``y = 1`` is the Robin condition ``v = v_y``, discretised with a
second-order one-sided difference and folded into the tridiagonal system.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .contract import ContractParams, band_index, require_valid
from .errors import InvalidInputError, NumericalFailureError
from .mortality import hazard
from .tridiag import thomas_inplace

DEFAULT_NY = 400
DEFAULT_STEPS_PER_YEAR = 240
TOL_EXERCISE = 1e-9


@dataclass(frozen=True)
class Grid:
    """Uniform (time, moneyness) grid. ``t0`` and ``T`` are years after ``age0``."""

    t0: float
    T: float
    nt: int
    ny: int

    def __post_init__(self) -> None:
        if self.nt < 2 or self.ny < 2:
            raise InvalidInputError(f"grid needs nt >= 2 and ny >= 2, got nt={self.nt}, ny={self.ny}")
        if not (math.isfinite(self.t0) and math.isfinite(self.T) and self.T > self.t0):
            raise InvalidInputError(f"grid needs finite t0 < T, got t0={self.t0}, T={self.T}")

    @classmethod
    def for_params(
        cls,
        params: ContractParams,
        start_age: float | None = None,
        steps_per_year: int = DEFAULT_STEPS_PER_YEAR,
        ny: int = DEFAULT_NY,
    ) -> "Grid":
        """Grid from ``start_age`` (default ``age0``) to the age cap.

        The span must be a whole number of years so that integer band ages
        land on grid times.
        """
        mort = params.mortality
        start_age = mort.age0 if start_age is None else float(start_age)
        if not mort.age0 <= start_age < mort.age_cap:
            raise InvalidInputError(f"start age {start_age} outside [{mort.age0}, {mort.age_cap})")
        span = mort.age_cap - start_age
        nt = round(span * steps_per_year)
        if abs(nt - span * steps_per_year) > 1e-9:
            raise InvalidInputError(f"span {span} years is not a multiple of 1/{steps_per_year}")
        return cls(t0=start_age - mort.age0, T=mort.age_cap - mort.age0, nt=nt, ny=ny)

    @property
    def dt(self) -> float:
        return (self.T - self.t0) / self.nt

    @property
    def dy(self) -> float:
        return 1.0 / self.ny

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt + 1)

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny + 1) / self.ny

    def ages(self, params: ContractParams) -> np.ndarray:
        return params.mortality.age0 + self.times

    def time_index(self, t: float) -> int:
        """Nearest grid index to time ``t``."""
        if not (self.t0 - 1e-9 <= t <= self.T + 1e-9):
            raise InvalidInputError(f"time {t} outside grid [{self.t0}, {self.T}]")
        return int(round((t - self.t0) / self.dt))


@dataclass
class ValueSurface:
    """Value function sampled on ``grid``; ``values[n, j]`` is at ``times[n], y[j]``."""

    grid: Grid
    values: np.ndarray
    regime: str
    band: int | None = None
    age0: float = 0.0

    def row_at_age(self, age: float) -> np.ndarray:
        return self.values[self.grid.time_index(age - self.age0)]

    def to_csv(self, path) -> None:
        """Header of y values after an ``age`` column, then one row per time."""
        path = Path(path)
        ages = self.age0 + self.grid.times
        try:
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["age"] + [repr(float(v)) for v in self.grid.y])
                for a, row in zip(ages, self.values):
                    w.writerow([repr(float(a))] + [repr(float(v)) for v in row])
        except OSError as exc:
            raise OSError(f"cannot write surface CSV {path}: {exc}") from exc


def read_surface_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(ages, y, values)`` from a file written by ``ValueSurface.to_csv``."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    y = np.array([float(v) for v in rows[0][1:]])
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    return data[:, 0], y, data[:, 1:]


def band_per_time(params: ContractParams, grid: Grid) -> np.ndarray:
    """Band index active at each grid time, with band ages snapped to the grid."""
    schedule = params.schedule
    ages = grid.ages(params)
    out = np.array([band_index(schedule, a) for a in np.round(ages, 9)], dtype=np.int64)
    age_start = params.mortality.age0 + grid.t0
    for k, (start, _) in enumerate(schedule.bands[1:], start=1):
        n = int(round((start - age_start) / grid.dt))
        if 0 <= n <= grid.nt:
            out[n:] = np.maximum(out[n:], k)
            out[:n] = np.minimum(out[:n], k - 1)
    return out


def _check_band(params: ContractParams, band: int) -> float:
    if not 0 <= band < len(params.schedule):
        raise InvalidInputError(f"band {band} not in schedule with {len(params.schedule)} bands")
    return params.schedule.bands[band][1]


@njit(cache=True)
def _trapezoid_annuity(g, r, lam, dt):
    n = lam.shape[0]
    v = np.zeros(n)
    for k in range(n - 2, -1, -1):
        c0 = r + lam[k]
        c1 = r + lam[k + 1]
        v[k] = (v[k + 1] * (1.0 - 0.5 * dt * c1) + dt * g) / (1.0 + 0.5 * dt * c0)
    return v


def solve_v2(params: ContractParams, grid: Grid, band: int) -> np.ndarray:
    """Post-ruin value ``g_band * abar`` at every grid time.

    Integrates ``v' = (r + lambda) v - g`` backward from ``v(T) = 0`` with the
    trapezoidal rule.
    """
    require_valid(params)
    g = _check_band(params, band)
    lam = hazard(params.mortality, grid.ages(params))
    return _trapezoid_annuity(g, params.r, lam, grid.dt)


@njit(cache=True)
def _assemble(diag_base, reaction, lam_n, src_const, y, bc0_n, dt, dy, v_next, lo, diag, up, rhs):
    """Fill ``(lo, diag, up, rhs)`` for one backward-Euler step.

    ``lo`` and ``up`` must hold the interior off-diagonals on entry; the
    boundary rows are overwritten.
    """
    m = diag.shape[0]
    N = m - 1
    c = reaction + lam_n
    for j in range(m):
        diag[j] = diag_base[j] + dt * c
        rhs[j] = v_next[j] + dt * (src_const + lam_n * y[j])
    diag[0] = 1.0
    up[0] = 0.0
    rhs[0] = bc0_n
    # Robin row (2dy - 3) v_N + 4 v_{N-1} - v_{N-2} = 0, with v_{N-2}
    # eliminated using row N-1.
    l1 = lo[N - 1]
    lo[N] = 4.0 + diag[N - 1] / l1
    diag[N] = 2.0 * dy - 3.0 + up[N - 1] / l1
    rhs[N] = rhs[N - 1] / l1


@njit(cache=True)
def _march(lower, upper, diag_base, reaction, lam, src_const, y, bc0, dt, dy,
           exercise, t_min_index, tol, values, mask):
    """Backward-Euler sweep from the terminal row ``values[-1]``.

    If ``exercise`` has rows, the obstacle ``max(continuation, exercise)`` is
    applied at every time index ``>= t_min_index`` and recorded in ``mask``.
    Returns -1, or the time index at which a zero pivot occurred.
    """
    nt = values.shape[0] - 1
    m = values.shape[1]
    diag = np.empty(m)
    lo = lower.copy()
    up = upper.copy()
    rhs = np.empty(m)
    scratch = np.empty(m)
    use_obstacle = exercise.shape[0] > 0
    for n in range(nt - 1, -1, -1):
        _assemble(diag_base, reaction, lam[n], src_const, y, bc0[n], dt, dy, values[n + 1],
                  lo, diag, up, rhs)
        status = thomas_inplace(lo, diag, up, rhs, values[n], scratch)
        if status >= 0:
            return n
        if use_obstacle and n >= t_min_index:
            for j in range(m):
                ex = exercise[n, j]
                if ex >= values[n, j] - tol:
                    mask[n, j] = True
                    if ex > values[n, j]:
                        values[n, j] = ex
    if use_obstacle and nt >= t_min_index:
        for j in range(m):
            if exercise[nt, j] >= values[nt, j] - tol:
                mask[nt, j] = True
    return -1


def _operator(grid: Grid, drift_slope: float, drift_const: float, sigma: float):
    """Time-independent parts of ``I - dt * L`` for drift ``slope*y + const``."""
    y = grid.y
    dt, dy = grid.dt, grid.dy
    a = drift_slope * y + drift_const
    d = 0.5 * sigma * sigma * y * y / (dy * dy)
    lower = -dt * (d + np.maximum(-a, 0.0) / dy)
    upper = -dt * (d + np.maximum(a, 0.0) / dy)
    diag_base = 1.0 + dt * (2.0 * d + np.abs(a) / dy)
    return lower, upper, diag_base


def _run(grid, lower, upper, diag_base, reaction, lam, src_const, bc0, terminal,
         exercise=None, t_min_index=0):
    values = np.empty((grid.nt + 1, grid.ny + 1))
    values[-1] = terminal
    mask = np.zeros(values.shape, dtype=np.bool_)
    if exercise is None:
        exercise = np.empty((0, 0))
    status = _march(lower, upper, diag_base, reaction, lam, src_const, grid.y, bc0,
                    grid.dt, grid.dy, exercise, t_min_index, TOL_EXERCISE, values, mask)
    if status >= 0:
        raise NumericalFailureError(f"zero pivot in tridiagonal solve at time index {status}")
    return values, mask


def solve_v1(params: ContractParams, grid: Grid, band: int, v2: np.ndarray | None = None) -> ValueSurface:
    """Post-initiation value surface for payout band ``band``."""
    require_valid(params)
    g = _check_band(params, band)
    lam = hazard(params.mortality, grid.ages(params))
    if v2 is None:
        v2 = solve_v2(params, grid, band)
    lower, upper, diag_base = _operator(grid, params.r, -(g + params.alpha), params.sigma)
    values, _ = _run(grid, lower, upper, diag_base, params.r, lam, g, v2, grid.y)
    return ValueSurface(grid, values, "v1", band, params.mortality.age0)


def v1_step_system(params: ContractParams, grid: Grid, band: int, n: int, v_next: np.ndarray):
    """The tridiagonal system ``solve_v1`` solves to get row ``n`` from row ``n + 1``.

    Returns ``(lower, diag, upper, rhs)`` with ``lower``/``upper`` of length ``ny``.
    """
    g = _check_band(params, band)
    lam = hazard(params.mortality, grid.ages(params))
    v2 = solve_v2(params, grid, band)
    lower, upper, diag_base = _operator(grid, params.r, -(g + params.alpha), params.sigma)
    m = grid.ny + 1
    lo, up, diag, rhs = lower.copy(), upper.copy(), np.empty(m), np.empty(m)
    _assemble(diag_base, params.r, lam[n], g, grid.y, v2[n], grid.dt, grid.dy,
              np.asarray(v_next, dtype=float), lo, diag, up, rhs)
    return lo[1:], diag, up[:-1], rhs


def solve_v1_all(params: ContractParams, grid: Grid) -> list[ValueSurface]:
    """One ``v1`` surface per payout band."""
    return [solve_v1(params, grid, k) for k in range(len(params.schedule))]


def exercise_values(params: ContractParams, grid: Grid, v1_surfaces) -> np.ndarray:
    """Value of initiating now at each grid point: the active band's ``v1`` row."""
    bands = band_per_time(params, grid)
    by_band = {}
    for s in v1_surfaces:
        if s.grid != grid:
            raise InvalidInputError("v1 surface grid does not match")
        by_band[s.band] = s.values
    missing = sorted(set(bands.tolist()) - set(by_band))
    if missing:
        raise InvalidInputError(f"missing v1 surfaces for bands {missing}")
    ex = np.empty((grid.nt + 1, grid.ny + 1))
    for k, vals in by_band.items():
        rows = bands == k
        ex[rows] = vals[rows]
    return ex


def solve_v0(
    params: ContractParams,
    grid: Grid,
    v1_surfaces,
    min_initiation_time: float | None = None,
    exercise: np.ndarray | None = None,
) -> tuple[ValueSurface, np.ndarray]:
    """Pre-initiation value and the initiation mask (True = initiate).

    Initiation is allowed only at grid times ``>= min_initiation_time``
    (default: the grid start, i.e. unconstrained). ``exercise`` may be passed
    to reuse a precomputed ``exercise_values`` array.
    """
    require_valid(params)
    if min_initiation_time is None:
        min_initiation_time = grid.t0
    if not grid.t0 - 1e-9 <= min_initiation_time <= grid.T + 1e-9:
        raise InvalidInputError(f"min_initiation_time {min_initiation_time} outside [{grid.t0}, {grid.T}]")
    if exercise is None:
        exercise = exercise_values(params, grid, v1_surfaces)
    t_min_index = int(math.ceil((min_initiation_time - grid.t0) / grid.dt - 1e-9))
    lam = hazard(params.mortality, grid.ages(params))
    # ruin forces initiation at the current band's rate
    bc0 = exercise[:, 0].copy()
    lower, upper, diag_base = _operator(grid, params.r - params.beta, -params.alpha, params.sigma)
    values, mask = _run(grid, lower, upper, diag_base, params.r - params.beta, lam, 0.0, bc0,
                        grid.y, exercise, t_min_index)
    return ValueSurface(grid, values, "v0", None, params.mortality.age0), mask


def interpolate(surface: ValueSurface, t: float, y: float) -> float:
    """Bilinear interpolation of ``surface`` at time ``t`` and moneyness ``y``."""
    grid = surface.grid
    if not (grid.t0 <= t <= grid.T) or not (0.0 <= y <= 1.0):
        raise InvalidInputError(f"point (t={t}, y={y}) outside grid")
    ft = (t - grid.t0) / grid.dt
    fy = y * grid.ny
    n = min(int(ft), grid.nt - 1)
    j = min(int(fy), grid.ny - 1)
    wt, wy = ft - n, fy - j
    v = surface.values
    return float(
        (1 - wt) * ((1 - wy) * v[n, j] + wy * v[n, j + 1])
        + wt * ((1 - wy) * v[n + 1, j] + wy * v[n + 1, j + 1])
    )
