"""Initiate/delay regions over (age, moneyness) and their comparison."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .pde_engine import DEFAULT_NY, DEFAULT_STEPS_PER_YEAR, Grid, ValueSurface, solve_v0, solve_v1_all


@dataclass
class InitiationRegion:
    """Boolean mask over the grid: True = initiate now, False = delay."""

    grid: Grid
    mask: np.ndarray
    age0: float
    fingerprint: str = ""

    def __post_init__(self) -> None:
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != (self.grid.nt + 1, self.grid.ny + 1):
            raise InvalidInputError(f"mask shape {self.mask.shape} does not match grid")

    @property
    def ages(self) -> np.ndarray:
        return self.age0 + self.grid.times

    @property
    def delay(self) -> np.ndarray:
        return ~self.mask

    def row(self, age: float) -> np.ndarray:
        mort_t = age - self.age0
        if not (self.grid.t0 - 1e-9 <= mort_t <= self.grid.T + 1e-9):
            raise InvalidInputError(f"age {age} outside region [{self.ages[0]}, {self.ages[-1]}]")
        return self.mask[self.grid.time_index(mort_t)]


@dataclass
class ContainmentReport:
    """Is the delay set of ``a`` contained in that of ``b``, and where does it fail?"""

    a_subset_of_b: bool
    b_subset_of_a: bool
    n_differing: int
    violations: list[tuple[float, float]] = field(default_factory=list)


def extract_region(v0: ValueSurface, mask: np.ndarray, fingerprint: str = "") -> InitiationRegion:
    """Package the obstacle-active mask from ``solve_v0`` as a region."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != v0.values.shape:
        raise InvalidInputError(f"mask shape {mask.shape} does not match surface {v0.values.shape}")
    return InitiationRegion(v0.grid, mask.copy(), v0.age0, fingerprint)


def boundary_intervals(region: InitiationRegion, age: float) -> list[tuple[float, float]]:
    """Maximal runs of delay cells ``[y_lo, y_hi]`` (grid values) at ``age``."""
    delay = ~region.row(age)
    y = region.grid.y
    out = []
    j = 0
    n = delay.size
    while j < n:
        if delay[j]:
            k = j
            while k + 1 < n and delay[k + 1]:
                k += 1
            out.append((float(y[j]), float(y[k])))
            j = k + 1
        else:
            j += 1
    return out


def compare_regions(a: InitiationRegion, b: InitiationRegion) -> ContainmentReport:
    if a.grid != b.grid or abs(a.age0 - b.age0) > 1e-12:
        raise InvalidInputError("regions are on different grids")
    da, db = a.delay, b.delay
    only_a = da & ~db
    idx = np.argwhere(only_a)
    ages, y = a.ages, a.grid.y
    return ContainmentReport(
        a_subset_of_b=not only_a.any(),
        b_subset_of_a=not (db & ~da).any(),
        n_differing=int((da != db).sum()),
        violations=[(float(ages[n]), float(y[j])) for n, j in idx],
    )


def export_region_csv(region: InitiationRegion, path) -> None:
    """Write ``age,y,initiate`` rows, age-major then y ascending."""
    path = Path(path)
    ages, y = region.ages, region.grid.y
    table = np.column_stack([
        np.repeat(ages, y.size),
        np.tile(y, ages.size),
        region.mask.ravel().astype(float),
    ])
    try:
        with path.open("w") as fh:
            fh.write("age,y,initiate\n")
            np.savetxt(fh, table, fmt=["%.17g", "%.17g", "%d"], delimiter=",")
    except OSError as exc:
        raise OSError(f"cannot write region CSV {path}: {exc}") from exc


def read_region_csv(path) -> InitiationRegion:
    """Rebuild a region from ``export_region_csv`` output (uniform grid assumed)."""
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read region CSV {path}: {exc}") from exc
    except ValueError as exc:
        raise InvalidInputError(f"malformed region CSV {path}: {exc}") from exc
    ages = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    if ages.size * y.size != data.shape[0]:
        raise InvalidInputError(f"{path}: rows do not form a full age x y grid")
    mask = data[:, 2].reshape(ages.size, y.size).astype(bool)
    age0 = float(ages[0])
    grid = Grid(t0=0.0, T=float(ages[-1] - age0), nt=ages.size - 1, ny=y.size - 1)
    return InitiationRegion(grid, mask, age0)


def summary_report(region: InitiationRegion, ages=None) -> str:
    """Plain-text summary: cell counts and the delay intervals at selected ages."""
    if ages is None:
        ages = np.arange(np.ceil(region.ages[0]), region.ages[-1] + 1e-9, 1.0)
    total = region.mask.size
    n_delay = int(region.delay.sum())
    lines = [
        f"cells: {total}  initiate: {total - n_delay}  delay: {n_delay}",
        "age    delay intervals (y)",
    ]
    for a in ages:
        iv = boundary_intervals(region, float(a))
        text = ", ".join(f"[{lo:.4f}, {hi:.4f}]" for lo, hi in iv) if iv else "-"
        lines.append(f"{a:6.2f} {text}")
    return "\n".join(lines) + "\n"


def solve_region(params, steps_per_year: int | None = None, ny: int | None = None,
                 start_age: float | None = None) -> InitiationRegion:
    """Solve ``v1`` for every band and ``v0`` unconstrained; return the region."""
    grid = Grid.for_params(params, start_age=start_age,
                           steps_per_year=steps_per_year or DEFAULT_STEPS_PER_YEAR,
                           ny=ny or DEFAULT_NY)
    v1 = solve_v1_all(params, grid)
    v0, mask = solve_v0(params, grid, v1)
    return extract_region(v0, mask, fingerprint=repr(params))


def age_monotonicity_violations(region: InitiationRegion) -> list[tuple[float, float]]:
    """Cells delayed at some age although initiation was optimal at a younger age, same y."""
    delay = region.delay
    # a cell violates if any younger row at the same y already initiates
    initiated_before = np.logical_or.accumulate(region.mask, axis=0)
    bad = delay[1:] & initiated_before[:-1]
    idx = np.argwhere(bad)
    ages, y = region.ages, region.grid.y
    return [(float(ages[n + 1]), float(y[j])) for n, j in idx]
