"""Plain-text ``key = value`` configuration files.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Numbers are parsed with ``float``/``int``, which round decimal strings
correctly. ``bands`` is a comma-separated list of ``age:rate`` pairs, e.g.
``bands = 0:0.04, 65:0.045``. A bare ``g`` is not accepted; a constant
schedule is ``bands = 0:0.05``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .contract import ContractParams, PayoutSchedule, require_valid
from .errors import InvalidInputError
from .montecarlo import McConfig
from .mortality import GompertzModel
from .pde_engine import DEFAULT_NY, DEFAULT_STEPS_PER_YEAR

FLOAT_KEYS = ("r", "sigma", "alpha", "beta", "gompertz_m", "gompertz_b", "age0", "age_cap")
INT_KEYS = ("n_paths", "seed", "steps_per_year", "ny", "pde_steps_per_year")
KNOWN_KEYS = FLOAT_KEYS + INT_KEYS + ("bands",)

# Stepped schedule for region-topology runs. Illustrative only: real band ages
# and rates vary by product.
ILLUSTRATIVE_BANDS = ((0.0, 0.04), (65.0, 0.045), (75.0, 0.05), (85.0, 0.055))


@dataclass(frozen=True)
class RunConfig:
    params: ContractParams = field(default_factory=ContractParams)
    mc: McConfig = field(default_factory=McConfig)
    ny: int = DEFAULT_NY
    pde_steps_per_year: int = DEFAULT_STEPS_PER_YEAR


def parse_bands(text: str) -> PayoutSchedule:
    bands = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            age, rate = item.split(":")
            bands.append((float(age), float(rate)))
        except ValueError:
            raise InvalidInputError(f"bad band {item!r}; expected age:rate") from None
    if not bands:
        raise InvalidInputError("bands is empty")
    return PayoutSchedule(tuple(bands))


def parse_config(text: str, source: str = "<config>", overrides: dict[str, str] | None = None) -> RunConfig:
    """Parse config text; ``overrides`` (already split key/value strings) win over the file."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{source}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise InvalidInputError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise InvalidInputError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    for key, value in (overrides or {}).items():
        if key not in KNOWN_KEYS:
            raise InvalidInputError(f"unknown key {key!r} in override")
        values[key] = value

    def num(key, cast, default):
        if key not in values:
            return default
        try:
            return cast(values[key])
        except ValueError:
            raise InvalidInputError(f"{source}: {key} = {values[key]!r} is not a valid number") from None

    defaults = ContractParams()
    mort = defaults.mortality
    mortality = GompertzModel(
        m=num("gompertz_m", float, mort.m),
        b=num("gompertz_b", float, mort.b),
        age0=num("age0", float, mort.age0),
        age_cap=num("age_cap", float, mort.age_cap),
    )
    schedule = parse_bands(values["bands"]) if "bands" in values else defaults.schedule
    params = ContractParams(
        r=num("r", float, defaults.r),
        sigma=num("sigma", float, defaults.sigma),
        alpha=num("alpha", float, defaults.alpha),
        beta=num("beta", float, defaults.beta),
        schedule=schedule,
        mortality=mortality,
    )
    require_valid(params)
    mc_defaults = McConfig()
    mc = McConfig(
        n_paths=num("n_paths", int, mc_defaults.n_paths),
        seed=num("seed", int, mc_defaults.seed),
        steps_per_year=num("steps_per_year", int, mc_defaults.steps_per_year),
    )
    return RunConfig(
        params=params,
        mc=mc,
        ny=num("ny", int, DEFAULT_NY),
        pde_steps_per_year=num("pde_steps_per_year", int, DEFAULT_STEPS_PER_YEAR),
    )


def load_config(path, overrides: dict[str, str] | None = None) -> RunConfig:
    if path is None:
        return parse_config("", "<defaults>", overrides)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path), overrides)


def format_config(cfg: RunConfig) -> str:
    """Inverse of ``parse_config`` (``repr`` floats round-trip exactly)."""
    p = cfg.params
    m = p.mortality
    bands = ", ".join(f"{a!r}:{g!r}" for a, g in p.schedule.bands)
    lines = [
        f"r = {p.r!r}", f"sigma = {p.sigma!r}", f"alpha = {p.alpha!r}", f"beta = {p.beta!r}",
        f"gompertz_m = {m.m!r}", f"gompertz_b = {m.b!r}", f"age0 = {m.age0!r}", f"age_cap = {m.age_cap!r}",
        f"bands = {bands}",
        f"n_paths = {cfg.mc.n_paths}", f"seed = {cfg.mc.seed}", f"steps_per_year = {cfg.mc.steps_per_year}",
        f"ny = {cfg.ny}", f"pde_steps_per_year = {cfg.pde_steps_per_year}",
    ]
    return "\n".join(lines) + "\n"
