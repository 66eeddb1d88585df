"""Command-line entry point: ``glwb <subcommand> ...``.

Exit codes: 0 success, 1 invalid input or usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, region as region_mod
from .config import RunConfig, load_config
from .errors import InvalidInputError
from .montecarlo import FixedDelay, NeverInitiate, RegionPolicy, simulate_value
from .mortality import annuity_price
from .pde_engine import Grid, solve_v0, solve_v1_all, solve_v2

log = logging.getLogger("glwb")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _overrides(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise InvalidInputError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _config(args) -> RunConfig:
    overrides = _overrides(args.set)
    for flag, key in (("seed", "seed"), ("n_paths", "n_paths"), ("steps_per_year", "steps_per_year")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = str(value)
    return load_config(args.config, overrides)


def _common(p: argparse.ArgumentParser, mc: bool = False) -> None:
    p.add_argument("--config", help="key = value parameter file (defaults: moderate-volatility base case)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key; repeatable")
    if mc:
        p.add_argument("--seed", type=int)
        p.add_argument("--n-paths", dest="n_paths", type=int)
        p.add_argument("--steps-per-year", dest="steps_per_year", type=int)


def _grid(cfg: RunConfig, start_age=None) -> Grid:
    return Grid.for_params(cfg.params, start_age=start_age, steps_per_year=cfg.pde_steps_per_year, ny=cfg.ny)


def cmd_annuity(args) -> None:
    cfg = _config(args)
    print(repr(annuity_price(cfg.params.mortality, cfg.params.r, args.age)))


def cmd_solve(args) -> None:
    cfg = _config(args)
    params = cfg.params
    grid = _grid(cfg, args.start_age)
    prefix = Path(args.out_prefix)
    v1 = solve_v1_all(params, grid)
    v0, _ = solve_v0(params, grid, v1)
    v0.to_csv(f"{prefix}_v0.csv")
    for s in v1:
        s.to_csv(f"{prefix}_v1_band{s.band}.csv")
    ages = grid.ages(params)
    v2 = [solve_v2(params, grid, k) for k in range(len(params.schedule))]
    with open(f"{prefix}_v2.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["age"] + [f"band{k}" for k in range(len(v2))])
        for n, a in enumerate(ages):
            w.writerow([repr(float(a))] + [repr(float(col[n])) for col in v2])
    print(f"wrote {prefix}_v0.csv, {len(v1)} v1 surface(s), {prefix}_v2.csv")


def cmd_region(args) -> None:
    cfg = _config(args)
    reg = region_mod.solve_region(cfg.params, cfg.pde_steps_per_year, cfg.ny)
    region_mod.export_region_csv(reg, args.out)
    report = region_mod.summary_report(reg)
    if args.summary:
        Path(args.summary).write_text(report)
    else:
        sys.stdout.write(report)


def _print_breakeven(res, label: str) -> None:
    flag = "" if res.status == "root" else f" ({res.status})"
    se = f" stderr(f)={res.stderr:.3g}" if np.isfinite(res.stderr) else ""
    print(f"{label} break-even beta = {100 * res.beta:.2f}%{flag}{se}")


def cmd_breakeven(args) -> None:
    cfg = _config(args)
    q = analysis.BreakevenQuery(age=args.age, y=args.y, delay=args.delay, method=args.method,
                                bracket=(args.lo, args.hi), tol=args.tol)
    res = analysis.breakeven(q, cfg.params, cfg.mc, cfg.pde_steps_per_year, cfg.ny)
    _print_breakeven(res, args.method.upper())
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["age", "y", "delay", "method", "beta", "status", "initiate_value", "wait_value", "stderr"])
            w.writerow([args.age, args.y, args.delay, args.method, repr(res.beta), res.status,
                        repr(res.initiate_value), repr(res.wait_value), repr(res.stderr)])


def cmd_table1(args) -> None:
    cfg = _config(args)
    rows = analysis.run_table1(cfg.params, None if args.no_mc else cfg.mc, delay=args.delay,
                               steps_per_year=cfg.pde_steps_per_year, ny=cfg.ny)
    analysis.write_table1_csv(rows, args.out)
    for row in rows:
        mc = f"{100 * row.mc.beta:6.2f}%" if row.mc else "   n/a"
        print(f"age {row.age:g}  y={row.y:.1f}  PDE {100 * row.pde.beta:6.2f}%  MC {mc}")


def _strategy(text: str):
    kind, _, arg = text.partition(":")
    if kind == "delay":
        return FixedDelay(float(arg or 0))
    if kind == "never":
        return NeverInitiate()
    if kind == "region":
        if not arg:
            raise InvalidInputError("region strategy needs a CSV path: region:FILE")
        return RegionPolicy(region_mod.read_region_csv(arg))
    raise InvalidInputError(f"unknown strategy {text!r}; use delay:YEARS, never or region:FILE")


def cmd_mc(args) -> None:
    cfg = _config(args)
    rows = []
    for text in args.strategy:
        est, se = simulate_value(cfg.params, args.age, args.y, _strategy(text), cfg.mc, workers=args.workers)
        rows.append((text, est, se))
        print(f"{text:<20} {est:.6f} +/- {se:.6f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["strategy", "age", "y", "estimate", "stderr", "n_paths", "seed", "steps_per_year"])
            for text, est, se in rows:
                w.writerow([text, args.age, args.y, repr(est), repr(se), cfg.mc.n_paths, cfg.mc.seed,
                            cfg.mc.steps_per_year])


def _report_lines(label, rep) -> list[str]:
    verdict = "holds" if rep.a_subset_of_b else "FAILS"
    lines = [f"{label}: containment {verdict}; differing cells {rep.n_differing}; "
             f"reverse containment {'yes' if rep.b_subset_of_a else 'no'}"]
    for age, y in rep.violations[:20]:
        lines.append(f"    violation at age {age:.4f}, y {y:.4f}")
    return lines


def cmd_statics(args) -> None:
    lines = []
    if args.a or args.b:
        if not (args.a and args.b):
            raise InvalidInputError("--a and --b must be given together")
        rep = region_mod.compare_regions(region_mod.read_region_csv(args.a), region_mod.read_region_csv(args.b))
        lines += _report_lines(f"delay({args.a}) within delay({args.b})", rep)
    else:
        cfg = _config(args)
        cache = {}

        def solved(p):
            if repr(p) not in cache:
                cache[repr(p)] = region_mod.solve_region(p, cfg.pde_steps_per_year, cfg.ny)
            return cache[repr(p)]

        for label, a, b in analysis.table2_moves(cfg.params):
            rep = region_mod.compare_regions(solved(a), solved(b))
            lines += _report_lines(label, rep)
        viol = region_mod.age_monotonicity_violations(solved(cfg.params))
        lines.append(f"delay shrinks with age: {'holds' if not viol else f'FAILS at {len(viol)} cells'}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="glwb", description="Optimal GLWB initiation: PDE regions, break-even bonuses, MC checks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("annuity", help="print the life-annuity price at an age")
    _common(p)
    p.add_argument("--age", type=float, required=True)
    p.set_defaults(func=cmd_annuity)

    p = sub.add_parser("solve", help="write v0, v1 (per band) and v2 as CSV")
    _common(p)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--start-age", type=float)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("region", help="write the initiate/delay region CSV")
    _common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", help="write the text summary here instead of stdout")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("breakeven", help="break-even bonus rate for one (age, y)")
    _common(p, mc=True)
    p.add_argument("--age", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--delay", type=float, default=5.0)
    p.add_argument("--method", choices=("pde", "mc"), default="pde")
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=0.20)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_breakeven)

    p = sub.add_parser("table1", help="break-even table for ages 55/65/75 and y 1.0/0.8/0.5")
    _common(p, mc=True)
    p.add_argument("--out", required=True)
    p.add_argument("--delay", type=float, default=5.0)
    p.add_argument("--no-mc", action="store_true", help="PDE column only")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("mc", help="Monte Carlo value of initiation strategies")
    _common(p, mc=True)
    p.add_argument("--age", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--strategy", action="append", required=True,
                   help="delay:YEARS, never, or region:REGION.csv; repeatable")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("statics", help="delay-set containment: two region CSVs, or the full parameter sweep")
    _common(p)
    p.add_argument("--a", help="region CSV whose delay set should be contained ...")
    p.add_argument("--b", help="... in this region's delay set")
    p.add_argument("--out")
    p.set_defaults(func=cmd_statics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
