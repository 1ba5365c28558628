"""Command-line interface.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from . import harness, ode
from .config import ConfigError, SimConfig
from .params import ParameterError, basic_offspring_number, threshold_rates
from .pde import NumericalAbort
from .simulation import run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

log = logging.getLogger("mosquito_sit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _base_config(args) -> SimConfig:
    if getattr(args, "preset", None) and getattr(args, "config", None):
        raise ConfigError("give either --preset or --config, not both")
    if getattr(args, "preset", None):
        cfg = cfgmod.preset(args.preset)
    elif getattr(args, "config", None):
        cfg = cfgmod.load(args.config)
    else:
        cfg = SimConfig()
    return cfgmod.apply_overrides(cfg, args.set or [])


def _equilibrium_rows(cfg: SimConfig, K: float) -> list[dict]:
    p = cfg.params
    rows = []
    for eq in ode.equilibria(p, K):
        eig = np.linalg.eigvals(ode.jacobian_at(eq.state, p, K))
        Q = eq.routh or (float("nan"),) * 3
        rows.append(
            {
                "kind": eq.kind.value,
                "E": eq.state[0],
                "F": eq.state[1],
                "M": eq.state[2],
                "stability": eq.stability.value,
                "max_real_eig": float(eig.real.max()),
                "Q1": Q[0],
                "Q2": Q[1],
                "Q3": Q[2],
            }
        )
    return rows


def _print_table(rows: list[dict]) -> None:
    if not rows:
        return
    cols = list(rows[0])
    print("  ".join(f"{c:>14}" for c in cols))
    for r in rows:
        print("  ".join(f"{r[c]:>14.6g}" if isinstance(r[c], float) else f"{r[c]:>14}" for c in cols))


def _write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def cmd_equilibria(args) -> int:
    cfg = _base_config(args)
    p = cfg.params
    r_minus, r_plus = threshold_rates(p, args.k)
    print(f"R = {basic_offspring_number(p):.6g}  r_minus = {r_minus:.6g}  r_plus = {r_plus:.6g}  K = {args.k:g}")
    rows = _equilibrium_rows(cfg, args.k)
    _print_table(rows)
    if args.csv:
        _write_csv(rows, args.csv)
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = _base_config(args)
    if not args.beta_e_values:
        return cmd_equilibria(args)
    rows = []
    for b in harness.parse_values(args.beta_e_values):
        p = cfg.params.replace(beta_E=b)
        r_minus, r_plus = threshold_rates(p, args.k)
        eqs = ode.equilibria(p, args.k)
        row = {"beta_E": b, "R": basic_offspring_number(p), "r_plus": r_plus, "n_equilibria": len(eqs)}
        for eq in eqs[1:]:
            row[f"{eq.kind.value}"] = eq.state[0]
            row[f"{eq.kind.value}_stability"] = eq.stability.value
        rows.append(row)
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    rows = [{k: r.get(k, "") for k in keys} for r in rows]
    _print_table(rows)
    if args.csv:
        _write_csv(rows, args.csv)
    return EXIT_OK


def cmd_simulate_ode(args) -> int:
    cfg = _base_config(args)
    p = cfg.params
    try:
        s0 = [float(v) for v in args.initial.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse --initial {args.initial!r}") from None
    if len(s0) == 3:
        rhs = lambda y: ode.life_cycle_rhs(y, p, args.k)  # noqa: E731
        names = ["E", "F", "M"]
    elif len(s0) == 4:
        rhs = lambda y: ode.sit_rhs(y, p, args.k, u=0.0)  # noqa: E731
        names = ["E", "F", "M", "Ms"]
    else:
        raise ConfigError("--initial needs 3 (E,F,M) or 4 (E,F,M,Ms) values")
    t, Y = ode.integrate(rhs, s0, args.dt, args.t_max)
    print("final state at t = %g: %s" % (t[-1], ", ".join(f"{n}={v:.6g}" for n, v in zip(names, Y[-1]))))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *names])
            for ti, yi in zip(t, Y):
                w.writerow([repr(float(ti)), *(repr(float(v)) for v in yi)])
    return EXIT_OK


def cmd_simulate_pde(args) -> int:
    cfg = _base_config(args)
    report = run(cfg)
    out = harness.write_outputs(report, args.out)
    print(harness.format_summary(report), end="")
    print(f"outputs written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _base_config(args)
    values = harness.parse_values(args.values)
    reports = harness.sweep(cfg, args.axis, values, jobs=args.jobs)
    print(harness.summary_table(args.axis, values, reports))
    if args.out:
        for v, r in zip(values, reports):
            harness.write_outputs(r, f"{args.out}/{args.axis}={v:g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mosquito-sit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def config_args(sp, presets=False):
        if presets:
            sp.add_argument("--preset", choices=cfgmod.PRESETS)
        sp.add_argument("--config", help="INI config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override, e.g. params.beta_E=0.1")

    for name, fn, helptext in (
        ("equilibria", cmd_equilibria, "list equilibria of the homogeneous model"),
        ("stability", cmd_stability, "stability table, optionally over beta_E values"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--k", type=float, default=500.0, help="carrying capacity")
        sp.add_argument("--csv", help="write the table as CSV")
        if name == "stability":
            sp.add_argument("--beta-e-values", help="comma-separated beta_E values")
        config_args(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("simulate-ode", help="integrate the homogeneous model with RK4")
    sp.add_argument("--k", type=float, default=500.0)
    sp.add_argument("--initial", required=True, help="E,F,M or E,F,M,Ms")
    sp.add_argument("--dt", type=float, default=0.1)
    sp.add_argument("--t-max", type=float, default=400.0)
    sp.add_argument("--csv")
    config_args(sp)
    sp.set_defaults(func=cmd_simulate_ode)

    sp = sub.add_parser("simulate-pde", help="run a reaction-diffusion simulation")
    sp.add_argument("--out", required=True, help="output directory")
    config_args(sp, presets=True)
    sp.set_defaults(func=cmd_simulate_pde)

    sp = sub.add_parser("sweep", help="independent runs over one parameter")
    sp.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--out", help="write each run under OUT/AXIS=VALUE")
    sp.add_argument("--jobs", type=int, default=1)
    config_args(sp, presets=True)
    sp.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG
    if args.command is None:
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalAbort, ode.IntegrationError) as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
