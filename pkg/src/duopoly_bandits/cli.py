"""Command line entry point.

    duopoly-bandits [--config FILE] [--seed S] [--threads N] [--out DIR] [--raw] FAMILY [overrides]

Exit codes: 0 success, 2 invalid configuration, 3 file system failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields

import yaml

from . import report, runner, sweep
from .errors import InvalidConfig
from .sweep import SweepSpec

OUT_ENV = "DUOPOLY_BANDITS_OUT"

# (flag, spec field, parser for one item, is a list)
OVERRIDES = [
    ("--instances", "instances", str, True),
    ("--K", "K", int, False),
    ("--N", "N", int, False),
    ("--T", "T", int, False),
    ("--M", "M", int, False),
    ("--T0", "T0", int, True),
    ("--algorithms", "algorithms", str, True),
    ("--pairs", "pairs", str, True),
    ("--deg-epsilon", "deg_epsilon", float, False),
    ("--X", "X", int, True),
    ("--advantage-X", "advantage_X", int, True),
    ("--variants", "variants", str, True),
    ("--entry-T0", "entry_T0", int, False),
    ("--hmr-epsilon", "hmr_epsilon", float, True),
    ("--hmr-T", "hmr_T", int, True),
    ("--hmr-T0", "hmr_T0", int, False),
    ("--firm-counts", "firm_counts", int, True),
    ("--multi-T0", "multi_T0", int, False),
    ("--isolation-T0", "isolation_T0", int, False),
    ("--snapshot-t", "snapshot_t", int, True),
    ("--welfare-X", "welfare_X", int, False),
    ("--arm-tie-break", "arm_tie_break", str, False),
]


def _list_of(item):
    def parse(text: str):
        try:
            return [item(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _add_globals(p: argparse.ArgumentParser, default) -> None:
    p.add_argument("--config", default=default, help="YAML file of sweep settings")
    p.add_argument("--seed", type=int, default=default, help="master seed")
    p.add_argument("--threads", type=int, default=default, help="worker processes")
    p.add_argument("--out", default=default, help=f"output directory (env {OUT_ENV})")
    p.add_argument("--raw", action="store_true", default=default,
                   help="also write one CSV line per simulation")
    p.add_argument("-v", "--verbose", action="store_true", default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duopoly-bandits",
        description="Simulate bandit-algorithm firms competing for myopic agents.")
    _add_globals(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)

    overrides = argparse.ArgumentParser(add_help=False)
    for flag, name, item, is_list in OVERRIDES:
        overrides.add_argument(flag, dest=name, type=_list_of(item) if is_list else item,
                               default=None, metavar=name.upper() + ("[,...]" if is_list else ""))
    overrides.add_argument("--entrant-shared-rows", dest="entrant_after_monopoly",
                           action="store_false", default=None,
                           help="entrant warms up on rows 0..T0-1 instead of X..X+T0-1")
    # Globals may also follow the subcommand; SUPPRESS keeps earlier values.
    globals_after = argparse.ArgumentParser(add_help=False)
    _add_globals(globals_after, argparse.SUPPRESS)

    helps = {
        "isolation": "reputation trajectories of each algorithm alone",
        "duopoly": "simultaneous-start duopoly share matrices",
        "temp-monopoly": "incumbent head start, entrant share matrices",
        "advantage": "head start split into data-only and reputation-only parts",
        "hmr": "HardMax vs HardMax with random agents, several horizons",
        "multi-firm": "welfare and EEOG as more DG firms compete",
        "welfare": "regret of the equilibrium profile of each market structure",
        "all": "every family above, then the equilibrium report",
    }
    for name, text in helps.items():
        sub.add_parser(name, help=text, parents=[overrides, globals_after])
    nash = sub.add_parser("nash", help="pure equilibria and dominant algorithms from summary CSVs",
                          parents=[globals_after])
    nash.add_argument("inputs", nargs="*", help="summary CSVs (default: those in --out)")
    nash.add_argument("--tol", type=float, default=None,
                      help="share differences up to this count as ties")
    return parser


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise InvalidConfig(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path}: expected key/value settings")
    known = {f.name: f for f in fields(SweepSpec)}
    out = {}
    for key, value in data.items():
        name = str(key).replace("-", "_")
        if name not in known:
            raise InvalidConfig(f"{path}: unknown setting {key!r}")
        default = getattr(SweepSpec(), name)
        if isinstance(default, list) and not isinstance(value, list):
            value = [v.strip() for v in str(value).split(",")] if isinstance(value, str) else [value]
            value = [type(default[0])(v) for v in value] if default else value
        out[name] = value
    return out


def make_spec(args: argparse.Namespace) -> SweepSpec:
    settings = load_config(args.config)
    for name in [o[1] for o in OVERRIDES] + ["entrant_after_monopoly"]:
        v = getattr(args, name, None)
        if v is not None:
            settings[name] = v
    for name in ("seed", "threads", "out"):
        if getattr(args, name, None) is not None:
            settings[name] = getattr(args, name)
    if getattr(args, "raw", None):
        settings["raw"] = True
    settings.setdefault("out", os.environ.get(OUT_ENV, "results"))
    try:
        return SweepSpec(**settings)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from None


def _print_matrices(rows) -> None:
    for fam in runner.MATRIX_FAMILIES:
        sel = [r for r in rows if r.family == fam]
        if sel:
            print(report.format_matrices(report.share_matrices(sel, fam in ("duopoly", "hmr"))))


def _print_nash(reports) -> None:
    for n in reports:
        family, instance, K, T, T0, X, variant, rule, eps = n.key
        where = f"{family:13s} {instance:18s} T={T} T0={T0}"
        if family in ("temp-monopoly", "advantage"):
            where += f" X={X} {variant}"
        if rule != "HM":
            where += f" {rule}({eps:g})"
        _, eq, rdom, cdom = n.as_row()[-4:]
        print(f"{where}  equilibria={eq}  row-dominant={rdom}  col-dominant={cdom}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        spec = make_spec(args)
        if args.command == "nash":
            paths = args.inputs or report.find_summaries(spec.out)
            if not paths:
                raise InvalidConfig(f"no summary CSVs found in {spec.out}")
            tol = spec.nash_tol if args.tol is None else args.tol
            _print_nash(runner.run_nash(paths, tol, os.path.join(spec.out, "nash.csv")))
            return 0
        families = list(sweep.FAMILIES) if args.command == "all" else [args.command]
        outcome = runner.run_sweep(spec, families)
        _print_matrices(outcome.all_rows)
        if args.command == "all":
            _print_nash(runner.run_nash([os.path.join(spec.out, "summary.csv")], spec.nash_tol,
                                        os.path.join(spec.out, "nash.csv")))
        for f in outcome.files:
            print(f"wrote {f}")
        return 0
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
