"""``smloc`` command-line interface.

Exit codes: 0 success, 2 infeasible scenario, 3 invalid input, 4 solver
failure or a bound violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import BoundViolationError, InfeasibleError, InvalidInputError, SolverError
from .io import csv_text, json_text, write_text
from .scenario import read_scenario
from .selection import online_evaluation, rank_offline, select_greedy

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3
EXIT_SOLVER = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _emit(args, name: str, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_text(Path(args.out) / name, text)


def _table(args, stem: str, columns, rows) -> None:
    if args.format == "json":
        _emit(args, f"{stem}.json", json_text([dict(zip(columns, r)) for r in rows]))
    else:
        _emit(args, f"{stem}.csv", csv_text(columns, rows))


def _scenario(args):
    if args.scenario is None:
        raise InvalidInputError("--scenario is required")
    return read_scenario(args.scenario)


def _directions(specs, dim):
    if not specs:
        return None
    out = []
    for s in specs:
        try:
            out.append([float(t) for t in s.split(",")])
        except ValueError:
            raise InvalidInputError(f"bad direction {s!r}; use comma-separated components") from None
    if any(len(d) != dim for d in out):
        raise InvalidInputError(f"directions need {dim} components")
    return np.array(out)


def cmd_certify(args) -> int:
    sc = _scenario(args)
    anchors = sc.anchor_set
    report = ex.certify(anchors, sc.bounds(anchors), _directions(args.direction, sc.dim), tol=args.tol)
    _emit(args, "certificate.json", json_text(report.to_dict()))
    return EXIT_INFEASIBLE if report.statuses["X"] == "infeasible" else EXIT_OK


SELECT_COLUMNS = ("rank", "indices", "e_score", "d_score", "box_area", "hybrid_bound")


def cmd_select(args) -> int:
    sc = _scenario(args)
    pool = sc.anchor_set
    policy = args.policy.upper()
    if args.greedy:
        ranked = [select_greedy(pool, args.k, policy)]
    else:
        ranked = rank_offline(pool, args.k, policy)
    if sc.has_measurements:
        bounds = sc.bounds(pool)
        ranked = [online_evaluation(pool, bounds, ev.indices) for ev in ranked]
    rows = [(r, " ".join(map(str, ev.indices)), ev.e_score, ev.d_score, ev.box_area, ev.hybrid_bound)
            for r, ev in enumerate(ranked, start=1)]
    _table(args, "selection", SELECT_COLUMNS, rows)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    seed = ex.MC_SEED if args.seed is None else args.seed
    res = ex.run_montecarlo(args.trials, args.N, args.k, args.delta, (args.r_inner, args.r_outer), seed, args.workers)
    if args.out is None:
        sys.stdout.write(ex.table1_text(res.summary))
        return EXIT_OK
    _emit(args, "table1.json", json_text(res.summary))
    _emit(args, "table1.txt", ex.table1_text(res.summary))
    _table(args, "scatter", ex.SCATTER_COLUMNS, res.scatter)
    _table(args, "cdf", ex.CDF_COLUMNS, res.cdf)
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows = ex.run_sweep(args.heights, args.delta)
    _table(args, "sweep", ex.SWEEP_COLUMNS, [tuple(r[c] for c in ex.SWEEP_COLUMNS) for r in rows])
    return EXIT_OK


def cmd_figure_data(args) -> int:
    if args.scenario is None:
        anchors, bounds, target = ex.demo_scenario()
    else:
        sc = read_scenario(args.scenario)
        anchors = sc.anchor_set
        bounds, target = sc.bounds(anchors), sc.target
    data = ex.figure_data(anchors, bounds, grid=args.grid, target=target)
    _emit(args, f"{args.kind}.json", json_text(data))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="smloc", description="Set-membership localization certificates and experiments.",
                formatter_class=fmt)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file (see README for the grammar)")
    common.add_argument("--seed", type=int, default=None, help=f"master seed (u64); montecarlo uses {ex.MC_SEED} when omitted")
    common.add_argument("--out", default=None, help="output directory; stdout when omitted")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    common.add_argument("--tol", type=float, default=ex.BOUND_TOL, help="relative slack for exact <= bound checks")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("certify", parents=[common], formatter_class=fmt, help="full certificate report")
    s.add_argument("--direction", action="append", help="direction as comma-separated components; repeatable")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("select", parents=[common], formatter_class=fmt, help="rank anchor subsets of a pool")
    s.add_argument("--k", type=int, required=True, help="subset size")
    s.add_argument("--policy", choices=("D", "E", "d", "e"), default="D", help="score to maximise")
    s.add_argument("--greedy", action="store_true", help="greedy additions instead of exhaustive ranking")
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("montecarlo", parents=[common], formatter_class=fmt, help="random annulus pools")
    s.add_argument("--trials", type=int, default=ex.MC_TRIALS, help="number of random pools")
    s.add_argument("--N", type=int, default=ex.MC_POOL, help="pool size")
    s.add_argument("--k", type=int, default=ex.MC_K, help="subset size")
    s.add_argument("--delta", type=float, default=ex.MC_DELTA, help="squared-range half width")
    s.add_argument("--r-inner", type=float, default=ex.MC_ANNULUS[0], help="inner annulus radius")
    s.add_argument("--r-outer", type=float, default=ex.MC_ANNULUS[1], help="outer annulus radius")
    s.add_argument("--workers", type=int, default=1, help="worker processes")
    s.set_defaults(func=cmd_montecarlo)

    s = sub.add_parser("sweep", parents=[common], formatter_class=fmt, help="apex-height sweep")
    s.add_argument("--heights", type=float, nargs="+", default=None,
                   help=f"apex heights (default: {ex.SWEEP_POINTS} log-spaced in [{ex.SWEEP_RANGE[0]}, {ex.SWEEP_RANGE[1]}])")
    s.add_argument("--delta", type=float, default=ex.SWEEP_DELTA, help="squared-range half width")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("figure-data", parents=[common], formatter_class=fmt, help="geometry dump for plotting")
    s.add_argument("--kind", choices=("method-demo",), default="method-demo", help="which figure to dump")
    s.add_argument("--grid", type=int, default=ex.DEMO_GRID, help="grid points per axis")
    s.set_defaults(func=cmd_figure_data)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors exit with EXIT_INVALID, --help with 0
        return exc.code
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"smloc: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvalidInputError as exc:
        print(f"smloc: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, BoundViolationError) as exc:
        print(f"smloc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
