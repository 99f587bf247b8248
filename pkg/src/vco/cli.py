"""Command-line front end.

Exit codes: 0 success, 1 validation found problems, 2 malformed input,
3 infeasible instance, 4 iteration limit (document still written),
5 oracle size guard, 6 a replay emptied a committee.
"""

from __future__ import annotations

import argparse
import csv
import sys
from typing import Sequence

from . import io as vio
from .benders import DEFAULT_TOL, Infeasible, IterationLimit, solve_normal_case, solve_vco
from .compare import FAULT_TARGETS, FaultModel, Workload, compare, write_csv
from .model import BackupPlan, ConfigurationError, validate_backup_plan, validate_configuration
from .oracle import DEFAULT_SIZE_GUARD, SizeGuardExceeded, oracle_solve_vco
from .sequencer import EmptyCommittee, replay_failure_schedule
from .sim import STRATEGIES

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_MALFORMED = 2
EXIT_INFEASIBLE = 3
EXIT_ITERATION_LIMIT = 4
EXIT_SIZE_GUARD = 5
EXIT_EMPTY_COMMITTEE = 6

GLOBAL_DEFAULTS = {"tol": DEFAULT_TOL, "seed": 0, "jitter": 0.1, "timeout_ms": None,
                   "size_guard": DEFAULT_SIZE_GUARD}


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand without clobbering each other
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="Benders gap tolerance in ms")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for bench runs without --seeds")
    p.add_argument("--jitter", type=float, default=argparse.SUPPRESS, help="multiplicative delay noise for bench")
    p.add_argument("--timeout-ms", dest="timeout_ms", type=float, default=argparse.SUPPRESS,
                   help="view-change timeout for bench (default: 3x largest delay)")
    p.add_argument("--size-guard", dest="size_guard", type=int, default=argparse.SUPPRESS,
                   help="largest n the oracle will enumerate")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="vco", parents=[common],
                                     description="View-change-aware committee configuration for parallel BFT.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve an instance exactly (heuristic above n=30)")
    p.add_argument("instance")
    p.add_argument("--mode", choices=["vco", "normal"], default="vco")
    p.add_argument("--out", help="where to write the configuration document")

    p = sub.add_parser("oracle", parents=[common], help="brute-force optimum for small instances")
    p.add_argument("instance")

    p = sub.add_parser("replay", parents=[common], help="replay a leader failure schedule")
    p.add_argument("instance")
    p.add_argument("config")
    p.add_argument("schedule")

    p = sub.add_parser("bench", parents=[common], help="simulate strategies and write a metrics CSV")
    p.add_argument("instance")
    p.add_argument("--strategies", default="vco,random", help="comma list from: " + ", ".join(STRATEGIES))
    p.add_argument("--seeds", help="comma list or range a-b (default: --seed)")
    p.add_argument("--faults", type=int, default=0, help="number of crashes per run")
    p.add_argument("--fault-target", choices=FAULT_TARGETS, default="leaders")
    p.add_argument("--fault-window", type=float, nargs=2, default=(100.0, 1000.0), metavar=("START", "END"))
    p.add_argument("--rate", type=float, default=10.0, help="requests per committee per second")
    p.add_argument("--requests", type=int, default=200, help="total requests per run")
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("validate", parents=[common], help="check an instance and optionally a configuration")
    p.add_argument("instance")
    p.add_argument("config", nargs="?")
    return parser


def _parse_seeds(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1) if not part.startswith("-") else part[1:].split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("no seeds given")
    return out


def cmd_solve(args) -> int:
    inst = vio.load_instance(args.instance)
    code = EXIT_OK
    try:
        if args.mode == "vco":
            res = solve_vco(inst, tol=args.tol)
            cfg, plan, value, stats = res.cfg, res.plan, res.value, res.state.stats()
        else:
            cfg, value = solve_normal_case(inst)
            plan, stats = BackupPlan({}), {"certified": inst.n <= 30}
    except Infeasible as exc:
        print(f"error=infeasible detail={exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IterationLimit as exc:
        if exc.result is None:
            print(f"error=iteration_limit detail={exc}", file=sys.stderr)
            return EXIT_ITERATION_LIMIT
        res = exc.result
        cfg, plan, value = res.cfg, res.plan, res.value
        stats = dict(res.state.stats(), certified=False)
        code = EXIT_ITERATION_LIMIT
    if args.out:
        vio.save_configuration(args.out, cfg, plan, value, stats)
    print(f"value={value!r}")
    print(f"gap={stats.get('gap')!r}")
    print(f"certified={stats.get('certified')}")
    print("leader_of=" + ",".join(map(str, cfg.leader_of)))
    return code


def cmd_oracle(args) -> int:
    inst = vio.load_instance(args.instance)
    try:
        res = oracle_solve_vco(inst, size_guard=args.size_guard)
    except SizeGuardExceeded as exc:
        print(f"error=size_guard detail={exc}", file=sys.stderr)
        return EXIT_SIZE_GUARD
    except ValueError as exc:
        print(f"error=infeasible detail={exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"value={res.best_value!r}")
    print("leader_of=" + ",".join(map(str, res.best_cfg.leader_of)))
    print("backups=" + ",".join(f"{k}:{v}" for k, v in res.best_plan.backup_of.items()))
    print(f"enumerated={res.enumerated_count}")
    return EXIT_OK


def cmd_replay(args) -> int:
    inst = vio.load_instance(args.instance)
    cfg, _, _, _ = vio.load_configuration(args.config)
    schedule = vio.load_schedule(args.schedule)
    try:
        state, trace = replay_failure_schedule(cfg, inst, schedule)
    except ConfigurationError as exc:
        print(f"error=invalid_configuration detail={exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except EmptyCommittee as exc:
        print(f"error=empty_committee detail={exc}", file=sys.stderr)
        return EXIT_EMPTY_COMMITTEE
    except ValueError as exc:
        print(f"error=malformed detail={exc}", file=sys.stderr)
        return EXIT_MALFORMED
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["view", "failed", "backup", "exd_value", "warning"])
    for rec in trace:
        w.writerow(rec.as_row())
    print(f"final_view={state.view}")
    print("leader_of=" + ",".join(map(str, state.cfg.leader_of)))
    return EXIT_OK


def cmd_bench(args) -> int:
    inst = vio.load_instance(args.instance)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    bad = [s for s in strategies if s not in STRATEGIES]
    if not strategies or bad:
        print(f"error=malformed detail=unknown strategies {bad}", file=sys.stderr)
        return EXIT_MALFORMED
    try:
        seeds = _parse_seeds(args.seeds) if args.seeds else [args.seed]
    except ValueError as exc:
        print(f"error=malformed detail={exc}", file=sys.stderr)
        return EXIT_MALFORMED
    faults = FaultModel(crashes=args.faults, target=args.fault_target, window=tuple(args.fault_window))
    table = compare(inst, strategies, Workload(rate=args.rate, requests=args.requests), faults, seeds,
                    jitter=args.jitter, timeout=args.timeout_ms)
    with open(args.out, "w", newline="") as fh:
        write_csv(table, fh)
    for agg in table.aggregates:
        print(agg.line())
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = vio.load_instance(args.instance)
    problems: list[str] = []
    if not inst.feasible:
        problems.append(f"n={inst.n} is below the minimum committee size {inst.min_committee}")
    if args.config:
        cfg, plan, _, _ = vio.load_configuration(args.config)
        problems += [str(v) for v in validate_configuration(inst, cfg)]
        if not problems and plan.backup_of:
            problems += [str(v) for v in validate_backup_plan(inst, cfg, plan)]
    for p in problems:
        print(f"violation {p}")
    print("valid" if not problems else "invalid")
    return EXIT_OK if not problems else EXIT_INVALID


COMMANDS = {"solve": cmd_solve, "oracle": cmd_oracle, "replay": cmd_replay, "bench": cmd_bench,
            "validate": cmd_validate}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    try:
        return COMMANDS[args.command](args)
    except vio.DocumentError as exc:
        print(f"error=malformed detail={exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
