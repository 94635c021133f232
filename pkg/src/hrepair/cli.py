"""The hrepair command line.

Subcommands: plan, repair, compile, verify, bench, summarize, plotdata.
Exit codes: 0 success, 1 unrepairable/unsolvable, 2 timeout, 3 input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from pathlib import Path

from .bench import (
    DEFAULT_BATCHES,
    DEFAULT_TIMEOUT_SECS,
    PLOT_KINDS,
    load_manifest,
    plotdata,
    read_csv,
    run_batch,
    summarize,
    write_csv,
)
from .disturb import classify, inject
from .errors import HrepairError
from .hddl import parse_disturbances, parse_domain, parse_problem
from .ipyhopper import repair_ip
from .jsonio import plan_to_json, tree_to_json
from .microgen import random_micro_instance
from .model import make_universe
from .oracle import check_theorems
from .planner import Bound, SOLVED, SearchBudget, TIMEOUT, UNSOLVABLE, solve
from .repairs import NO_REPAIR_NEEDED, SUCCESS, TIMEOUT_OUTCOME, UNREPAIRABLE
from .rewrite import compile_repair, emit_hddl, repair_rw
from .shopfixer import repair_sf
from .tree import visible_plan

EXIT_OK = 0
EXIT_UNSOLVABLE = 1
EXIT_TIMEOUT = 2
EXIT_INPUT = 3

STRATEGY_FNS = {"rw": repair_rw, "sf": repair_sf, "ip": repair_ip}


def _budget(args: argparse.Namespace) -> SearchBudget:
    budget = SearchBudget(wall_secs=args.timeout_secs)
    if getattr(args, "bound_depth", None):
        budget.max_depth = args.bound_depth
    return budget


def _bound(args: argparse.Namespace) -> Bound:
    return Bound(args.bound_depth or 12, args.bound_nodes or 120)


def _load_inputs(args: argparse.Namespace, with_dist: bool = False):
    domain = parse_domain(Path(args.domain).read_text(), args.domain)
    problem = parse_problem(Path(args.problem).read_text(), domain, args.problem)
    if not with_dist:
        return domain, problem, None
    specs = parse_disturbances(Path(args.disturbances).read_text(), domain, args.disturbances)
    if args.disturbance:
        specs = [s for s in specs if s.name == args.disturbance]
        if not specs:
            raise HrepairError(f"no disturbance named {args.disturbance!r}")
    return domain, problem, specs


def _make_rp(args: argparse.Namespace, budget: SearchBudget):
    domain, problem, specs = _load_inputs(args, with_dist=True)
    base = solve(domain, problem.init, problem.tasks, budget, make_universe(domain, problem))
    if base.status != SOLVED or base.tree is None:
        raise HrepairError(f"base problem not solvable ({base.status})")
    spec = specs[0]
    position = None if args.position is None else args.position
    rng = random.Random(args.seed)
    return inject(base.tree, domain, problem, spec, position, rng)


def cmd_plan(args: argparse.Namespace) -> int:
    domain, problem, _ = _load_inputs(args)
    result = solve(domain, problem.init, problem.tasks, _budget(args), make_universe(domain, problem))
    if result.status == UNSOLVABLE:
        print("unsolvable")
        return EXIT_UNSOLVABLE
    if result.status == TIMEOUT:
        print(f"timeout ({result.reason})")
        return EXIT_TIMEOUT
    assert result.tree is not None
    for a in visible_plan(result.tree):
        print(a)
    if args.out:
        Path(args.out).write_text(tree_to_json(result.tree))
    return EXIT_OK


def cmd_repair(args: argparse.Namespace) -> int:
    budget = _budget(args)
    rp = _make_rp(args, budget)
    report = classify(rp)
    print(f"classification: class {report.classification}"
          f" (anomaly={report.anomaly}, task-failure={report.task_failure is not None},"
          f" action-failure={report.action_failure is not None})")
    outcome = STRATEGY_FNS[args.strategy](rp, budget)
    print(f"outcome: {outcome.status}")
    if outcome.status in (SUCCESS, NO_REPAIR_NEEDED):
        assert outcome.tree is not None
        full = [str(a) for a in rp.pi_x if not a.is_dummy()]
        full += [str(a) for a in visible_plan(outcome.tree)]
        print("repaired plan:", " ".join(full))
        if args.out:
            Path(args.out).write_text(tree_to_json(outcome.tree))
        return EXIT_OK
    if outcome.status == UNREPAIRABLE:
        return EXIT_UNSOLVABLE
    return EXIT_TIMEOUT


def cmd_compile(args: argparse.Namespace) -> int:
    budget = _budget(args)
    rp = _make_rp(args, budget)
    rw = compile_repair(rp)
    domain_text, problem_text = emit_hddl(rw, rp)
    Path(args.out_domain).write_text(domain_text)
    Path(args.out_problem).write_text(problem_text)
    print(f"wrote {args.out_domain} and {args.out_problem}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    budget = _budget(args)
    budget.max_repair_rounds = args.rounds
    bound = _bound(args)
    reports = []
    ok = True
    if args.random:
        checked = seed = 0
        while checked < args.random:
            inst = random_micro_instance(seed + args.seed * 1_000_003)
            seed += 1
            if inst is None:
                continue
            rep = check_theorems(inst.rp, bound, budget)
            ok = ok and rep.ok
            reports.append({"instance": f"seed-{seed - 1}", **rep.summary()})
            checked += 1
            if not rep.ok:
                break
    else:
        if not (args.domain and args.problem and args.disturbances):
            raise HrepairError("verify needs domain/problem/disturbance files, or --random N")
        rp = _make_rp(args, budget)
        rep = check_theorems(rp, bound, budget)
        ok = rep.ok
        reports.append(rep.summary())
    doc = {"ok": ok, "reports": reports if args.full else reports[-5:], "checked": len(reports)}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK if ok else EXIT_UNSOLVABLE


def cmd_bench(args: argparse.Namespace) -> int:
    entries = load_manifest(args.suite)
    budget = SearchBudget(wall_secs=args.timeout_secs)
    records = run_batch(entries, args.batches, args.seed, budget)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(records, fh)
        print(f"wrote {len(records)} rows to {args.out}")
    else:
        write_csv(records, sys.stdout)
    return EXIT_OK


def cmd_summarize(args: argparse.Namespace) -> int:
    with open(args.csv, newline="") as fh:
        rows = read_csv(fh)
    table = summarize(rows)
    if args.format == "json":
        print(json.dumps(table, indent=2))
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(table[0].keys() if table else [])
        for row in table:
            writer.writerow(row.values())
    return EXIT_OK


def cmd_plotdata(args: argparse.Namespace) -> int:
    with open(args.csv, newline="") as fh:
        rows = read_csv(fh)
    header, data = plotdata(rows, args.kind)
    writer = csv.writer(sys.stdout)
    writer.writerow(header)
    for row in data:
        writer.writerow(row)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hrepair", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, dist: bool = False) -> None:
        p.add_argument("domain", help="domain file (.hddl)")
        p.add_argument("problem", help="problem file (.hddl)")
        if dist:
            p.add_argument("disturbances", help="disturbance file (.dist.hddl)")
            p.add_argument("--disturbance", help="pick one disturbance by name")
            p.add_argument("--position", type=int, default=None, help="place after this action index")
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--timeout-secs", type=float, default=DEFAULT_TIMEOUT_SECS)
        p.add_argument("--bound-depth", type=int, default=None)
        p.add_argument("--bound-nodes", type=int, default=None)

    p = sub.add_parser("plan", help="solve a problem and print its plan")
    common(p)
    p.add_argument("--out", help="write the solution tree as canonical JSON")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("repair", help="inject a disturbance and repair")
    common(p, dist=True)
    p.add_argument("--strategy", choices=("rw", "sf", "ip"), required=True)
    p.add_argument("--out", help="write the repaired unexecuted tree as JSON")
    p.set_defaults(fn=cmd_repair)

    p = sub.add_parser("compile", help="emit the rewritten domain/problem as HDDL")
    common(p, dist=True)
    p.add_argument("--out-domain", required=True)
    p.add_argument("--out-problem", required=True)
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("verify", help="enumerate solution sets and check containments")
    p.add_argument("domain", nargs="?", help="domain file (.hddl); omit with --random")
    p.add_argument("problem", nargs="?", help="problem file (.hddl)")
    p.add_argument("disturbances", nargs="?", help="disturbance file (.dist.hddl)")
    p.add_argument("--disturbance", help="pick one disturbance by name")
    p.add_argument("--position", type=int, default=None, help="place after this action index")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout-secs", type=float, default=DEFAULT_TIMEOUT_SECS)
    p.add_argument("--bound-depth", type=int, default=None)
    p.add_argument("--bound-nodes", type=int, default=None)
    p.add_argument("--random", type=int, default=0, help="check N random micro-instances instead")
    p.add_argument("--rounds", type=int, default=4, help="repair-round bound for enumeration")
    p.add_argument("--full", action="store_true", help="emit every per-instance report")
    p.add_argument("--out", help="write the JSON report here too")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="run a batched repair experiment")
    p.add_argument("--suite", default="builtin", help="manifest path, or 'builtin'")
    p.add_argument("--batches", type=int, default=DEFAULT_BATCHES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout-secs", type=float, default=DEFAULT_TIMEOUT_SECS)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("summarize", help="success/runtime table from a bench CSV")
    p.add_argument("csv")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(fn=cmd_summarize)

    p = sub.add_parser("plotdata", help="plot-ready columns from a bench CSV")
    p.add_argument("csv")
    p.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p.set_defaults(fn=cmd_plotdata)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except HrepairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
