"""Experiment harness: batched repair runs, CSV accounting, plot data.

Each batch runs every suite problem once with one injected disturbance,
randomly chosen among the applicable ones and randomly placed, under a
per-run wall-clock limit.  Outcomes separate genuine success, repairs
proven impossible, resource exhaustion, and runs where nothing needed
repairing.  Wall-clock times (not CPU times) are recorded in
milliseconds with two decimals; rows are reproducible under a fixed
seed up to the timing columns.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import statistics
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

from .disturb import InapplicableDisturbanceError, classify, inject
from .errors import HrepairError
from .fixtures import Suite
from .hddl import parse_disturbances, parse_domain, parse_problem
from .ipyhopper import repair_ip
from .model import apply_plan, make_universe
from .planner import SOLVED, SearchBudget, solve
from .repairs import NO_REPAIR_NEEDED, RepairOutcome, SUCCESS
from .rewrite import repair_rw
from .shopfixer import repair_sf
from .tree import changed_node_count, find_tree_failure, visible_plan

STRATEGIES: dict[str, Callable] = {"rw": repair_rw, "sf": repair_sf, "ip": repair_ip}

CSV_COLUMNS = [
    "domain",
    "problem",
    "batch",
    "seed",
    "strategy",
    "outcome",
    "wall_ms",
    "stability",
    "plan_len_before",
    "plan_len_after",
    "classification",
    "disturbance",
    "position",
]

DEFAULT_BATCHES = 50
DEFAULT_TIMEOUT_SECS = 300.0


@dataclass
class RunRecord:
    """One strategy run on one disturbed problem instance."""

    domain: str
    problem: str
    batch: int
    seed: int
    strategy: str
    outcome: str
    wall_ms: float  # wall-clock, hundredth-of-a-second precision
    stability: Optional[int]  # changed-node count of the repaired tree
    plan_len_before: int
    plan_len_after: Optional[int]
    classification: int
    disturbance: str
    position: int

    def to_row(self) -> list[str]:
        return [
            self.domain,
            self.problem,
            str(self.batch),
            str(self.seed),
            self.strategy,
            self.outcome,
            f"{self.wall_ms:.2f}",
            "" if self.stability is None else str(self.stability),
            str(self.plan_len_before),
            "" if self.plan_len_after is None else str(self.plan_len_after),
            str(self.classification),
            self.disturbance,
            str(self.position),
        ]


@dataclass
class ManifestEntry:
    id: str
    suite: Suite


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Read a suite manifest: a JSON list of {id, domain, problem, disturbances}.

    File paths are resolved relative to the manifest; the name
    ``builtin`` loads the bundled micro-suite.
    """
    if str(path) == "builtin":
        base = resources.files("hrepair.data")
        text = base.joinpath("suite.json").read_text()
        read = lambda name: base.joinpath(name).read_text()  # noqa: E731
    else:
        p = Path(path)
        text = p.read_text()
        read = lambda name: (p.parent / name).read_text()  # noqa: E731
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HrepairError(f"malformed manifest: {exc}") from None
    entries = []
    for item in spec:
        for key in ("id", "domain", "problem", "disturbances"):
            if key not in item:
                raise HrepairError(f"manifest entry missing {key!r}: {item}")
        domain = parse_domain(read(item["domain"]), item["domain"])
        problem = parse_problem(read(item["problem"]), domain, item["problem"])
        disturbances = parse_disturbances(read(item["disturbances"]), domain, item["disturbances"])
        entries.append(ManifestEntry(item["id"], Suite(domain, problem, disturbances)))
    return entries


def _run_strategy(name: str, rp, budget: SearchBudget) -> tuple[RepairOutcome, float]:
    t0 = time.perf_counter()
    outcome = STRATEGIES[name](rp, budget)
    return outcome, round((time.perf_counter() - t0) * 1000.0, 2)


def _validate_success(name: str, rp, outcome: RepairOutcome) -> None:
    """Re-validate a success row against its strategy's acceptance check."""
    assert outcome.tree is not None
    if name == "ip":
        _, failure = apply_plan(rp.s_c, outcome.tree.plan(), rp.universe)
        ok = failure is None
    else:  # rw and sf successes both project tree-level from the observed state
        ok = find_tree_failure(outcome.tree, rp.s_c, rp.universe) is None
    if not ok:
        raise AssertionError(f"{name} success failed re-validation")


def run_batch(
    entries: list[ManifestEntry],
    batches: int = DEFAULT_BATCHES,
    seed: int = 0,
    budget: Optional[SearchBudget] = None,
    strategies: tuple[str, ...] = ("rw", "sf", "ip"),
    validate_fraction: float = 1.0,
) -> list[RunRecord]:
    """batches x problems x strategies repair runs.

    Per-run independence: every (batch, problem) pair draws its own
    disturbance and placement from a seed derived deterministically
    from the master seed, so reruns reproduce everything but timings.
    """
    budget = budget or SearchBudget(wall_secs=DEFAULT_TIMEOUT_SECS)
    records: list[RunRecord] = []
    for entry in entries:
        suite = entry.suite
        universe = make_universe(suite.domain, suite.problem)
        base = solve(suite.domain, suite.problem.init, suite.problem.tasks, budget, universe)
        if base.status != SOLVED or base.tree is None:
            raise HrepairError(f"suite problem {entry.id!r} has no base plan ({base.status})")
        tree = base.tree
        for batch in range(1, batches + 1):
            rng = random.Random(f"{seed}:{entry.id}:{batch}")
            specs = list(suite.disturbances)
            rng.shuffle(specs)
            rp = None
            chosen = None
            for spec in specs:
                try:
                    rp = inject(tree, suite.domain, suite.problem, spec, None, rng)
                    chosen = spec
                    break
                except InapplicableDisturbanceError:
                    continue
            if rp is None or chosen is None:
                raise HrepairError(f"no applicable disturbance for {entry.id!r}")
            cls = classify(rp).classification
            before = len(visible_plan(rp.t_u))
            for name in strategies:
                outcome, ms = _run_strategy(name, rp, budget)
                status = outcome.status
                if name == "rw" and status == SUCCESS and cls == 1:
                    status = NO_REPAIR_NEEDED
                after = None
                stability = None
                if outcome.tree is not None:
                    after = len(visible_plan(outcome.tree))
                    stability = changed_node_count(rp.t_u, outcome.tree)
                if outcome.status == SUCCESS and rng.random() < validate_fraction:
                    _validate_success(name, rp, outcome)
                records.append(
                    RunRecord(
                        suite.domain.name,
                        entry.id,
                        batch,
                        seed,
                        name,
                        status,
                        ms,
                        stability,
                        before,
                        after,
                        cls,
                        chosen.name,
                        rp.position,
                    )
                )
    return records


def write_csv(records: list[RunRecord], out: io.TextIOBase) -> None:
    writer = csv.writer(out)
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(r.to_row())


def read_csv(inp: io.TextIOBase) -> list[dict[str, str]]:
    reader = csv.DictReader(inp)
    if reader.fieldnames != CSV_COLUMNS:
        raise HrepairError(f"unexpected CSV columns: {reader.fieldnames}")
    return list(reader)


def summarize(rows: list[dict[str, str]]) -> list[dict[str, object]]:
    """Per (problem, strategy): success rate, outcome split, runtime stats.

    Timeouts count as failures but never as proven unsolvable.
    """
    groups: dict[tuple[str, str], list[dict[str, str]]] = {}
    for row in rows:
        groups.setdefault((row["problem"], row["strategy"]), []).append(row)
    out = []
    for (problem, strategy), g in sorted(groups.items()):
        n = len(g)
        succ = sum(1 for r in g if r["outcome"] == "success")
        norep = sum(1 for r in g if r["outcome"] == "no-repair-needed")
        unrep = sum(1 for r in g if r["outcome"] == "proven-unrepairable")
        tout = sum(1 for r in g if r["outcome"] == "timeout")
        times = [float(r["wall_ms"]) for r in g if r["outcome"] in ("success", "no-repair-needed")]
        out.append(
            {
                "problem": problem,
                "strategy": strategy,
                "runs": n,
                "success": succ,
                "no_repair_needed": norep,
                "proven_unrepairable": unrep,
                "timeout": tout,
                "failed": unrep + tout,
                "success_rate": round(100.0 * (succ + norep) / n, 2) if n else 0.0,
                "mean_ms": round(statistics.mean(times), 2) if times else None,
                "std_ms": round(statistics.stdev(times), 2) if len(times) > 1 else (0.0 if times else None),
            }
        )
    return out


PLOT_KINDS = ("runtime-semilog", "success-rate", "variance")


def plotdata(rows: list[dict[str, str]], kind: str) -> tuple[list[str], list[list[object]]]:
    """Plot-ready columns for the given kind.

    ``runtime-semilog`` emits one point per run with log10 milliseconds
    and a solved flag, so successful and failed runs can be plotted
    separately; ``success-rate`` and ``variance`` aggregate per
    (problem, strategy).
    """
    if kind == "runtime-semilog":
        header = ["problem", "strategy", "solved", "log10_ms"]
        data = []
        for r in rows:
            ms = float(r["wall_ms"])
            solved = r["outcome"] in ("success", "no-repair-needed")
            data.append([r["problem"], r["strategy"], str(solved).lower(), round(math.log10(max(ms, 0.01)), 4)])
        return header, data
    if kind == "success-rate":
        header = ["problem", "strategy", "success_rate"]
        return header, [[s["problem"], s["strategy"], s["success_rate"]] for s in summarize(rows)]
    if kind == "variance":
        header = ["problem", "strategy", "std_ms"]
        return (
            header,
            [[s["problem"], s["strategy"], s["std_ms"]] for s in summarize(rows) if s["std_ms"] is not None],
        )
    raise HrepairError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
