"""Rotation-based variable neighborhood search over event orderings.

The event list is cut into ``k`` contiguous blocks (neighborhood structures).
Each block in turn is rotated left one position at a time through a full
circle; every rotation is turned into a timetable by :func:`construct` and its
cost recorded. The block is then left at its best rotation and the next block
is processed. A final construction on the resulting ordering gives the answer.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .construct import construct
from .cost import CostCounter
from .model import COST_TOLERANCE, Instance, Solution, validate_instance

ALL_CONSTRUCTIONS_FAILED = "ALL_CONSTRUCTIONS_FAILED"
TRACE_HEADER = ("k", "structure", "rotation", "leading_event", "cost", "feasible")


class ParameterError(ValueError):
    pass


class InvalidInstanceError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid instance: " + "; ".join(f"{v.code}: {v.message}" for v in self.violations))


class AllConstructionsFailed(RuntimeError):
    """No ordering tried during the run produced a feasible timetable.

    The finished run, trace included, is available as ``run``.
    """

    code = ALL_CONSTRUCTIONS_FAILED

    def __init__(self, run: "VnsRun"):
        self.run = run
        super().__init__(f"{ALL_CONSTRUCTIONS_FAILED}: no feasible construction for instance {run.instance_id!r} with k={run.k}")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    structure: int  # 1-based
    rotation: int
    leading_event: str
    cost: Optional[float]  # None marks a failed construction
    cost_evaluations: int

    @property
    def feasible(self) -> bool:
        return self.cost is not None


@dataclass
class VnsRun:
    instance_id: str
    k: int
    initial_structures: list[list[str]]
    final_structures: list[list[str]] = field(default_factory=list)
    trace: list[TraceRecord] = field(default_factory=list)
    final_solution: Optional[Solution] = None
    final_leading_event: str = ""
    construct_calls: int = 0
    cost_evaluations: int = 0
    cost_work: int = 0
    elapsed: float = 0.0

    @property
    def final_arrangement(self) -> list[str]:
        return [e for s in self.final_structures for e in s]

    def stage_records(self, structure: int) -> list[TraceRecord]:
        return [r for r in self.trace if r.structure == structure]

    def stage_best(self) -> list[Optional[float]]:
        """Lowest recorded cost per structure, None where every rotation failed."""
        out = []
        for i in range(1, self.k + 1):
            costs = [r.cost for r in self.stage_records(i) if r.cost is not None]
            out.append(min(costs) if costs else None)
        return out

    def stages_monotone(self) -> bool:
        best = self.stage_best()
        if any(b is None for b in best):
            return False
        return all(b2 <= b1 + COST_TOLERANCE for b1, b2 in zip(best, best[1:]))


def check_k(n_events: int, k: int) -> None:
    if n_events < 4 or k < 2 or k > n_events // 2:
        raise ParameterError(
            f"k must satisfy k >= 2 and k <= N/2 (N={n_events}, so 2 <= k <= {n_events // 2}); got k={k}")


def partition_events(instance: Instance, k: int) -> list[list[str]]:
    """Split the instance event order into ``k`` contiguous blocks.

    The first ``N mod k`` blocks get one extra event.
    """
    n = instance.num_events
    check_k(n, k)
    base, extra = divmod(n, k)
    ids = list(instance.event_ids)
    out, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        out.append(ids[start:start + size])
        start += size
    return out


def rotate_left(structure: Sequence[str], steps: int) -> list[str]:
    if not structure:
        raise ValueError("cannot rotate an empty structure")
    s = steps % len(structure)
    return list(structure[s:]) + list(structure[:s])


def _rank(c: Optional[float]) -> float:
    return float("inf") if c is None else c


def _best_index(costs: Sequence[Optional[float]]) -> int:
    best = min(_rank(c) for c in costs)
    if best == float("inf"):
        return 0
    return next(i for i, c in enumerate(costs) if _rank(c) <= best + COST_TOLERANCE)


def realign_to_best(structure: Sequence[str], records: Sequence[TraceRecord]) -> list[str]:
    """Rotate ``structure`` so the leading event of its cheapest rotation comes first.

    ``records`` must hold rotations ``0..len(structure)-1`` of this structure.
    Failed rotations rank after any cost; ties and all-failed keep the earliest rotation.
    """
    by_rotation = {r.rotation: r for r in records}
    if sorted(by_rotation) != list(range(len(structure))) or len(records) != len(structure):
        raise ValueError("realignment needs exactly one record per rotation of the structure")
    return rotate_left(structure, _best_index([by_rotation[r].cost for r in range(len(structure))]))


def best_of_trace(run: VnsRun) -> tuple[float, int, str]:
    """(cost, structure index, leading event) of the cheapest record; earliest on ties."""
    if not any(r.feasible for r in run.trace):
        raise ValueError("trace has no successful construction")
    rec = run.trace[_best_index([r.cost for r in run.trace])]
    return rec.cost, rec.structure, rec.leading_event


def solve_vns(instance: Instance, k: int) -> VnsRun:
    """Run the rotation search with ``k`` structures.

    Raises :class:`AllConstructionsFailed` (carrying the run) when no
    construction succeeded.
    """
    violations = validate_instance(instance)
    if violations:
        raise InvalidInstanceError(violations)
    structures = partition_events(instance, k)
    run = VnsRun(instance.id, k, [list(s) for s in structures])
    counter = CostCounter()
    started = time.perf_counter()

    for i in range(k):
        entry = structures[i]
        records = []
        for r in range(len(entry)):
            rotated = rotate_left(entry, r)
            arrangement = [e for j, s in enumerate(structures) for e in (rotated if j == i else s)]
            res = construct(instance, arrangement, counter)
            run.construct_calls += 1
            records.append(TraceRecord(k, i + 1, r, rotated[0],
                                       res.solution.cost if res.success else None, res.cost_evaluations))
        structures[i] = realign_to_best(entry, records)
        run.trace.extend(records)

    final = construct(instance, [e for s in structures for e in s], counter)
    run.construct_calls += 1
    run.final_structures = [list(s) for s in structures]
    run.final_leading_event = structures[0][0]
    run.final_solution = final.solution
    run.cost_evaluations = counter.evaluations
    run.cost_work = counter.work
    run.elapsed = time.perf_counter() - started
    if final.solution is None:
        raise AllConstructionsFailed(run)
    return run


def format_cost(c: Optional[float]) -> str:
    return "" if c is None else f"{c:.6f}"


def trace_rows(run: VnsRun) -> list[list[str]]:
    rows = [[str(r.k), str(r.structure), str(r.rotation), r.leading_event, format_cost(r.cost),
             "true" if r.feasible else "false"] for r in run.trace]
    sol = run.final_solution
    rows.append([str(run.k), "final", "", run.final_leading_event,
                 format_cost(sol.cost if sol else None), "true" if sol else "false"])
    return rows


def trace_csv(runs: Sequence[VnsRun]) -> str:
    """Trace CSV for one or more runs, one line per construction plus a final line per run."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for run in runs:
        w.writerows(trace_rows(run))
    return buf.getvalue()


def render_stage_table(run: VnsRun) -> str:
    """Plain-text table: one column pair (leading event, cost) per structure."""
    sizes = [len(s) for s in run.initial_structures]
    head = f"k = {run.k}, NSk = {max(sizes)}"
    cols = []
    for i in range(1, run.k + 1):
        cells = [(r.leading_event, "FAILED" if r.cost is None else f"{r.cost:.2f}") for r in run.stage_records(i)]
        cols.append([(f"NS{i}", "Cost")] + cells)
    width = max(len(x) for col in cols for pair in col for x in pair)
    lines = [head]
    for row in range(max(len(c) for c in cols)):
        cells = []
        for col in cols:
            a, b = col[row] if row < len(col) else ("", "")
            cells.append(f"{a:>{width}} {b:>{width}}")
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"
