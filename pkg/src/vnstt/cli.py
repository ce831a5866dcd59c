"""Command-line front end: ``vnstt gen | solve | sweep | validate | cost``.

Exit codes: 0 success, 2 usage, 3 input-data error, 4 solver failure,
5 validation findings.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .cost import cost, hard_violations
from .generator import PRESETS, GenSpec, UnsatisfiableSpecError, generate, preset
from .model import (InstanceFormatError, SolutionFormatError, dumps_instance, load_instance, load_solution,
                    save_solution, validate_instance)
from .vns import (AllConstructionsFailed, ParameterError, VnsRun, best_of_trace, check_k,
                  format_cost, render_stage_table, solve_vns, trace_csv)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER, EXIT_FINDINGS = 0, 2, 3, 4, 5

# Structure size as a share of N where the N90 dataset gave its best results.
RATIO_BAND = (8.1, 16.2)

REPORT_HEADER = ("k", "structure_size", "ratio_pct", "ratio_in_band", "best_cost", "best_structure",
                 "best_leading_event", "final_cost", "construct_calls", "cost_evaluations", "cost_work",
                 "stage_monotone", "argmin")


class UsageError(Exception):
    pass


@dataclass
class SweepRow:
    k: int
    structure_size: int
    ratio_pct: float
    best_cost: Optional[float]
    best_structure: Optional[int]
    best_leading_event: str
    final_cost: Optional[float]
    construct_calls: int
    cost_evaluations: int
    cost_work: int
    stage_monotone: bool
    elapsed_ms: float


@dataclass
class SweepReport:
    instance_id: str
    n_events: int
    rows: list[SweepRow]

    @property
    def argmin_k(self) -> Optional[int]:
        feasible = [r for r in self.rows if r.best_cost is not None]
        if not feasible:
            return None
        return min(feasible, key=lambda r: (r.best_cost, r.k)).k

    def to_csv(self, with_timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER + (("elapsed_ms",) if with_timing else ()))
        best_k = self.argmin_k
        lo, hi = RATIO_BAND
        for r in self.rows:
            line = [r.k, r.structure_size, f"{r.ratio_pct:.1f}", _flag(lo <= round(r.ratio_pct, 1) <= hi),
                    format_cost(r.best_cost), "" if r.best_structure is None else r.best_structure,
                    r.best_leading_event, format_cost(r.final_cost), r.construct_calls, r.cost_evaluations,
                    r.cost_work, _flag(r.stage_monotone), _flag(r.k == best_k)]
            if with_timing:
                line.append(f"{r.elapsed_ms:.1f}")
            w.writerow(line)
        return buf.getvalue()


def _flag(b: bool) -> str:
    return "true" if b else "false"


def sweep_row(run: VnsRun, n_events: int) -> SweepRow:
    size = max(len(s) for s in run.initial_structures)
    if any(r.feasible for r in run.trace):
        c, s, lead = best_of_trace(run)
    else:
        c, s, lead = None, None, ""
    fin = run.final_solution.cost if run.final_solution else None
    return SweepRow(run.k, size, 100.0 * size / n_events, c, s, lead, fin, run.construct_calls,
                    run.cost_evaluations, run.cost_work, run.stages_monotone(), run.elapsed * 1000.0)


def _solve_any(instance, k) -> VnsRun:
    try:
        return solve_vns(instance, k)
    except AllConstructionsFailed as exc:
        return exc.run


def run_sweep(instance, ks: Sequence[int], jobs: int = 1) -> list[VnsRun]:
    """One run per k, returned in the order of ``ks`` whatever ``jobs`` is."""
    if jobs <= 1 or len(ks) <= 1:
        return [_solve_any(instance, k) for k in ks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_solve_any, [instance] * len(ks), ks))


def divisor_ks(n: int) -> list[int]:
    return [d for d in range(2, n // 2 + 1) if n % d == 0]


# -- commands ----------------------------------------------------------------


def _load(path: str):
    try:
        return load_instance(path)
    except (OSError, InstanceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_gen(args) -> int:
    if args.preset:
        spec = preset(args.preset, args.seed)
    else:
        missing = [f for f in ("events", "students", "groups", "lecturers", "rooms") if getattr(args, f) is None]
        if missing:
            raise UsageError("without --preset, give " + ", ".join(f"--{m}" for m in missing))
        spec = GenSpec(args.events, args.students, args.groups, args.lecturers, args.rooms, seed=args.seed)
    overrides = {k: v for k, v in (("days", args.days), ("periods_per_day", args.periods),
                                   ("fixed_fraction", args.fixed_fraction),
                                   ("unpref_fraction", args.unpref_fraction)) if v is not None}
    spec = replace(spec, **overrides)
    try:
        spec.check()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        inst = generate(spec)
    except UnsatisfiableSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    Path(args.output).write_text(dumps_instance(inst), encoding="utf-8")
    print(f"{inst.id}: N={inst.num_events} G={len(inst.groups)} L={len(inst.lecturers)} "
          f"R={len(inst.rooms)} T={inst.num_timeslots} -> {args.output}")
    return EXIT_OK


def _require_valid(inst) -> bool:
    violations = validate_instance(inst)
    for v in violations:
        print(f"{v.code}: {v.message}", file=sys.stderr)
    return not violations


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    if inst is None:
        return EXIT_DATA
    try:
        check_k(inst.num_events, args.k)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    if not _require_valid(inst):
        return EXIT_DATA
    failed = False
    try:
        run = solve_vns(inst, args.k)
    except AllConstructionsFailed as exc:
        run, failed = exc.run, True
    if args.trace:
        Path(args.trace).write_text(trace_csv([run]), encoding="utf-8")
    if args.table:
        print(render_stage_table(run), end="")
    print(f"construct_calls={run.construct_calls} cost_evaluations={run.cost_evaluations} "
          f"cost_work={run.cost_work} elapsed_ms={run.elapsed * 1000:.1f}")
    if failed:
        print(f"error: {AllConstructionsFailed.code}", file=sys.stderr)
        return EXIT_SOLVER
    save_solution(run.final_solution, args.output)
    print(f"cost={run.final_solution.cost:.6f}")
    return EXIT_OK


def _parse_ks(args, n: int) -> list[int]:
    ks: list[int] = []
    if args.k_all_divisors:
        ks += divisor_ks(n)
    if args.k_list:
        try:
            ks += [int(x) for x in args.k_list.split(",") if x.strip()]
        except ValueError as exc:
            raise UsageError(f"--k-list must be comma-separated integers: {args.k_list!r}") from exc
    if args.k is not None:
        ks.append(args.k)
    if not ks:
        raise UsageError("give -k, --k-list or --k-all-divisors")
    ks = sorted(set(ks))
    for k in ks:
        try:
            check_k(n, k)
        except ParameterError as exc:
            raise UsageError(str(exc)) from exc
    return ks


def cmd_sweep(args) -> int:
    inst = _load(args.instance)
    if inst is None:
        return EXIT_DATA
    ks = _parse_ks(args, inst.num_events)
    if not _require_valid(inst):
        return EXIT_DATA
    runs = run_sweep(inst, ks, args.jobs)
    report = SweepReport(inst.id, inst.num_events, [sweep_row(r, inst.num_events) for r in runs])
    Path(args.report).write_text(report.to_csv(args.with_timing), encoding="utf-8")
    if args.trace:
        Path(args.trace).write_text(trace_csv(runs), encoding="utf-8")
    for row in report.rows:
        print(f"k={row.k:<3d} |NS|={row.structure_size:<3d} best={format_cost(row.best_cost) or 'FAILED':>12} "
              f"evals={row.cost_evaluations} elapsed_ms={row.elapsed_ms:.1f}")
    best = report.argmin_k
    if best is None:
        print("no k produced a feasible timetable")
        return EXIT_SOLVER
    row = next(r for r in report.rows if r.k == best)
    print(f"argmin k={best}: cost={format_cost(row.best_cost)}, structure size {row.structure_size} "
          f"= {row.ratio_pct:.1f}% of {inst.num_events} events")
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = _load(args.instance)
    if inst is None:
        return EXIT_DATA
    violations = validate_instance(inst)
    if not violations:
        print("OK")
        return EXIT_OK
    for v in violations:
        print(f"{v.code}: {v.message}")
    return EXIT_FINDINGS


def cmd_cost(args) -> int:
    inst = _load(args.instance)
    if inst is None:
        return EXIT_DATA
    try:
        sol = load_solution(args.solution, inst)
    except (OSError, SolutionFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    violations = hard_violations(inst, sol.assignments, complete=True)
    for v in violations:
        print(v)
    print(f"cost={cost(inst, sol.assignments):.6f}")
    return EXIT_FINDINGS if violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vnstt", description="Rotation-based VNS course timetabling.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    for name in ("events", "students", "groups", "lecturers", "rooms", "days", "periods"):
        g.add_argument(f"--{name}", type=int)
    g.add_argument("--fixed-fraction", type=float)
    g.add_argument("--unpref-fraction", type=float)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance with k structures")
    s.add_argument("-i", "--instance", required=True)
    s.add_argument("-k", type=int, required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--trace")
    s.add_argument("--table", action="store_true", help="print the per-structure rotation table")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="solve for several k and write a report")
    w.add_argument("-i", "--instance", required=True)
    w.add_argument("-k", type=int)
    w.add_argument("--k-list")
    w.add_argument("--k-all-divisors", action="store_true")
    w.add_argument("--report", required=True)
    w.add_argument("--trace")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--with-timing", action="store_true", help="add elapsed_ms to the report (not byte-stable)")
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="check an instance file")
    v.add_argument("-i", "--instance", required=True)
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("cost", help="check and price a solution file")
    c.add_argument("-i", "--instance", required=True)
    c.add_argument("-s", "--solution", required=True)
    c.set_defaults(func=cmd_cost)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
