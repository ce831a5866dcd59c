"""Exit criteria. Each test carries an ``acceptance`` marker; the run ends with
one PASS/FAIL line per criterion in the terminal summary."""

import csv
import random
import time

import pytest

import vnstt.vns as vns_module
from vnstt.cli import main
from vnstt.construct import construct
from vnstt.cost import absolute_gap_ok, hard_violations, is_local_optimum, relative_gap
from vnstt.generator import generate, preset, scaled_spec
from vnstt.model import dumps_solution, make_solution, save_instance
from vnstt.vns import AllConstructionsFailed, solve_vns, trace_csv

import oracle
from conftest import micro_instance

TOL = 1e-9


def acceptance(cid, text):
    return pytest.mark.acceptance(cid, text)


@pytest.fixture(scope="module")
def n18():
    return generate(preset("N18", 0))


@acceptance(1, "trace shape on N18: 19 constructions for k=2; blocks 9x2, 6x3, 3x6; k=2 under 1 s")
def test_c1_trace_shape(n18):
    started = time.perf_counter()
    run = solve_vns(n18, 2)
    assert time.perf_counter() - started < 1.0
    assert run.construct_calls == 19
    assert len(run.trace) == 18
    for k, size in ((2, 9), (3, 6), (6, 3)):
        r = run if k == 2 else solve_vns(n18, k)
        assert [len(s) for s in r.initial_structures] == [size] * k
        assert [sum(rec.structure == i for rec in r.trace) for i in range(1, k + 1)] == [size] * k


@acceptance(2, "counter law: construct calls = N+1, cost evaluations <= (N+1)*N*T; N130 under 60 s")
def test_c2_counter_law():
    cases = [("N18", k) for k in range(2, 10)] + [("N90", k) for k in (2, 6, 45)] + [("N130", k) for k in (2, 10, 65)]
    for name, k in cases:
        inst = generate(preset(name, 1))
        n, T = inst.num_events, inst.num_timeslots
        started = time.perf_counter()
        run = solve_vns(inst, k)
        elapsed = time.perf_counter() - started
        assert run.construct_calls == n + 1
        assert run.cost_evaluations <= (n + 1) * n * T
        assert sum(r.cost_evaluations for r in run.trace) <= run.cost_evaluations
        if name == "N130":
            assert elapsed < 60.0


@acceptance(3, "monotone stage minima b_1 >= ... >= b_k and final cost = b_k (1e-9) on 20 instances")
def test_c3_monotonicity():
    rng = random.Random(33)
    for i in range(20):
        n = (12, 18, 24)[i % 3]
        inst = generate(scaled_spec(n, seed=1000 + i))
        k = rng.randint(2, n // 2)
        run = solve_vns(inst, k)
        assert all(r.feasible for r in run.trace), "criterion is stated for all-success runs"
        best = run.stage_best()
        for b1, b2 in zip(best, best[1:]):
            assert b2 <= b1 + TOL
        assert abs(run.final_solution.cost - best[-1]) <= TOL


@acceptance(4, "brute-force replay gives byte-identical trace and solution on 50 micro-instances, under 10 s")
def test_c4_oracle_equivalence():
    started = time.perf_counter()
    solved = 0
    for seed in range(50):
        inst = micro_instance(5000 + seed, n_events=4 + seed % 3)
        assert inst.num_events <= 6 and inst.num_timeslots <= 6
        expected_trace, expected_solution = oracle.replay(inst, 2)
        try:
            run = solve_vns(inst, 2)
            got_solution = dumps_solution(run.final_solution)
            solved += 1
        except AllConstructionsFailed as exc:
            run, got_solution = exc.run, None
        assert trace_csv([run]) == expected_trace
        assert got_solution == expected_solution
    assert solved >= 15
    assert time.perf_counter() - started < 10.0


@acceptance(5, "every successful construction during solver runs is hard-feasible")
def test_c5_feasibility(monkeypatch):
    seen = []

    def recording(instance, arrangement, counter=None):
        res = construct(instance, arrangement, counter)
        if res.success:
            seen.append((instance, res.solution))
        return res

    monkeypatch.setattr(vns_module, "construct", recording)
    runs = [(generate(preset("N18", s)), k) for s in range(3) for k in (2, 3, 6, 9)]
    runs += [(generate(preset("N90", 0)), 6), (generate(preset("N130", 0)), 13)]
    runs += [(micro_instance(7000 + s), 2) for s in range(40)]
    for inst, k in runs:
        try:
            solve_vns(inst, k)
        except AllConstructionsFailed:
            pass
    assert len(seen) > 500
    for inst, sol in seen:
        assert hard_violations(inst, sol.assignments, complete=True) == []


@pytest.fixture(scope="module")
def n90_sweeps(tmp_path_factory):
    d = tmp_path_factory.mktemp("sweep")
    save_instance(generate(preset("N90", 0)), d / "n90.json")
    out = {}
    for jobs in (1, 4):
        rep, tr = d / f"report{jobs}.csv", d / f"trace{jobs}.csv"
        code = main(["sweep", "-i", str(d / "n90.json"), "--k-all-divisors", "--jobs", str(jobs),
                     "--report", str(rep), "--trace", str(tr)])
        out[jobs] = (code, rep.read_bytes(), tr.read_bytes())
    return out


@acceptance(6, "N90 divisor sweep: --jobs 1 and --jobs 4 give byte-identical report and trace")
def test_c6_determinism(n90_sweeps):
    (c1, rep1, tr1), (c4, rep4, tr4) = n90_sweeps[1], n90_sweeps[4]
    assert c1 == c4 == 0
    assert rep1 == rep4
    assert tr1 == tr4


@acceptance(7, "local-optimum check agrees with enumeration on 50 micro-instances; gap boundary cases exact")
def test_c7_local_optimum():
    rng = random.Random(77)
    compared, outcomes = 0, set()
    seed = 9000
    while compared < 50:
        inst = micro_instance(seed, n_events=rng.randint(2, 5))
        seed += 1
        candidates = []
        built = construct(inst, inst.event_ids)
        if built.success:
            candidates.append(built.solution)
        placed = {e.id: (e.fixed.timeslot, e.fixed.room) for e in inst.events if e.fixed}
        for e in inst.events:
            placed.setdefault(e.id, (rng.randrange(inst.num_timeslots), rng.choice(inst.rooms).id))
        if not hard_violations(inst, placed, complete=True):
            candidates.append(make_solution(inst, placed))
        for sol in candidates:
            expected = oracle.single_move_brute_force(inst, dict(sol.assignments))
            assert is_local_optimum(inst, sol) == expected
            outcomes.add(expected)
            compared += 1
    assert outcomes == {True, False}
    assert relative_gap(3.7, 3.7) == 0
    assert absolute_gap_ok(10.0, 10.0, 0.0)
    assert not absolute_gap_ok(10.5, 10.0, 0.4)
    assert absolute_gap_ok(10.4, 10.0, 0.4)
    assert relative_gap(110, 100) == pytest.approx(0.0909090909, abs=1e-9)
    with pytest.raises(ValueError):
        relative_gap(0, 1.0)


@acceptance(8, "cost-evaluation work grows superlinearly, 4x-16x per doubling of N (T fixed, k = N/10)")
def test_c8_scaling():
    work, evals = [], []
    for n in (20, 40, 80):
        inst = generate(scaled_spec(n, seed=8))
        assert inst.num_timeslots == 40
        run = solve_vns(inst, n // 10)
        work.append(run.cost_work)
        evals.append(run.cost_evaluations)
    ratios = [b / a for a, b in zip(work, work[1:])]
    print("work per doubling:", [f"{r:.2f}" for r in ratios],
          "evaluations per doubling:", [f"{b / a:.2f}" for a, b in zip(evals, evals[1:])])
    for r in ratios:
        assert r > 2.0
        assert 4.0 <= r <= 16.0


@acceptance(9, "N90 sweep report: one row per divisor k, an arg-min k, ratio observation column")
def test_c9_sweep_report(n90_sweeps):
    _, rep, _ = n90_sweeps[1]
    rows = list(csv.DictReader(rep.decode().splitlines()))
    assert [int(r["k"]) for r in rows] == [2, 3, 5, 6, 9, 10, 15, 18, 30, 45]
    winners = [r for r in rows if r["argmin"] == "true"]
    assert len(winners) == 1
    best = winners[0]
    assert float(best["best_cost"]) == min(float(r["best_cost"]) for r in rows)
    assert all(r["ratio_in_band"] in ("true", "false") and r["ratio_pct"] for r in rows)
    assert all(r["stage_monotone"] == "true" for r in rows)
    print(f"arg-min k={best['k']}, structure size {best['ratio_pct']}% of N, in 8.1-16.2% band: {best['ratio_in_band']}")
