import random

import pytest

from vnstt.construct import ArrangementError, construct
from vnstt.cost import CostCounter, PartialAssignment, cost, hard_violations
from vnstt.model import (Calendar, CostWeights, Event, FixedPlacement, Instance, Lecturer, Room, StudentGroup)

import oracle
from conftest import micro_instance


def two_slot_instance(unpref2=(1,)):
    return Instance("w", Calendar(1, 2), (Room("r1", 10),), (Lecturer("l1"),), (StudentGroup("g1", 10),),
                    (Event("e1", "l1", ("g1",)), Event("e2", "l1", ("g1",), None, unpref2)),
                    CostWeights(1.0, 0.5, 2.0))


def test_single_event_takes_earliest_period():
    inst = Instance("one", Calendar(1, 3), (Room("r1", 12),), (Lecturer("l1"),), (StudentGroup("g1", 10),),
                    (Event("e1", "l1", ("g1",)),), CostWeights(1.0, 0.5, 2.0))
    res = construct(inst, ["e1"])
    # late = 0, 0.5, 1.0 over the three slots; slack is the same everywhere.
    assert res.solution.assignments == {"e1": (0, "r1")}
    assert res.cost_evaluations == 3


def test_lecturer_clash_with_one_slot_fails_on_second_event():
    inst = Instance("f", Calendar(1, 1), (Room("r1", 10), Room("r2", 10)), (Lecturer("l1"),),
                    (StudentGroup("g1", 5), StudentGroup("g2", 5)),
                    (Event("e1", "l1", ("g1",)), Event("e2", "l1", ("g2",))))
    res = construct(inst, ["e1", "e2"])
    assert not res.success and res.failed_event == "e2" and res.solution is None


def test_all_fixed_instance():
    inst = Instance("fx", Calendar(1, 2), (Room("r1", 10),), (Lecturer("l1"),), (StudentGroup("g1", 10),),
                    (Event("e1", "l1", ("g1",), FixedPlacement(1, "r1")), Event("e2", "l1", ("g1",), FixedPlacement(0, "r1"))))
    res = construct(inst, ["e2", "e1"])
    assert res.success and res.cost_evaluations == 0
    assert res.solution.cost == cost(inst, {"e1": (1, "r1"), "e2": (0, "r1")})


def test_room_rule_prefers_tightest_then_lowest_id():
    inst = Instance("rr", Calendar(1, 1), (Room("b", 20), Room("a", 20), Room("big", 50), Room("tiny", 5)),
                    (Lecturer("l1"),), (StudentGroup("g1", 10),), (Event("e1", "l1", ("g1",)),))
    assert construct(inst, ["e1"]).solution.assignments["e1"] == (0, "a")


def test_order_sensitivity_witness():
    inst = two_slot_instance()
    first = construct(inst, ["e1", "e2"]).solution
    second = construct(inst, ["e2", "e1"]).solution
    assert first.cost == pytest.approx(3.0) and second.cost == pytest.approx(1.0)


def test_rejects_non_permutation():
    inst = two_slot_instance()
    for bad in (["e1"], ["e1", "e1"], ["e1", "e2", "e3"]):
        with pytest.raises(ArrangementError):
            construct(inst, bad)


def test_counter_accumulates():
    inst = two_slot_instance()
    c = CostCounter()
    a = construct(inst, ["e1", "e2"], c)
    b = construct(inst, ["e2", "e1"], c)
    assert c.evaluations == a.cost_evaluations + b.cost_evaluations
    assert c.work == a.cost_work + b.cost_work


def test_matches_exhaustive_per_step_scan():
    rng = random.Random(4)
    checked = 0
    for seed in range(150):
        inst = micro_instance(seed, n_events=rng.randint(2, 5), max_t=4)
        order = list(inst.event_ids)
        rng.shuffle(order)
        res = construct(inst, order)
        expected = oracle.greedy(inst, order)
        if expected is None:
            assert not res.success
            continue
        checked += 1
        assert dict(res.solution.assignments) == expected
        assert res.solution.cost == oracle.total_cost(inst, expected)
    assert checked > 50


def _replay_counts(inst, order, solution):
    """Feasible-timeslot count per step and the greedy-step optimality of each commit."""
    pa = PartialAssignment(inst)
    for e in inst.fixed_events():
        pa.place(e.id, e.fixed.timeslot, e.fixed.room)
    total = 0
    for eid in order:
        if eid in pa:
            continue
        options = []
        for t in range(inst.num_timeslots):
            rooms = [r.id for r in inst.rooms if pa.can_place(eid, t, r.id)]
            if rooms:
                best_room = min(rooms, key=lambda r: (inst.room_by_id[r].capacity, r))
                options.append(cost(inst, {**pa.placed, eid: (t, best_room)}))
        total += len(options)
        chosen = cost(inst, {**pa.placed, eid: solution.assignments[eid]})
        assert chosen <= min(options) + 1e-9
        pa.place(eid, *solution.assignments[eid])
        assert hard_violations(inst, pa.placed) == []
    return total


def test_prefix_feasibility_greedy_optimality_and_count_law():
    rng = random.Random(9)
    for seed in range(80):
        inst = micro_instance(seed)
        order = list(inst.event_ids)
        rng.shuffle(order)
        res = construct(inst, order)
        if not res.success:
            continue
        assert _replay_counts(inst, order, res.solution) == res.cost_evaluations
        assert res.cost_evaluations <= inst.num_events * inst.num_timeslots
        assert hard_violations(inst, res.solution.assignments, complete=True) == []
        fixed = {e.id: (e.fixed.timeslot, e.fixed.room) for e in inst.fixed_events()}
        assert all(res.solution.assignments[e] == p for e, p in fixed.items())


def test_deterministic():
    inst = micro_instance(77, n_events=6)
    order = list(reversed(inst.event_ids))
    assert construct(inst, order) == construct(inst, order)
