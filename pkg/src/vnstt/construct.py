"""Greedy sequential construction of a timetable from an event ordering."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .cost import CostCounter, PartialAssignment, cost, placement_penalty
from .model import COST_TOLERANCE, Instance, Solution


class ArrangementError(ValueError):
    """The arrangement is not a permutation of the instance's events."""


@dataclass(frozen=True)
class ConstructionResult:
    solution: Optional[Solution]
    failed_event: Optional[str]
    cost_evaluations: int
    cost_work: int

    @property
    def success(self) -> bool:
        return self.solution is not None


def check_arrangement(instance: Instance, arrangement: Sequence[str]) -> None:
    if len(arrangement) != instance.num_events or set(arrangement) != set(instance.event_ids):
        raise ArrangementError("arrangement must list every event of the instance exactly once")


def construct(instance: Instance, arrangement: Sequence[str],
              counter: Optional[CostCounter] = None) -> ConstructionResult:
    """Place events one by one, in ``arrangement`` order, at their cheapest feasible slot.

    Fixed events are placed up front and skipped in the loop. For every other
    event all timeslots are scanned; at each open timeslot the least-slack free
    room is taken tentatively and the cost of the whole partial timetable is
    evaluated. The event is committed to the cheapest option (ties: lowest
    timeslot). If no timeslot is open the construction fails at that event.
    """
    check_arrangement(instance, arrangement)
    partial = PartialAssignment(instance)
    penalties: list[float] = []
    for e in instance.fixed_events():
        partial.place(e.id, e.fixed.timeslot, e.fixed.room)
        penalties.append(placement_penalty(instance, e, e.fixed.timeslot, e.fixed.room))

    T = instance.num_timeslots
    P = instance.calendar.periods_per_day
    w = instance.weights
    # Same float expressions as placement_penalty, hoisted out of the slot loop.
    late_terms = [w.w_late * ((t % P) / (P - 1) if P > 1 else 0.0) for t in range(T)]
    busy_lecturer, busy_group, busy_room = partial._lecturer, partial._group, partial._room
    evaluations = work = 0
    failed = None
    for eid in arrangement:
        event = instance.event_by_id[eid]
        if event.fixed is not None:
            continue
        lecturer, groups, unpref = event.lecturer, event.groups, event.unpreferred
        rooms = instance.adequate_rooms(eid)
        need = instance.attendees(eid)
        slack_terms = {r: w.w_slack * ((instance.room_by_id[r].capacity - need) / instance.room_by_id[r].capacity)
                       for r in rooms}
        options = []
        for t in range(T):
            if (lecturer, t) in busy_lecturer or any((g, t) in busy_group for g in groups):
                continue
            room = next((r for r in rooms if (r, t) not in busy_room), None)
            if room is None:
                continue
            p = late_terms[t] + slack_terms[room] + w.w_unpref * (1.0 if t in unpref else 0.0)
            penalties.append(p)
            # Cost of the partial timetable: one term per placed event.
            c = math.fsum(penalties)
            evaluations += 1
            work += len(penalties)
            penalties.pop()
            options.append((c, t, room, p))
        if not options:
            failed = eid
            break
        best = min(o[0] for o in options)
        _, t, room, p = next(o for o in options if o[0] <= best + COST_TOLERANCE)
        partial.place(eid, t, room)
        penalties.append(p)

    if counter is not None:
        counter.evaluations += evaluations
        counter.work += work
    if failed is not None:
        return ConstructionResult(None, failed, evaluations, work)
    solution = Solution(instance.id, dict(partial.placed), cost(instance, partial.placed))
    return ConstructionResult(solution, None, evaluations, work)
