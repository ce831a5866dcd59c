"""Objective, hard constraints, tolerance tests and the local-optimum check.

The objective is a per-event penalty sum::

    w_late * period(t) / (P - 1)                      # late in the day
  + w_slack * (capacity(room) - attendees) / capacity  # wasted seats
  + w_unpref * [t in event.unpreferred_timeslots]

Sums use :func:`math.fsum`, so a cost depends only on the set of placements
and never on the order they were added in.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Optional

from .model import COST_TOLERANCE, Event, Instance, Solution

Assignment = Mapping[str, tuple[int, str]]

LECTURER_CLASH = "LECTURER_CLASH"
GROUP_CLASH = "GROUP_CLASH"
ROOM_CLASH = "ROOM_CLASH"
CAPACITY = "CAPACITY"
UNASSIGNED = "UNASSIGNED"


@dataclass
class CostCounter:
    """Per-run instrumentation.

    ``evaluations`` counts objective evaluations; ``work`` counts the per-event
    terms those evaluations summed, i.e. the Theta(|placed|) effort of each.
    """

    evaluations: int = 0
    work: int = 0

    def add(self, placed: int) -> None:
        self.evaluations += 1
        self.work += placed


@dataclass(frozen=True)
class HardViolation:
    kind: str
    events: tuple[str, ...]
    timeslot: Optional[int] = None
    resource: Optional[str] = None

    def __str__(self) -> str:
        where = "" if self.timeslot is None else f" at timeslot {self.timeslot}"
        res = "" if self.resource is None else f" [{self.resource}]"
        return f"{self.kind}{res}{where}: {', '.join(self.events)}"


def placement_penalty(instance: Instance, event: Event, timeslot: int, room: str) -> float:
    """Standalone penalty of putting ``event`` at ``(timeslot, room)``."""
    w = instance.weights
    P = instance.calendar.periods_per_day
    late = (timeslot % P) / (P - 1) if P > 1 else 0.0
    cap = instance.room_by_id[room].capacity
    slack = (cap - instance.attendees(event.id)) / cap
    unpref = 1.0 if timeslot in event.unpreferred else 0.0
    return w.w_late * late + w.w_slack * slack + w.w_unpref * unpref


def cost(instance: Instance, assignment: Assignment, counter: Optional[CostCounter] = None) -> float:
    """Objective value of a (possibly partial) assignment.

    Unknown room ids raise ``KeyError``: that is corrupted solver state, not bad input.
    """
    events = instance.event_by_id
    total = math.fsum(placement_penalty(instance, events[eid], t, room)
                      for eid, (t, room) in assignment.items())
    if counter is not None:
        counter.add(len(assignment))
    return total


def hard_violations(instance: Instance, assignment: Assignment, complete: bool = False) -> list[HardViolation]:
    """Every hard-constraint violation in ``assignment``.

    With ``complete=True`` events missing from the assignment are reported as
    ``UNASSIGNED``. An empty result means the assignment is feasible.
    """
    by_lecturer: dict[tuple[str, int], list[str]] = defaultdict(list)
    by_group: dict[tuple[str, int], list[str]] = defaultdict(list)
    by_room: dict[tuple[str, int], list[str]] = defaultdict(list)
    out: list[HardViolation] = []
    for eid, (t, room) in assignment.items():
        e = instance.event_by_id[eid]
        by_lecturer[e.lecturer, t].append(eid)
        for g in e.groups:
            by_group[g, t].append(eid)
        by_room[room, t].append(eid)
        cap = instance.room_by_id[room].capacity
        if instance.attendees(eid) > cap:
            out.append(HardViolation(CAPACITY, (eid,), t, room))
    for kind, table in ((LECTURER_CLASH, by_lecturer), (GROUP_CLASH, by_group), (ROOM_CLASH, by_room)):
        for (res, t), eids in table.items():
            if len(eids) > 1:
                out.append(HardViolation(kind, tuple(sorted(eids)), t, res))
    if complete:
        for eid in instance.event_ids:
            if eid not in assignment:
                out.append(HardViolation(UNASSIGNED, (eid,)))
    out.sort(key=lambda v: (v.kind, -1 if v.timeslot is None else v.timeslot, v.resource or "", v.events))
    return out


class PartialAssignment:
    """Mutable mid-construction assignment with occupancy indices.

    Feasibility of one more placement is answered in O(|groups of the event|).
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.placed: dict[str, tuple[int, str]] = {}
        self._lecturer: set[tuple[str, int]] = set()
        self._group: set[tuple[str, int]] = set()
        self._room: set[tuple[str, int]] = set()

    @classmethod
    def from_assignment(cls, instance: Instance, assignment: Assignment) -> "PartialAssignment":
        pa = cls(instance)
        for eid, (t, room) in assignment.items():
            pa.place(eid, t, room)
        return pa

    def __len__(self) -> int:
        return len(self.placed)

    def __contains__(self, event_id: str) -> bool:
        return event_id in self.placed

    def slot_open(self, event: Event, t: int) -> bool:
        """Lecturer and all groups of ``event`` are free at ``t``."""
        if (event.lecturer, t) in self._lecturer:
            return False
        return not any((g, t) in self._group for g in event.groups)

    def can_place(self, event_id: str, t: int, room: str) -> bool:
        inst = self.instance
        if not 0 <= t < inst.num_timeslots:
            return False
        e = inst.event_by_id[event_id]
        if inst.attendees(event_id) > inst.room_by_id[room].capacity:
            return False
        return (room, t) not in self._room and self.slot_open(e, t)

    def best_room(self, event_id: str, t: int) -> Optional[str]:
        """Feasible room at ``t`` with the least slack (ties: lowest id), or None."""
        e = self.instance.event_by_id[event_id]
        if not self.slot_open(e, t):
            return None
        for room in self.instance.adequate_rooms(event_id):
            if (room, t) not in self._room:
                return room
        return None

    def place(self, event_id: str, t: int, room: str) -> None:
        e = self.instance.event_by_id[event_id]
        self.placed[event_id] = (t, room)
        self._lecturer.add((e.lecturer, t))
        self._group.update((g, t) for g in e.groups)
        self._room.add((room, t))

    def remove(self, event_id: str) -> None:
        t, room = self.placed.pop(event_id)
        e = self.instance.event_by_id[event_id]
        self._lecturer.discard((e.lecturer, t))
        self._group.difference_update((g, t) for g in e.groups)
        self._room.discard((room, t))


def is_feasible_placement(instance: Instance, partial: Assignment | PartialAssignment,
                          event_id: str, timeslot: int, room: str) -> bool:
    """Whether adding ``event_id -> (timeslot, room)`` keeps ``partial`` feasible."""
    if not isinstance(partial, PartialAssignment):
        partial = PartialAssignment.from_assignment(instance, partial)
    return partial.can_place(event_id, timeslot, room)


def absolute_gap_ok(f_h: float, f_ref: float, eps: float) -> bool:
    if eps < 0:
        raise ValueError(f"tolerance must be non-negative, got {eps}")
    return f_h <= f_ref + eps


def relative_gap(f_h: float, f_ref: float) -> float:
    """``(f_h - f_ref) / f_h``, normalised by the heuristic value."""
    if f_h == 0:
        raise ValueError("relative gap is undefined for a zero heuristic value")
    return (f_h - f_ref) / f_h


Neighborhood = Callable[[Instance, Solution], Iterable[dict[str, tuple[int, str]]]]


def single_event_moves(instance: Instance, solution: Solution) -> Iterator[dict[str, tuple[int, str]]]:
    """Feasible solutions that differ from ``solution`` by relocating one non-fixed event."""
    base = PartialAssignment.from_assignment(instance, solution.assignments)
    for e in instance.events:
        if e.fixed is not None:
            continue
        here = base.placed[e.id]
        base.remove(e.id)
        try:
            for t in range(instance.num_timeslots):
                for r in instance.rooms:
                    if (t, r.id) != here and base.can_place(e.id, t, r.id):
                        moved = dict(solution.assignments)
                        moved[e.id] = (t, r.id)
                        yield moved
        finally:
            base.place(e.id, *here)


def is_local_optimum(instance: Instance, solution: Solution,
                     neighborhood: Neighborhood = single_event_moves) -> bool:
    """True iff no feasible neighbour is cheaper by more than the tie tolerance."""
    if hard_violations(instance, solution.assignments, complete=True):
        raise ValueError("local-optimum test needs a feasible solution")
    current = cost(instance, solution.assignments)
    if neighborhood is single_event_moves:
        # Separable objective: compare the moved event's penalty only.
        return _single_move_optimal(instance, solution)
    return all(current <= cost(instance, x) + COST_TOLERANCE for x in neighborhood(instance, solution))


def _single_move_optimal(instance: Instance, solution: Solution) -> bool:
    base = PartialAssignment.from_assignment(instance, solution.assignments)
    for e in instance.events:
        if e.fixed is not None:
            continue
        here = base.placed[e.id]
        old = placement_penalty(instance, e, *here)
        base.remove(e.id)
        for t in range(instance.num_timeslots):
            for r in instance.rooms:
                if base.can_place(e.id, t, r.id) and placement_penalty(instance, e, t, r.id) < old - COST_TOLERANCE:
                    return False
        base.place(e.id, *here)
    return True
