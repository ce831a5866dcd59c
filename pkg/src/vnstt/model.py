"""Timetabling instances and solutions: domain types, validation and JSON I/O.

Instance file layout::

    {"id": ..., "calendar": {"days": D, "periods_per_day": P},
     "rooms": [{"id", "capacity"}], "lecturers": [{"id"}],
     "groups": [{"id", "size"}],
     "events": [{"id", "lecturer", "groups": [...],
                 "fixed": {"timeslot", "room"}?, "unpreferred_timeslots": [...]?}],
     "weights": {"w_late", "w_slack", "w_unpref"}?}

The order of ``events`` is the initial processing order used by the solver.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

logger = logging.getLogger(__name__)

DEFAULT_WEIGHTS = (1.0, 0.5, 2.0)
COST_TOLERANCE = 1e-9


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed into an :class:`Instance`."""


class SolutionFormatError(ValueError):
    """Raised when a solution file is malformed or does not fit its instance."""


class CostMismatchError(SolutionFormatError):
    pass


@dataclass(frozen=True)
class Calendar:
    days: int
    periods_per_day: int

    @property
    def num_timeslots(self) -> int:
        return self.days * self.periods_per_day

    def day(self, t: int) -> int:
        return t // self.periods_per_day

    def period(self, t: int) -> int:
        return t % self.periods_per_day


@dataclass(frozen=True)
class Room:
    id: str
    capacity: int


@dataclass(frozen=True)
class StudentGroup:
    id: str
    size: int


@dataclass(frozen=True)
class Lecturer:
    id: str


@dataclass(frozen=True)
class FixedPlacement:
    timeslot: int
    room: str


@dataclass(frozen=True)
class Event:
    id: str
    lecturer: str
    groups: tuple[str, ...]
    fixed: Optional[FixedPlacement] = None
    unpreferred_timeslots: tuple[int, ...] = ()

    @cached_property
    def unpreferred(self) -> frozenset[int]:
        return frozenset(self.unpreferred_timeslots)


@dataclass(frozen=True)
class CostWeights:
    w_late: float = DEFAULT_WEIGHTS[0]
    w_slack: float = DEFAULT_WEIGHTS[1]
    w_unpref: float = DEFAULT_WEIGHTS[2]


@dataclass(frozen=True)
class Instance:
    """An immutable timetabling problem.

    Lookup tables are built lazily, so an instance with dangling references can
    still be constructed and handed to :func:`validate_instance`.
    """

    id: str
    calendar: Calendar
    rooms: tuple[Room, ...]
    lecturers: tuple[Lecturer, ...]
    groups: tuple[StudentGroup, ...]
    events: tuple[Event, ...]
    weights: CostWeights = field(default_factory=CostWeights)

    @property
    def num_events(self) -> int:
        return len(self.events)

    @property
    def num_timeslots(self) -> int:
        return self.calendar.num_timeslots

    @cached_property
    def event_by_id(self) -> dict[str, Event]:
        return {e.id: e for e in self.events}

    @cached_property
    def room_by_id(self) -> dict[str, Room]:
        return {r.id: r for r in self.rooms}

    @cached_property
    def group_by_id(self) -> dict[str, StudentGroup]:
        return {g.id: g for g in self.groups}

    @cached_property
    def event_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.events)

    @cached_property
    def _event_index(self) -> dict[str, int]:
        return {e.id: n for n, e in enumerate(self.events, start=1)}

    def event_index(self, event_id: str) -> int:
        """1-based position of the event in the instance event list."""
        return self._event_index[event_id]

    @cached_property
    def _attendees(self) -> dict[str, int]:
        sizes = self.group_by_id
        return {e.id: sum(sizes[g].size for g in e.groups) for e in self.events}

    def attendees(self, event_id: str) -> int:
        return self._attendees[event_id]

    @cached_property
    def _room_order(self) -> dict[str, tuple[str, ...]]:
        # Adequate rooms per event, tightest capacity first, then lowest id.
        order = {}
        for e in self.events:
            need = self.attendees(e.id)
            fits = [r for r in self.rooms if r.capacity >= need]
            fits.sort(key=lambda r: ((r.capacity - need) / r.capacity, r.id))
            order[e.id] = tuple(r.id for r in fits)
        return order

    def adequate_rooms(self, event_id: str) -> tuple[str, ...]:
        """Rooms large enough for the event, ordered by increasing slack then id."""
        return self._room_order[event_id]

    def fixed_events(self) -> list[Event]:
        return [e for e in self.events if e.fixed is not None]


@dataclass(frozen=True)
class Solution:
    """A complete assignment ``event id -> (timeslot, room id)`` with its cost.

    Build one through :func:`make_solution` so the cost is computed, not trusted.
    """

    instance_id: str
    assignments: Mapping[str, tuple[int, str]]
    cost: float


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def make_solution(instance: Instance, assignments: Mapping[str, tuple[int, str]]) -> Solution:
    from .cost import cost

    placed = dict(assignments)
    return Solution(instance.id, placed, cost(instance, placed))


# -- validation --------------------------------------------------------------


def _duplicates(ids: Sequence[str]) -> list[str]:
    seen: set[str] = set()
    dup = []
    for i in ids:
        if i in seen and i not in dup:
            dup.append(i)
        seen.add(i)
    return dup


def validate_instance(instance: Instance) -> list[Violation]:
    """Return every structural problem of ``instance``; an empty list means valid."""
    out: list[Violation] = []

    def add(code: str, message: str) -> None:
        out.append(Violation(code, message))

    cal = instance.calendar
    if cal.days < 1 or cal.periods_per_day < 1:
        add("BAD_CALENDAR", f"calendar needs days >= 1 and periods_per_day >= 1, got {cal.days}x{cal.periods_per_day}")
    T = max(cal.num_timeslots, 0)

    for kind, items in (("room", instance.rooms), ("lecturer", instance.lecturers),
                        ("group", instance.groups), ("event", instance.events)):
        for d in _duplicates([x.id for x in items]):
            add("DUPLICATE_ID", f"duplicate {kind} id {d!r}")

    for r in instance.rooms:
        if r.capacity < 1:
            add("BAD_CAPACITY", f"room {r.id!r} has capacity {r.capacity}")
    for g in instance.groups:
        if g.size < 1:
            add("BAD_SIZE", f"group {g.id!r} has size {g.size}")

    w = instance.weights
    for name in ("w_late", "w_slack", "w_unpref"):
        if getattr(w, name) < 0:
            add("NEGATIVE_WEIGHT", f"{name} = {getattr(w, name)} is negative")

    if not instance.events:
        add("NO_EVENTS", "instance has no events")

    lecturers = {x.id for x in instance.lecturers}
    groups = {g.id: g for g in instance.groups}
    rooms = {r.id: r for r in instance.rooms}
    resolved = True
    for e in instance.events:
        if e.lecturer not in lecturers:
            add("UNKNOWN_LECTURER", f"event {e.id!r} references unknown lecturer {e.lecturer!r}")
            resolved = False
        if not e.groups:
            add("EMPTY_GROUPS", f"event {e.id!r} has no student groups")
        for g in e.groups:
            if g not in groups:
                add("UNKNOWN_GROUP", f"event {e.id!r} references unknown group {g!r}")
                resolved = False
        if len(set(e.groups)) != len(e.groups):
            add("DUPLICATE_GROUP", f"event {e.id!r} lists a group twice")
        for t in e.unpreferred_timeslots:
            if not 0 <= t < T:
                add("TIMESLOT_RANGE", f"event {e.id!r} unpreferred timeslot {t} outside [0, {T})")
        if e.fixed is not None:
            if not 0 <= e.fixed.timeslot < T:
                add("TIMESLOT_RANGE", f"event {e.id!r} fixed timeslot {e.fixed.timeslot} outside [0, {T})")
            if e.fixed.room not in rooms:
                add("UNKNOWN_ROOM", f"event {e.id!r} fixed to unknown room {e.fixed.room!r}")
                resolved = False

    if resolved:
        for e in instance.events:
            if e.fixed is None or e.fixed.room not in rooms:
                continue
            need = sum(groups[g].size for g in e.groups)
            cap = rooms[e.fixed.room].capacity
            if need > cap:
                add("FIXED_CAPACITY", f"fixed event {e.id!r} has {need} attendees in room {e.fixed.room!r} of capacity {cap}")
        fixed = instance.fixed_events()
        for i, a in enumerate(fixed):
            for b in fixed[i + 1:]:
                if a.fixed.timeslot != b.fixed.timeslot:
                    continue
                shared = []
                if a.lecturer == b.lecturer:
                    shared.append(f"lecturer {a.lecturer!r}")
                common = sorted(set(a.groups) & set(b.groups))
                if common:
                    shared.append("groups " + ", ".join(repr(g) for g in common))
                if a.fixed.room == b.fixed.room:
                    shared.append(f"room {a.fixed.room!r}")
                if shared:
                    add("FIXED_CONFLICT",
                        f"fixed events {a.id!r} and {b.id!r} share {'; '.join(shared)} at timeslot {a.fixed.timeslot}")
    return out


# -- instance I/O ------------------------------------------------------------


def _req(obj: Any, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    if key not in obj:
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"{where}: expected an integer, got {value!r}")
    return value


def _str(value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise InstanceFormatError(f"{where}: expected a string, got {value!r}")
    return value


def _list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise InstanceFormatError(f"{where}: expected a list")
    return value


def instance_from_dict(data: Any) -> Instance:
    cal = _req(data, "calendar", "instance")
    calendar = Calendar(_int(_req(cal, "days", "calendar"), "calendar.days"),
                        _int(_req(cal, "periods_per_day", "calendar"), "calendar.periods_per_day"))
    rooms = []
    for i, r in enumerate(_list(_req(data, "rooms", "instance"), "rooms")):
        w = f"rooms[{i}]"
        rooms.append(Room(_str(_req(r, "id", w), f"{w}.id"), _int(_req(r, "capacity", w), f"{w}.capacity")))
    lecturers = []
    for i, x in enumerate(_list(_req(data, "lecturers", "instance"), "lecturers")):
        w = f"lecturers[{i}]"
        lecturers.append(Lecturer(_str(_req(x, "id", w), f"{w}.id")))
    groups = []
    for i, g in enumerate(_list(_req(data, "groups", "instance"), "groups")):
        w = f"groups[{i}]"
        groups.append(StudentGroup(_str(_req(g, "id", w), f"{w}.id"), _int(_req(g, "size", w), f"{w}.size")))
    events = []
    for i, e in enumerate(_list(_req(data, "events", "instance"), "events")):
        w = f"events[{i}]"
        fixed = None
        if e.get("fixed") is not None:
            f = e["fixed"]
            fixed = FixedPlacement(_int(_req(f, "timeslot", f"{w}.fixed"), f"{w}.fixed.timeslot"),
                                   _str(_req(f, "room", f"{w}.fixed"), f"{w}.fixed.room"))
        unpref = tuple(_int(t, f"{w}.unpreferred_timeslots")
                       for t in _list(e.get("unpreferred_timeslots", []), f"{w}.unpreferred_timeslots"))
        grp = tuple(_str(g, f"{w}.groups") for g in _list(_req(e, "groups", w), f"{w}.groups"))
        events.append(Event(_str(_req(e, "id", w), f"{w}.id"), _str(_req(e, "lecturer", w), f"{w}.lecturer"),
                            grp, fixed, unpref))
    weights = CostWeights()
    if data.get("weights") is not None:
        wd = data["weights"]
        if not isinstance(wd, dict):
            raise InstanceFormatError("weights: expected an object")
        vals = []
        for name, default in zip(("w_late", "w_slack", "w_unpref"), DEFAULT_WEIGHTS):
            v = wd.get(name, default)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InstanceFormatError(f"weights.{name}: expected a number, got {v!r}")
            vals.append(float(v))
        weights = CostWeights(*vals)
    return Instance(_str(_req(data, "id", "instance"), "id"), calendar, tuple(rooms), tuple(lecturers),
                    tuple(groups), tuple(events), weights)


def instance_to_dict(instance: Instance) -> dict:
    events = []
    for e in instance.events:
        d: dict[str, Any] = {"id": e.id, "lecturer": e.lecturer, "groups": list(e.groups)}
        if e.fixed is not None:
            d["fixed"] = {"timeslot": e.fixed.timeslot, "room": e.fixed.room}
        d["unpreferred_timeslots"] = list(e.unpreferred_timeslots)
        events.append(d)
    w = instance.weights
    return {
        "id": instance.id,
        "calendar": {"days": instance.calendar.days, "periods_per_day": instance.calendar.periods_per_day},
        "rooms": [{"id": r.id, "capacity": r.capacity} for r in instance.rooms],
        "lecturers": [{"id": x.id} for x in instance.lecturers],
        "groups": [{"id": g.id, "size": g.size} for g in instance.groups],
        "events": events,
        "weights": {"w_late": w.w_late, "w_slack": w.w_slack, "w_unpref": w.w_unpref},
    }


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2, ensure_ascii=False) + "\n"


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(instance), encoding="utf-8")


def load_instance(path: str | Path) -> Instance:
    """Parse an instance file.

    Structural violations do not abort loading; they are logged and left for
    :func:`validate_instance` to report.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        instance = instance_from_dict(data)
    except InstanceFormatError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc
    except AttributeError as exc:
        raise InstanceFormatError(f"{path}: malformed structure ({exc})") from exc
    for v in validate_instance(instance):
        logger.warning("%s: %s: %s", path, v.code, v.message)
    return instance


# -- solution I/O ------------------------------------------------------------


def solution_to_dict(solution: Solution) -> dict:
    rows = [{"event": eid, "timeslot": t, "room": r}
            for eid, (t, r) in sorted(solution.assignments.items())]
    return {"instance_id": solution.instance_id, "cost": solution.cost, "assignments": rows}


def dumps_solution(solution: Solution) -> str:
    return json.dumps(solution_to_dict(solution), indent=2, ensure_ascii=False) + "\n"


def save_solution(solution: Solution, path: str | Path) -> None:
    Path(path).write_text(dumps_solution(solution), encoding="utf-8")


def solution_from_dict(data: Any, instance: Instance) -> Solution:
    if not isinstance(data, dict):
        raise SolutionFormatError("solution: expected an object")
    for key in ("instance_id", "cost", "assignments"):
        if key not in data:
            raise SolutionFormatError(f"solution: missing field {key!r}")
    if data["instance_id"] != instance.id:
        raise SolutionFormatError(f"solution is for instance {data['instance_id']!r}, not {instance.id!r}")
    T = instance.num_timeslots
    placed: dict[str, tuple[int, str]] = {}
    for i, row in enumerate(data["assignments"]):
        try:
            eid, t, room = row["event"], row["timeslot"], row["room"]
        except (KeyError, TypeError) as exc:
            raise SolutionFormatError(f"assignments[{i}]: malformed row") from exc
        if eid not in instance.event_by_id:
            raise SolutionFormatError(f"assignments[{i}]: unknown event {eid!r}")
        if room not in instance.room_by_id:
            raise SolutionFormatError(f"assignments[{i}]: unknown room {room!r}")
        if isinstance(t, bool) or not isinstance(t, int) or not 0 <= t < T:
            raise SolutionFormatError(f"assignments[{i}]: timeslot {t!r} outside [0, {T})")
        if eid in placed:
            raise SolutionFormatError(f"assignments[{i}]: event {eid!r} assigned twice")
        placed[eid] = (t, room)
    missing = [e for e in instance.event_ids if e not in placed]
    if missing:
        raise SolutionFormatError(f"events without assignment: {', '.join(missing)}")
    # Keep instance order so summation order matches the solver's.
    ordered = {e: placed[e] for e in instance.event_ids}
    sol = make_solution(instance, ordered)
    stored = data["cost"]
    if isinstance(stored, bool) or not isinstance(stored, (int, float)):
        raise SolutionFormatError(f"cost: expected a number, got {stored!r}")
    if abs(sol.cost - stored) > COST_TOLERANCE:
        raise CostMismatchError(f"stored cost {stored!r} differs from recomputed cost {sol.cost!r}")
    return sol


def load_solution(path: str | Path, instance: Instance) -> Solution:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SolutionFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return solution_from_dict(data, instance)
