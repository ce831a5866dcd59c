"""Seeded synthetic instances shaped like the N18 / N90 / N130 datasets.

Randomness comes from Python's ``random.Random`` (MT19937) seeded with the
integer seed. Only its ``random()`` method is used, the one part of the module
whose output CPython guarantees to keep stable across versions; integer draws,
shuffles and samples are derived from it here. Changing any of this changes
every generated instance.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Optional

from .construct import construct
from .model import (Calendar, CostWeights, Event, FixedPlacement, Instance, Lecturer, Room, StudentGroup,
                    validate_instance)

MAX_ATTEMPTS = 10
SECOND_GROUP_PROB = 0.25
_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15

# name -> (events, students, groups, lecturers, rooms)
PRESETS = {
    "N18": (18, 52, 4, 10, 10),
    "N90": (90, 175, 14, 29, 18),
    "N130": (130, 274, 21, 37, 22),
}


class UnsatisfiableSpecError(RuntimeError):
    code = "UNSATISFIABLE_SPEC"


@dataclass(frozen=True)
class GenSpec:
    events: int
    students: int
    groups: int
    lecturers: int
    rooms: int
    days: int = 5
    periods_per_day: int = 8
    seed: int = 0
    fixed_fraction: float = 0.0
    unpref_fraction: float = 0.1
    name: str = "gen"

    @property
    def num_timeslots(self) -> int:
        return self.days * self.periods_per_day

    def check(self) -> None:
        if min(self.events, self.groups, self.lecturers, self.rooms) < 1:
            raise ValueError("events, groups, lecturers and rooms must all be >= 1")
        if self.days < 1 or self.periods_per_day < 1:
            raise ValueError("calendar needs days >= 1 and periods_per_day >= 1")
        if self.students < self.groups:
            raise ValueError(f"need at least one student per group ({self.students} students, {self.groups} groups)")
        if self.rooms * self.num_timeslots < self.events:
            raise ValueError(f"{self.rooms} rooms x {self.num_timeslots} timeslots cannot hold {self.events} events")
        for name in ("fixed_fraction", "unpref_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def preset(name: str, seed: int = 0) -> GenSpec:
    try:
        n, s, g, l, r = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}") from None
    return GenSpec(n, s, g, l, r, seed=seed, name=name)


class _Stream:
    def __init__(self, seed: int):
        self._rng = random.Random(seed)

    def random(self) -> float:
        return self._rng.random()

    def below(self, n: int) -> int:
        return min(int(self._rng.random() * n), n - 1)

    def between(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)

    def shuffle(self, items: list) -> list:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, items, m: int) -> list:
        return self.shuffle(list(items))[:m]


def attempt_seed(seed: int, attempt: int) -> int:
    return (seed + attempt * _GOLDEN64) & _MASK64


def _build(spec: GenSpec, rng: _Stream) -> Optional[Instance]:
    T = spec.num_timeslots
    base, extra = divmod(spec.students, spec.groups)
    groups = [StudentGroup(f"g{i + 1}", base + (1 if i < extra else 0)) for i in range(spec.groups)]
    lecturers = [Lecturer(f"l{i + 1}") for i in range(spec.lecturers)]
    lect_order = rng.shuffle([x.id for x in lecturers])
    group_order = rng.shuffle([g.id for g in groups])
    size = {g.id: g.size for g in groups}

    n_unpref = math.floor(spec.unpref_fraction * T)
    drafts = []
    for i in range(spec.events):
        gs = [group_order[i % spec.groups]]
        if spec.groups > 1 and rng.random() < SECOND_GROUP_PROB:
            other = [g for g in group_order if g != gs[0]]
            gs.append(other[rng.below(len(other))])
        unpref = tuple(sorted(rng.sample(range(T), n_unpref)))
        drafts.append((f"e{i + 1}", lect_order[i % spec.lecturers], tuple(gs), unpref))

    need = [sum(size[g] for g in d[2]) for d in drafts]
    lo, hi = min(need), max(need)
    top = max(hi, math.ceil(hi * 1.2))
    caps = [rng.between(lo, top) for _ in range(spec.rooms)]
    if max(caps) < hi:
        caps[rng.below(spec.rooms)] = rng.between(hi, top)
    rooms = [Room(f"r{i + 1}", c) for i, c in enumerate(caps)]

    fixed: dict[int, FixedPlacement] = {}
    n_fixed = math.floor(spec.fixed_fraction * spec.events)
    busy: set[tuple[str, int]] = set()
    for i in sorted(rng.sample(range(spec.events), n_fixed)):
        eid, lect, gs, _ = drafts[i]
        options = [(t, r.id) for t in range(T) for r in rooms if r.capacity >= need[i]]
        for t, room in rng.shuffle(options):
            keys = {("L", lect, t), ("R", room, t)} | {("G", g, t) for g in gs}
            if not keys & busy:
                busy |= keys
                fixed[i] = FixedPlacement(t, room)
                break
        else:
            return None

    events = tuple(Event(eid, lect, gs, fixed.get(i), unpref) for i, (eid, lect, gs, unpref) in enumerate(drafts))
    return Instance(f"{spec.name}-s{spec.seed}", Calendar(spec.days, spec.periods_per_day), tuple(rooms),
                    tuple(lecturers), tuple(groups), events, CostWeights())


def generate(spec: GenSpec) -> Instance:
    """Deterministic instance for ``spec``; retried on perturbed streams if unsolvable.

    The result passes :func:`validate_instance` and the identity ordering of its
    events can be constructed.
    """
    spec.check()
    for attempt in range(MAX_ATTEMPTS):
        inst = _build(spec, _Stream(attempt_seed(spec.seed, attempt)))
        if inst is None or validate_instance(inst):
            continue
        if construct(inst, inst.event_ids).success:
            return inst
    raise UnsatisfiableSpecError(f"UNSATISFIABLE_SPEC: no solvable instance for {spec} after {MAX_ATTEMPTS} attempts")


def scaled_spec(n_events: int, seed: int = 0, **overrides) -> GenSpec:
    """Spec with resources in the same proportion to events as the N90 preset."""
    n, s, g, l, r = PRESETS["N90"]
    f = n_events / n
    spec = GenSpec(n_events, max(1, round(s * f)), max(1, round(g * f)), max(1, round(l * f)),
                   max(1, round(r * f)), seed=seed, name=f"N{n_events}")
    return replace(spec, **overrides)
