import random

import pytest

from vnstt.model import (Calendar, CostWeights, Event, FixedPlacement, Instance, Lecturer, Room, StudentGroup)

_acceptance_results = []


def micro_instance(seed, n_events=None, max_t=6, fixed_prob=0.3, weights=None):
    """Small random instance: N in 4..6 (or as given), T <= max_t, always valid."""
    rng = random.Random(seed)
    n = n_events or rng.randint(4, 6)
    while True:
        days, periods = rng.randint(1, 3), rng.randint(1, 3)
        if 2 <= days * periods <= max_t:
            break
    T = days * periods
    groups = [StudentGroup(f"g{i}", rng.randint(5, 20)) for i in range(rng.randint(2, 3))]
    lecturers = [Lecturer(f"l{i}") for i in range(rng.randint(2, 4))]
    events = []
    for i in range(n):
        gs = rng.sample([g.id for g in groups], rng.randint(1, 2))
        unpref = tuple(sorted(rng.sample(range(T), rng.randint(0, T // 2))))
        events.append(Event(f"e{i + 1}", rng.choice(lecturers).id, tuple(gs), None, unpref))
    size = {g.id: g.size for g in groups}
    need = [sum(size[g] for g in e.groups) for e in events]
    rooms = [Room(f"r{i}", rng.randint(10, 45)) for i in range(rng.randint(1, 3))]
    rooms[0] = Room("r0", max(need) + rng.randint(0, 10))
    if rng.random() < fixed_prob:
        j = rng.randrange(n)
        e = events[j]
        fits = [r for r in rooms if r.capacity >= need[j]]
        events[j] = Event(e.id, e.lecturer, e.groups, FixedPlacement(rng.randrange(T), rng.choice(fits).id),
                          e.unpreferred_timeslots)
    w = weights or CostWeights(round(rng.uniform(0, 2), 2), round(rng.uniform(0, 2), 2), round(rng.uniform(0, 3), 2))
    return Instance(f"micro-{seed}", Calendar(days, periods), tuple(rooms), tuple(lecturers), tuple(groups),
                    tuple(events), w)


@pytest.fixture
def micro():
    return micro_instance


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    _acceptance_results.append((marker.args[0], marker.args[1], call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for cid, text, ok in sorted(_acceptance_results):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  C{cid}  {text}")
