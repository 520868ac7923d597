"""Builders and independent reference implementations shared by the tests."""

from __future__ import annotations

import itertools
import math
import random

from hfmdvrp.cost import CostContext, edge_cost
from hfmdvrp.model import (
    DeliveryStation,
    Family,
    Instance,
    PickingTask,
    Point,
    Robot,
    manhattan,
)


def make_instance(tasks, stations, robots, family=Family.SMT, name="fixture") -> Instance:
    """tasks: (x, y, demand); stations: (x, y); robots: (x, y, capacity, speed)."""
    return Instance(
        name,
        tuple(PickingTask(i + 1, Point(x, y), d) for i, (x, y, d) in enumerate(tasks)),
        tuple(DeliveryStation(i + 1, Point(x, y)) for i, (x, y) in enumerate(stations)),
        tuple(Robot(i + 1, Point(x, y), c, v) for i, (x, y, c, v) in enumerate(robots)),
        family,
    )


def random_tiny(rng: random.Random, *, max_tasks=8, max_robots=3, max_stations=2, grid=30) -> Instance:
    """Random SMT instance within the exact-oracle size limits."""
    m = rng.randint(1, max_tasks)
    n = rng.randint(1, max_robots)
    p = rng.randint(1, max_stations)
    cells = rng.sample([(x, y) for x in range(grid) for y in range(grid)], m + n + p)
    caps = [rng.randint(5, 20) for _ in range(n)]
    tasks = [(x, y, rng.randint(1, max(caps))) for x, y in cells[:m]]
    stations = cells[m : m + p]
    robots = [(x, y, c, rng.choice([0.5, 1.0, 1.5, 2.0])) for (x, y), c in zip(cells[m + p :], caps)]
    return make_instance(tasks, stations, robots)


def naive_domain(states, tasks, stations, tol=1e-9):
    """psi by a plain double loop over edge_cost; the reference for compute_domain."""
    ctx = CostContext.from_tasks(tasks, stations)
    psi = {}
    for t in tasks:
        costs = {s.robot.id: edge_cost(s.pos, t, s, ctx) for s in states}
        finite = [c for c in costs.values() if math.isfinite(c)]
        best = min(finite)
        psi[t.id] = frozenset(
            rid
            for rid, c in costs.items()
            if math.isfinite(c) and (c - best) <= tol * max(abs(c), abs(best))
        )
    phi = {s.robot.id: frozenset(t for t, rs in psi.items() if s.robot.id in rs) for s in states}
    return phi, psi


def _single_robot_best(robot: Robot, tasks, stations) -> float:
    """Cheapest route for one robot over ``tasks`` by full enumeration.

    Tries every visiting order, every set of places to break the route for a
    delivery, every station for each break and every closing station.
    """
    if not tasks:
        return 0.0
    best = math.inf
    k = len(tasks)
    for order in itertools.permutations(tasks):
        for breaks in itertools.product((False, True), repeat=k - 1):
            load = order[0].demand
            ok = load <= robot.max_capacity
            for brk, t in zip(breaks, order[1:]):
                load = t.demand if brk else load + t.demand
                ok = ok and load <= robot.max_capacity
            if not ok:
                continue
            n_stops = sum(breaks) + 1
            for choice in itertools.product(stations, repeat=n_stops):
                meters = manhattan(robot.start, order[0].pos)
                here = order[0].pos
                used = 0
                for brk, t in zip(breaks, order[1:]):
                    if brk:
                        meters += manhattan(here, choice[used].pos)
                        here = choice[used].pos
                        used += 1
                    meters += manhattan(here, t.pos)
                    here = t.pos
                meters += manhattan(here, choice[used].pos)
                best = min(best, meters / robot.speed)
    return best


def exhaustive_optimum(inst: Instance) -> float:
    """Optimal total cost by enumerating assignments, orders, breaks and stations."""
    memo: dict[tuple[int, frozenset], float] = {}
    best = math.inf
    for owners in itertools.product(range(len(inst.robots)), repeat=len(inst.tasks)):
        total = 0.0
        for i, robot in enumerate(inst.robots):
            mine = frozenset(t.id for t, o in zip(inst.tasks, owners) if o == i)
            key = (i, mine)
            if key not in memo:
                memo[key] = _single_robot_best(
                    robot, [inst.task_by_id[t] for t in sorted(mine)], inst.stations
                )
            total += memo[key]
        best = min(best, total)
    return best
