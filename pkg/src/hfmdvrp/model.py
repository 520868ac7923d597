"""Problem and solution data model.

Positions are integer grid points, demands and capacities integer kilograms,
and every cost is a travel time in seconds (Manhattan metres over robot
speed). Picking tasks, delivery stations and robots carry dense 1-based ids
within their own kind.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

REL_TOL = 1e-9

MAX_ORACLE_TASKS = 8
MAX_ORACLE_ROBOTS = 3


class Point(NamedTuple):
    x: int
    y: int


def manhattan(a: Point, b: Point) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def costs_close(a: float, b: float, rel_tol: float = REL_TOL) -> bool:
    return math.isclose(a, b, rel_tol=rel_tol, abs_tol=0.0)


class Family(str, Enum):
    """Instance families: single/multi depot crossed with homogeneous/heterogeneous fleet."""

    XMT = "XMT"
    RMT = "RMT"
    WMT = "WMT"
    SMT = "SMT"

    @property
    def single_station(self) -> bool:
        return self in (Family.XMT, Family.RMT)

    @property
    def homogeneous(self) -> bool:
        return self in (Family.XMT, Family.WMT)

    @property
    def problem_type(self) -> str:
        return _PROBLEM_TYPES[self]

    @classmethod
    def from_problem_type(cls, text: str) -> Family:
        for fam, name in _PROBLEM_TYPES.items():
            if name == text:
                return fam
        raise ValueError(f"unknown problem type {text!r}")


_PROBLEM_TYPES = {
    Family.XMT: "CVRP",
    Family.RMT: "HFVRP",
    Family.WMT: "MDVRP-DV",
    Family.SMT: "HFMDVRP-DV",
}


@dataclass(frozen=True)
class PickingTask:
    id: int
    pos: Point
    demand: int


@dataclass(frozen=True)
class DeliveryStation:
    id: int
    pos: Point


@dataclass(frozen=True)
class Robot:
    id: int
    start: Point
    max_capacity: int
    speed: float
    model_name: str | None = None


@dataclass(frozen=True)
class Instance:
    name: str
    tasks: tuple[PickingTask, ...]
    stations: tuple[DeliveryStation, ...]
    robots: tuple[Robot, ...]
    family: Family = Family.SMT

    def __post_init__(self) -> None:
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "robots", tuple(self.robots))
        object.__setattr__(self, "family", Family(self.family))

    @cached_property
    def task_by_id(self) -> dict[int, PickingTask]:
        return {t.id: t for t in self.tasks}

    @cached_property
    def station_by_id(self) -> dict[int, DeliveryStation]:
        return {s.id: s for s in self.stations}

    @cached_property
    def robot_by_id(self) -> dict[int, Robot]:
        return {r.id: r for r in self.robots}

    @property
    def max_capacity(self) -> int:
        return max((r.max_capacity for r in self.robots), default=0)


class StepKind(str, Enum):
    PICK = "pick"
    DELIVER = "deliver"


class RouteStep(NamedTuple):
    kind: StepKind
    ref: int


def pick(task_id: int) -> RouteStep:
    return RouteStep(StepKind.PICK, task_id)


def deliver(station_id: int) -> RouteStep:
    return RouteStep(StepKind.DELIVER, station_id)


@dataclass(frozen=True)
class Solution:
    """Per-robot routes plus the aggregate figures reported for a run.

    ``routes`` maps every robot id of the instance to its ordered steps
    (possibly empty).
    """

    routes: Mapping[int, tuple[RouteStep, ...]]
    total_cost: float = 0.0
    depot_visits: int = 0
    used_robots: int = 0
    wall_time: float = 0.0
    algorithm: str = ""
    seed: int = 0
    instance: str = ""

    def steps(self) -> Iterable[tuple[int, RouteStep]]:
        for rid, route in self.routes.items():
            for step in route:
                yield rid, step


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, message: str) -> None:
        self.violations.append(message)

    def __iter__(self):
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def _dense(ids: Sequence[int]) -> bool:
    return list(ids) == list(range(1, len(ids) + 1))


def validate_instance(inst: Instance) -> ValidationReport:
    report = ValidationReport()
    for kind, ids in (
        ("task", [t.id for t in inst.tasks]),
        ("station", [s.id for s in inst.stations]),
        ("robot", [r.id for r in inst.robots]),
    ):
        if not _dense(ids):
            report.add(f"{kind} ids not dense 1..{len(ids)} in order")
    if not inst.stations:
        report.add("no delivery station")
    if not inst.robots:
        report.add("no robot")
    for t in inst.tasks:
        if t.demand < 1:
            report.add(f"task {t.id}: demand {t.demand} not positive")
    for r in inst.robots:
        if r.max_capacity < 1:
            report.add(f"robot {r.id}: capacity {r.max_capacity} not positive")
        if not (math.isfinite(r.speed) and r.speed > 0):
            report.add(f"robot {r.id}: speed {r.speed} not positive")
    if inst.tasks and inst.robots:
        top = inst.max_capacity
        worst = max(inst.tasks, key=lambda t: t.demand)
        if worst.demand > top:
            report.add(
                f"task {worst.id}: demand exceeds fleet max capacity ({worst.demand} > {top})"
            )
    fam = inst.family
    if fam.single_station:
        if len(inst.stations) != 1:
            report.add(
                f"family/station-count mismatch: {fam.value} needs exactly one station, "
                f"got {len(inst.stations)}"
            )
        elif any(r.start != inst.stations[0].pos for r in inst.robots):
            report.add(f"family {fam.value}: robots must start at the station")
    if fam.homogeneous and len({(r.max_capacity, r.speed) for r in inst.robots}) > 1:
        report.add(f"family {fam.value}: fleet must be homogeneous")
    return report


def route_cost(inst: Instance, robot: Robot, route: Sequence[RouteStep]) -> float:
    """Travel time of ``route`` starting from the robot's start position."""
    meters = 0
    here = robot.start
    for step in route:
        there = _step_pos(inst, step)
        meters += manhattan(here, there)
        here = there
    return meters / robot.speed


def _step_pos(inst: Instance, step: RouteStep) -> Point:
    if step.kind is StepKind.PICK:
        return inst.task_by_id[step.ref].pos
    return inst.station_by_id[step.ref].pos


def solution_from_routes(
    inst: Instance,
    routes: Mapping[int, Sequence[RouteStep]],
    *,
    algorithm: str = "",
    seed: int = 0,
    wall_time: float = 0.0,
) -> Solution:
    """Build a Solution whose aggregates are computed from the routes themselves."""
    full = {r.id: tuple(routes.get(r.id, ())) for r in inst.robots}
    total = sum(route_cost(inst, inst.robot_by_id[rid], steps) for rid, steps in full.items())
    visits = sum(1 for steps in full.values() for s in steps if s.kind is StepKind.DELIVER)
    used = sum(1 for steps in full.values() if any(s.kind is StepKind.PICK for s in steps))
    return Solution(
        routes=full,
        total_cost=total,
        depot_visits=visits,
        used_robots=used,
        wall_time=wall_time,
        algorithm=algorithm,
        seed=seed,
        instance=inst.name,
    )


def validate_solution(inst: Instance, sol: Solution) -> ValidationReport:
    report = ValidationReport()
    seen: dict[int, int] = {}
    total = 0.0
    visits = 0
    used = 0
    for rid, route in sol.routes.items():
        robot = inst.robot_by_id.get(rid)
        if robot is None:
            report.add(f"unknown robot {rid}")
            continue
        load = 0
        picks = 0
        broken = False
        for k, step in enumerate(route):
            if step.kind is StepKind.PICK:
                task = inst.task_by_id.get(step.ref)
                if task is None:
                    report.add(f"robot {rid} step {k}: unknown task {step.ref}")
                    broken = True
                    continue
                seen[task.id] = seen.get(task.id, 0) + 1
                load += task.demand
                picks += 1
                if load > robot.max_capacity:
                    report.add(
                        f"robot {rid} step {k}: capacity exceeded ({load} > {robot.max_capacity})"
                    )
            elif step.kind is StepKind.DELIVER:
                if step.ref not in inst.station_by_id:
                    report.add(f"robot {rid} step {k}: unknown station {step.ref}")
                    broken = True
                    continue
                load = 0
                visits += 1
            else:
                report.add(f"robot {rid} step {k}: unknown step kind {step.kind!r}")
                broken = True
        if route and route[-1].kind is not StepKind.DELIVER:
            report.add(f"robot {rid}: route does not end with a delivery")
        if picks:
            used += 1
        if not broken:
            total += route_cost(inst, robot, route)
    for t in inst.tasks:
        n = seen.get(t.id, 0)
        if n == 0:
            report.add(f"task {t.id}: task not covered")
        elif n > 1:
            report.add(f"task {t.id}: picked {n} times")
    if sol.used_robots != used:
        report.add(f"used_robots {sol.used_robots} != {used} robots with picks")
    if sol.depot_visits != visits:
        report.add(f"depot_visits {sol.depot_visits} != {visits} delivery steps")
    if not costs_close(sol.total_cost, total):
        report.add(f"total_cost {sol.total_cost!r} != recomputed {total!r}")
    return report


def brute_force_optimum(inst: Instance) -> Solution:
    """Exact minimum-cost solution for desk-sized instances.

    Every split of the tasks among the robots is enumerated. For each robot
    and task subset the best route is found by exhaustive search over visit
    orders and delivery points, run as a dynamic program over
    (visited set, last task, load since the last delivery). Between two
    picks the robot either continues directly or detours through the
    station minimising the detour; a route always closes at the station
    nearest to its last pick. Visiting a station when not forced, or twice
    in a row, never shortens a Manhattan path, so nothing cheaper is lost.
    """
    m, n = len(inst.tasks), len(inst.robots)
    if m > MAX_ORACLE_TASKS or n > MAX_ORACLE_ROBOTS:
        raise ValueError(
            f"brute force limited to {MAX_ORACLE_TASKS} tasks and {MAX_ORACLE_ROBOTS} robots "
            f"(got {m} and {n})"
        )
    if m == 0:
        return solution_from_routes(inst, {}, algorithm="optimum")
    if not inst.stations:
        raise ValueError("instance has no delivery station")

    tasks = inst.tasks
    stations = inst.stations
    best_subset = [_best_routes_for_robot(inst, robot) for robot in inst.robots]

    full = (1 << m) - 1
    best_cost = math.inf
    best_split: tuple[int, ...] | None = None
    for owners in itertools.product(range(n), repeat=m):
        masks = [0] * n
        for j, owner in enumerate(owners):
            masks[owner] |= 1 << j
        cost = 0.0
        for i, mask in enumerate(masks):
            c = best_subset[i][mask][0]
            cost += c
            if cost >= best_cost:
                break
        if cost < best_cost and not costs_close(cost, best_cost):
            best_cost = cost
            best_split = tuple(masks)
    if best_split is None or not math.isfinite(best_cost):
        raise ValueError("no feasible assignment")
    assert sum(best_split) == full
    routes = {}
    for i, (robot, mask) in enumerate(zip(inst.robots, best_split)):
        order = best_subset[i][mask][1]
        routes[robot.id] = _materialize(order, tasks, stations)
    return solution_from_routes(inst, routes, algorithm="optimum")


def _nearest(pos: Point, stations: Sequence[DeliveryStation]) -> DeliveryStation:
    return min(stations, key=lambda s: (manhattan(pos, s.pos), s.id))


def _materialize(
    plan: tuple[tuple[int, bool], ...],
    tasks: Sequence[PickingTask],
    stations: Sequence[DeliveryStation],
) -> tuple[RouteStep, ...]:
    """Turn (task index, detour-before) pairs into route steps."""
    steps: list[RouteStep] = []
    prev: PickingTask | None = None
    for j, detour in plan:
        task = tasks[j]
        if detour:
            assert prev is not None
            s = min(
                stations,
                key=lambda s: (manhattan(prev.pos, s.pos) + manhattan(s.pos, task.pos), s.id),
            )
            steps.append(deliver(s.id))
        steps.append(pick(task.id))
        prev = task
    if prev is not None:
        steps.append(deliver(_nearest(prev.pos, stations).id))
    return tuple(steps)


def _best_routes_for_robot(
    inst: Instance, robot: Robot
) -> list[tuple[float, tuple[tuple[int, bool], ...]]]:
    """Best (cost, plan) for every task subset served by ``robot`` alone."""
    tasks = inst.tasks
    m = len(tasks)
    cap = robot.max_capacity
    stations = inst.stations
    direct = [[manhattan(a.pos, b.pos) for b in tasks] for a in tasks]
    detour = [
        [min(manhattan(a.pos, s.pos) + manhattan(s.pos, b.pos) for s in stations) for b in tasks]
        for a in tasks
    ]
    close = [min(manhattan(t.pos, s.pos) for s in stations) for t in tasks]

    # states[(mask, last, load)] = (meters, plan)
    states: dict[tuple[int, int, int], tuple[int, tuple[tuple[int, bool], ...]]] = {}
    frontier = []
    for j, t in enumerate(tasks):
        if t.demand <= cap:
            key = (1 << j, j, t.demand)
            states[key] = (manhattan(robot.start, t.pos), ((j, False),))
            frontier.append(key)
    by_size: dict[int, list[tuple[int, int, int]]] = {1: frontier}
    for size in range(1, m):
        nxt: dict[tuple[int, int, int], None] = {}
        for key in by_size.get(size, ()):
            mask, last, load = key
            meters, plan = states[key]
            for j, t in enumerate(tasks):
                if mask >> j & 1 or t.demand > cap:
                    continue
                options = []
                if load + t.demand <= cap:
                    options.append(((mask | 1 << j, j, load + t.demand), meters + direct[last][j], False))
                options.append(((mask | 1 << j, j, t.demand), meters + detour[last][j], True))
                for nkey, nmeters, via in options:
                    cur = states.get(nkey)
                    if cur is None or nmeters < cur[0]:
                        states[nkey] = (nmeters, plan + ((j, via),))
                        nxt[nkey] = None
        by_size[size + 1] = list(nxt)

    best: list[tuple[float, tuple[tuple[int, bool], ...]]] = [(math.inf, ())] * (1 << m)
    best[0] = (0.0, ())
    for (mask, last, _load), (meters, plan) in states.items():
        total = (meters + close[last]) / robot.speed
        if total < best[mask][0]:
            best[mask] = (total, plan)
    return best
