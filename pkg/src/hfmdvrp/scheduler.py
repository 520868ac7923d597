"""DoNe-CPTA: domain-driven task allocation with a simulated arrival queue.

Robots take turns in order of simulated arrival at their current target.
Whenever the robot at the head of the queue holds a domain computed from a
state that is no longer current, all domains are recomputed. Between
recomputations each robot whose domain is still valid receives its cheapest
dominated task, or a detour to the nearest delivery station when its
remaining load capacity cannot carry that task.

Reported costs are leg times of the produced routes; the capacity-aware
estimate only decides who gets what.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .cost import RobotArrays, RobotState, TaskTable, cost_matrix, min_other_demands, nearest_station
from .domain import DomainMap, cheapest_col, domain_from_costs, min_cost_col
from .model import (
    REL_TOL,
    DeliveryStation,
    Instance,
    StepKind,
    deliver,
    manhattan,
    pick,
    solution_from_routes,
    Solution,
    validate_instance,
)

log = logging.getLogger(__name__)

ALGORITHM = "done-cpta"


class SchedulerError(RuntimeError):
    pass


@dataclass
class SchedulerConfig:
    tie_tolerance: float = REL_TOL
    # None means 10 x number of tasks
    max_outer_iterations: int | None = None

    def guard(self, n_tasks: int) -> int:
        if self.max_outer_iterations is not None:
            if self.max_outer_iterations <= 0:
                raise ValueError("max_outer_iterations must be positive")
            return self.max_outer_iterations
        return max(1, 10 * n_tasks)


@dataclass
class ArrivalQueue:
    """Remaining travel time per robot and the order in which robots are served.

    ``times`` survives across domain recomputations; ``slots`` lists the
    robots currently queued, ascending by time, then by descending domain
    size, then by id.
    """

    times: dict[int, float] = field(default_factory=dict)
    slots: list[int] = field(default_factory=list)

    @property
    def head(self) -> int | None:
        return self.slots[0] if self.slots else None

    def pop(self) -> int:
        return self.slots.pop(0)

    def sort(self, domain_sizes: Mapping[int, int]) -> None:
        times = self.times
        self.slots.sort(key=lambda rid: (times[rid], -domain_sizes.get(rid, 0), rid))

    def as_list(self) -> list[tuple[int, float]]:
        return [(rid, self.times[rid]) for rid in self.slots]


def _sizes(phi: Mapping[int, frozenset[int]] | DomainMap) -> dict[int, int]:
    if isinstance(phi, DomainMap):
        return phi.size_map
    return {rid: len(tasks) for rid, tasks in phi.items()}


def prepare_aq(
    queue: ArrivalQueue,
    states: Sequence[RobotState],
    phi: Mapping[int, frozenset[int]] | DomainMap,
) -> ArrivalQueue:
    """(Re)fill the queue with every robot, keeping known times, and sort it."""
    for st in states:
        rid = st.robot.id
        queue.times.setdefault(rid, 0.0)
        if queue.times[rid] == 0.0:
            st.executing = False
    queue.slots = [st.robot.id for st in states]
    queue.sort(_sizes(phi))
    return queue


def decrease_arrival_time(
    head: int, queue: ArrivalQueue, domains: DomainMap, tol: float = REL_TOL
) -> None:
    """Advance the simulated clock to the popped head's arrival.

    Every queued robot's time drops by the head's time (floored at zero);
    robots arriving at that moment and the head itself lose domain validity.
    """
    dt = queue.times[head]
    if dt > 0:
        for rid in queue.slots:
            if rid == head:
                continue
            t = queue.times[rid]
            if t <= 0:
                continue
            left = t - dt
            if left <= tol * max(t, dt):
                queue.times[rid] = 0.0
                domains.invalidate(rid)
            else:
                queue.times[rid] = left
    queue.times[head] = 0.0
    domains.invalidate(head)


def set_arrival_time(
    rid: int,
    travel: float,
    queue: ArrivalQueue,
    state: RobotState,
    domain_sizes: Mapping[int, int],
) -> None:
    queue.times[rid] = travel
    state.executing = travel > 0
    if rid not in queue.slots:
        queue.slots.append(rid)
    queue.sort(domain_sizes)


def best_depot(pos, stations: Sequence[DeliveryStation]) -> DeliveryStation:
    return nearest_station(pos, stations)


def add_last_depots(
    states: Sequence[RobotState], stations: Sequence[DeliveryStation]
) -> tuple[float, int]:
    """Close every unfinished route at the station nearest its last position."""
    added = 0.0
    visits = 0
    for st in states:
        if not st.route or st.route[-1].kind is StepKind.DELIVER:
            continue
        station = nearest_station(st.pos, stations)
        added += manhattan(st.pos, station.pos) / st.robot.speed
        visits += 1
        st.route.append(deliver(station.id))
        st.pos = station.pos
        st.gamma = st.robot.max_capacity
    return added, visits


def solve(inst: Instance, cfg: SchedulerConfig | None = None) -> Solution:
    cfg = cfg or SchedulerConfig()
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.violations))
    started = time.perf_counter()
    states = _run(inst, cfg)
    wall = time.perf_counter() - started
    return solution_from_routes(
        inst,
        {st.robot.id: st.route for st in states},
        algorithm=ALGORITHM,
        wall_time=wall,
    )


def _run(inst: Instance, cfg: SchedulerConfig) -> list[RobotState]:
    tol = cfg.tie_tolerance
    states = [RobotState.initial(r) for r in inst.robots]
    row_of = {st.robot.id: i for i, st in enumerate(states)}
    robot_ids = np.array([st.robot.id for st in states], dtype=np.int64)
    stations = inst.stations
    table = TaskTable(inst.tasks, stations)
    cache = _CostCache(table, len(states))
    left = np.ones(len(table), dtype=bool)
    queue = ArrivalQueue()
    guard = cfg.guard(len(inst.tasks))
    rounds = 0
    while left.any():
        rounds += 1
        if rounds > guard:
            raise SchedulerError(f"no progress after {guard} domain recomputations")
        cols = np.flatnonzero(left)
        arrays = RobotArrays.from_states(states)
        dm = domain_from_costs(table, cache.costs(arrays, cols), robot_ids, cols, tol)
        sizes = _sizes(dm)
        prepare_aq(queue, states, dm)
        # the cached cost rows stay exact until a pick this light leaves the pool
        light = _second_smallest(table.demand[cols])
        fresh = True
        while queue.slots and dm.is_valid(queue.head):
            rid = queue.pop()
            decrease_arrival_time(rid, queue, dm, tol)
            row = row_of[rid]
            st = states[row]
            phi_cols = dm.domain_cols(row)
            if len(phi_cols) == 0:
                # stays out of the queue until the next recomputation
                continue
            if fresh:
                col = cheapest_col(dm.domain_costs(row), phi_cols, tol)
            else:
                col = min_cost_col(table, arrays.take([row]), phi_cols, np.flatnonzero(left), tol)
            demand = int(table.demand[col])
            if st.gamma < demand:
                station = best_depot(st.pos, stations)
                travel = manhattan(st.pos, station.pos) / st.robot.speed
                st.route.append(deliver(station.id))
                st.gamma = st.robot.max_capacity
                st.pos = station.pos
            else:
                target = (int(table.x[col]), int(table.y[col]))
                travel = manhattan(st.pos, target) / st.robot.speed
                st.route.append(pick(int(table.ids[col])))
                st.gamma -= demand
                st.pos = inst.task_by_id[int(table.ids[col])].pos
                left[col] = False
                fresh = fresh and demand > light
                for other in dm.dominant_rows(col):
                    dm.valid[other] = False
            cache.moved[row] = True
            set_arrival_time(rid, travel, queue, st, sizes)
    log.debug("%s: %d domain recomputations for %d tasks", inst.name, rounds, len(inst.tasks))
    add_last_depots(states, stations)
    return states


class _CostCache:
    """Robots x all-tasks cost matrix, refreshed only where its inputs changed.

    A cell depends on the robot's position and load and on the smallest demand
    among the other remaining picks. Rows of robots that moved and columns
    whose smallest-other demand changed are recomputed; the rest is reused.
    """

    def __init__(self, table: TaskTable, n_robots: int) -> None:
        self.table = table
        self.cost = np.empty((n_robots, len(table)))
        self.min_other = np.full(len(table), np.nan)
        self.moved = np.ones(n_robots, dtype=bool)

    def costs(self, robots: RobotArrays, cols: np.ndarray) -> np.ndarray:
        min_other = min_other_demands(self.table.demand[cols])
        stale = cols[min_other != self.min_other[cols]]
        self.min_other[cols] = min_other
        rows = np.flatnonzero(self.moved)
        if len(rows):
            self.cost[np.ix_(rows, cols)] = cost_matrix(self.table, robots.take(rows), cols)
        keep = np.flatnonzero(~self.moved)
        if len(keep) and len(stale):
            self.cost[np.ix_(keep, stale)] = cost_matrix(self.table, robots.take(keep), stale, cols)
        self.moved[:] = False
        return self.cost[:, cols]


def _second_smallest(demand: np.ndarray) -> float:
    if len(demand) < 2:
        return -np.inf
    return float(np.partition(demand, 1)[1])
