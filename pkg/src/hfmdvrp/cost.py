"""Variable-load-capacity cost estimator.

A robot's estimated cost of reaching a target is its travel time, inflated
with delivery-station legs when the robot's current load capacity forces a
station visit before the pick (it cannot carry the task now) or after it (no
other remaining pick would still fit). The estimate ranks robots and tasks;
reported solution costs are always plain leg times.

Two evaluation paths exist: ``edge_cost`` evaluates one robot/target pair by
scanning the remaining tasks, and ``cost_matrix`` evaluates all robots
against many tasks at once with numpy. They produce bit-identical floats
because both divide an integer metre sum by the speed once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import DeliveryStation, PickingTask, Point, Robot, RouteStep, StepKind, manhattan

INFEASIBLE = math.inf


@dataclass
class RobotState:
    robot: Robot
    pos: Point
    gamma: int
    executing: bool = False
    route: list[RouteStep] = field(default_factory=list)

    @classmethod
    def initial(cls, robot: Robot) -> RobotState:
        return cls(robot=robot, pos=robot.start, gamma=robot.max_capacity)

    @property
    def first_pick(self) -> bool:
        return self.gamma == self.robot.max_capacity and not any(
            s.kind is StepKind.PICK for s in self.route
        )


@dataclass(frozen=True)
class CostContext:
    """Snapshot of the unassigned picks (id -> demand) and the stations."""

    remaining: Mapping[int, int]
    stations: Sequence[DeliveryStation]

    @classmethod
    def from_tasks(cls, tasks: Sequence[PickingTask], stations: Sequence[DeliveryStation]) -> CostContext:
        return cls({t.id: t.demand for t in tasks}, tuple(stations))


def nearest_station(pos: Point, stations: Sequence[DeliveryStation]) -> DeliveryStation:
    """Closest station by Manhattan distance; ties go to the lowest id."""
    if not stations:
        raise ValueError("no delivery station")
    return min(stations, key=lambda s: (manhattan(pos, s.pos), s.id))


def is_feasible(
    target: PickingTask | DeliveryStation, state: RobotState, first_pick: bool = False
) -> bool:
    if isinstance(target, DeliveryStation):
        return True
    d = target.demand
    if state.robot.max_capacity < d:
        return False
    if first_pick:
        return True
    return state.gamma >= d


def edge_case(target: PickingTask | DeliveryStation, state: RobotState, ctx: CostContext) -> int:
    """Which of the five estimator cases applies (1..5)."""
    if isinstance(target, DeliveryStation):
        return 2
    d = target.demand
    cap = state.robot.max_capacity
    if d > cap:
        return 1
    others = [dc for tid, dc in ctx.remaining.items() if tid != target.id]
    if state.gamma >= d:
        left = state.gamma - d
        return 2 if any(dc <= left for dc in others) else 3
    left = cap - d
    return 4 if any(dc <= left for dc in others) else 5


def edge_cost(
    frm: Point,
    target: PickingTask | DeliveryStation,
    state: RobotState,
    ctx: CostContext,
) -> float:
    """Estimated travel time from ``frm`` to ``target`` for the robot in ``state``.

    Returns ``INFEASIBLE`` when the pick exceeds the robot's maximum capacity.
    """
    case = edge_case(target, state, ctx)
    if case == 1:
        return INFEASIBLE
    speed = state.robot.speed
    if case == 2:
        return manhattan(frm, target.pos) / speed
    if case == 3:
        drop = nearest_station(target.pos, ctx.stations)
        return (manhattan(frm, target.pos) + manhattan(target.pos, drop.pos)) / speed
    via = nearest_station(frm, ctx.stations)
    meters = manhattan(frm, via.pos) + manhattan(via.pos, target.pos)
    if case == 5:
        meters += manhattan(target.pos, nearest_station(target.pos, ctx.stations).pos)
    return meters / speed


class TaskTable:
    """Column-oriented copy of an instance's tasks and stations for vectorized costing.

    Task column ``j`` holds the task with id ``ids[j]``; columns follow the
    given task order, which callers keep sorted by id.
    """

    def __init__(self, tasks: Sequence[PickingTask], stations: Sequence[DeliveryStation]) -> None:
        if not stations:
            raise ValueError("no delivery station")
        self.ids = np.array([t.id for t in tasks], dtype=np.int64)
        self.x = np.array([t.pos[0] for t in tasks], dtype=np.int64)
        self.y = np.array([t.pos[1] for t in tasks], dtype=np.int64)
        self.demand = np.array([t.demand for t in tasks], dtype=np.int64)
        self.station_ids = np.array([s.id for s in stations], dtype=np.int64)
        self.sx = np.array([s.pos[0] for s in stations], dtype=np.int64)
        self.sy = np.array([s.pos[1] for s in stations], dtype=np.int64)
        # stations x tasks
        self.station_task = np.abs(self.sx[:, None] - self.x[None, :]) + np.abs(
            self.sy[:, None] - self.y[None, :]
        )
        # nearest station per task; argmin keeps the first (lowest id) of ties
        if len(tasks):
            self.drop_station = np.argmin(self.station_task, axis=0)
            self.drop_dist = self.station_task[self.drop_station, np.arange(len(tasks))]
        else:
            self.drop_station = np.zeros(0, dtype=np.int64)
            self.drop_dist = np.zeros(0, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.ids)

    def nearest_station_index(self, px: np.ndarray, py: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Index into the station arrays and distance of the station nearest each point."""
        d = np.abs(px[:, None] - self.sx[None, :]) + np.abs(py[:, None] - self.sy[None, :])
        idx = np.argmin(d, axis=1)
        return idx, d[np.arange(len(px)), idx]


@dataclass
class RobotArrays:
    x: np.ndarray
    y: np.ndarray
    gamma: np.ndarray
    cap: np.ndarray
    speed: np.ndarray

    @classmethod
    def from_states(cls, states: Sequence[RobotState]) -> RobotArrays:
        return cls(
            x=np.array([s.pos[0] for s in states], dtype=np.int64),
            y=np.array([s.pos[1] for s in states], dtype=np.int64),
            gamma=np.array([s.gamma for s in states], dtype=np.int64),
            cap=np.array([s.robot.max_capacity for s in states], dtype=np.int64),
            speed=np.array([s.robot.speed for s in states], dtype=np.float64),
        )

    def take(self, rows) -> RobotArrays:
        return RobotArrays(self.x[rows], self.y[rows], self.gamma[rows], self.cap[rows], self.speed[rows])


def min_other_demands(demand: np.ndarray) -> np.ndarray:
    """For each entry, the smallest demand among the *other* entries (inf if alone)."""
    out = np.full(len(demand), np.inf)
    if len(demand) < 2:
        return out
    j0 = int(np.argmin(demand))
    first = demand[j0]
    rest = np.delete(demand, j0)
    out[:] = first
    out[j0] = rest.min()
    return out


def cost_matrix(
    table: TaskTable,
    robots: RobotArrays,
    cols: np.ndarray,
    remaining_cols: np.ndarray | None = None,
) -> np.ndarray:
    """Estimated costs, robots x ``cols``, against the picks in ``remaining_cols``.

    ``remaining_cols`` defaults to ``cols``; the targets must be a subset of
    the remaining picks.
    """
    if remaining_cols is None or remaining_cols is cols:
        min_other = min_other_demands(table.demand[cols])
    else:
        rem_d = table.demand[remaining_cols]
        if len(rem_d) == 0:
            min_other = np.full(len(cols), np.inf)
        else:
            j0 = int(np.argmin(rem_d))
            first_col = remaining_cols[j0]
            first = rem_d[j0]
            second = np.delete(rem_d, j0).min() if len(rem_d) > 1 else np.inf
            min_other = np.where(cols == first_col, second, first).astype(np.float64)

    d = table.demand[cols]
    need = min_other + d
    cap = robots.cap[:, None]

    meters = np.abs(robots.x[:, None] - table.x[cols]) + np.abs(robots.y[:, None] - table.y[cols])
    via_idx, via_dist = table.nearest_station_index(robots.x, robots.y)
    via = table.station_task[:, cols][via_idx]
    via += via_dist[:, None]

    fits_now = d <= robots.gamma[:, None]
    np.copyto(meters, via, where=~fits_now)
    # a drop leg follows the pick when no other pick would still fit
    limit = np.where(fits_now, robots.gamma[:, None], cap)
    meters += table.drop_dist[cols] * (need > limit)
    cost = meters / robots.speed[:, None]
    cost[d > cap] = INFEASIBLE
    return cost
