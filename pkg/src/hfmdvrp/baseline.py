"""a-nCAR: nearest-neighbour clustering and routing, adapted to dispersed robots.

Each round, every robot grows a capacity-bounded cluster from where it
stands by repeatedly taking the nearest remaining pick that still fits, the
cluster is reordered into a short open path ending at the delivery station
nearest its last pick, and the cheapest of these candidate routes is
committed. The committed robot then stands at that station. Rounds repeat
until no pick remains.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cost import RobotState, TaskTable, nearest_station
from .domain import InfeasibleTaskError
from .model import (
    REL_TOL,
    DeliveryStation,
    Instance,
    PickingTask,
    Point,
    Robot,
    Solution,
    deliver,
    manhattan,
    pick,
    solution_from_routes,
    validate_instance,
)

ALGORITHM = "a-ncar"

IMPROVERS = ("2opt", "christofides")


@dataclass
class BaselineConfig:
    improver: str = "2opt"
    tie_tolerance: float = REL_TOL

    def __post_init__(self) -> None:
        if self.improver not in IMPROVERS:
            raise ValueError(f"unknown route improver {self.improver!r}; expected one of {IMPROVERS}")


@dataclass(frozen=True)
class FeasibleCluster:
    robot_id: int
    picks: tuple[int, ...]
    total_demand: int


def build_feasible_cluster(state: RobotState, remaining: Sequence[PickingTask]) -> FeasibleCluster:
    """Greedy nearest-neighbour cluster starting from the robot's position.

    Ties in distance go to the lowest task id. Stops when nothing left fits.
    """
    tasks = sorted(remaining, key=lambda t: t.id)
    if not tasks:
        return FeasibleCluster(state.robot.id, (), 0)
    x = np.array([t.pos[0] for t in tasks], dtype=np.int64)
    y = np.array([t.pos[1] for t in tasks], dtype=np.int64)
    d = np.array([t.demand for t in tasks], dtype=np.int64)
    cols = _grow_cluster(x, y, d, np.ones(len(tasks), dtype=bool), state.pos, state.gamma)
    picked = tuple(tasks[j].id for j in cols)
    return FeasibleCluster(state.robot.id, picked, int(d[cols].sum()) if cols else 0)


def _grow_cluster(
    x: np.ndarray, y: np.ndarray, demand: np.ndarray, avail: np.ndarray, start, capacity: int
) -> list[int]:
    avail = avail.copy()
    px, py = start
    residual = capacity
    chosen: list[int] = []
    while True:
        cand = np.flatnonzero(avail & (demand <= residual))
        if len(cand) == 0:
            return chosen
        dist = np.abs(x[cand] - px) + np.abs(y[cand] - py)
        j = int(cand[np.argmin(dist)])
        chosen.append(j)
        avail[j] = False
        residual -= int(demand[j])
        px, py = int(x[j]), int(y[j])


def _open_path_meters(start: Point, pts: Sequence[Point], stations: Sequence[DeliveryStation]) -> int:
    if not pts:
        return 0
    meters = manhattan(start, pts[0])
    for a, b in zip(pts, pts[1:]):
        meters += manhattan(a, b)
    return meters + manhattan(pts[-1], nearest_station(pts[-1], stations).pos)


def _two_opt(points: np.ndarray, close: np.ndarray) -> list[int]:
    """Best-improvement 2-opt on an open path with a fixed first node.

    ``points`` holds the start in row 0 followed by the picks; ``close[a]``
    is the cost of ending the path at node ``a``. Returns the visiting order
    of the picks as indices 1..k.
    """
    k = len(points) - 1
    order = np.arange(k + 1)
    if k < 2:
        return list(order[1:])
    pts = points
    end = close.copy()
    iu = np.triu_indices(k + 1, 1)
    keep = iu[0] >= 1
    ii, jj = iu[0][keep], iu[1][keep]
    while True:
        dist = np.abs(pts[:, None, 0] - pts[None, :, 0]) + np.abs(pts[:, None, 1] - pts[None, :, 1])
        # succ[a, j]: cost from node a to whatever follows position j
        succ = np.concatenate([dist[:, 1:], end[:, None]], axis=1)
        delta = dist[ii - 1, jj] + succ[ii, jj] - dist[ii - 1, ii] - succ[jj, jj]
        best = int(np.argmin(delta))
        if delta[best] >= 0:
            return list(order[1:])
        i, j = int(ii[best]), int(jj[best])
        perm = np.arange(k + 1)
        perm[i : j + 1] = perm[i : j + 1][::-1]
        order = order[perm]
        pts = pts[perm]
        end = end[perm]


def _christofides(points: np.ndarray, close: np.ndarray) -> list[int]:
    import networkx as nx
    from networkx.algorithms.approximation import christofides

    k = len(points) - 1
    if k < 3:
        return _two_opt(points, close)
    g = nx.Graph()
    for a in range(k + 1):
        for b in range(a + 1, k + 1):
            w = abs(int(points[a, 0] - points[b, 0])) + abs(int(points[a, 1] - points[b, 1]))
            g.add_edge(a, b, weight=w)
    cycle = christofides(g)[:-1]
    at = cycle.index(0)
    path = cycle[at + 1 :] + cycle[:at]
    best = None
    for cand in (path, path[::-1]):
        seq = [0] + cand
        meters = sum(
            abs(int(points[a, 0] - points[b, 0])) + abs(int(points[a, 1] - points[b, 1]))
            for a, b in zip(seq, seq[1:])
        ) + int(close[cand[-1]])
        if best is None or meters < best[0]:
            best = (meters, cand)
    return best[1]


def improve_route(
    cluster: FeasibleCluster,
    robot: Robot,
    stations: Sequence[DeliveryStation],
    tasks: Sequence[PickingTask] | None = None,
    *,
    start: Point | None = None,
    improver: str = "2opt",
) -> tuple[int, ...]:
    """Reorder the cluster's picks into a shorter open path ending at a station.

    The path runs from ``start`` (default: the robot's start position)
    through every pick to the station nearest the last pick. The returned
    order never costs more than the cluster's own order.
    """
    if len(cluster.picks) < 2:
        return tuple(cluster.picks)
    if tasks is None:
        raise ValueError("task records are needed to reorder a cluster")
    by_id = {t.id: t for t in tasks}
    origin = robot.start if start is None else start
    pts = [origin] + [by_id[tid].pos for tid in cluster.picks]
    points = np.array(pts, dtype=np.int64)
    sx = np.array([s.pos[0] for s in stations], dtype=np.int64)
    sy = np.array([s.pos[1] for s in stations], dtype=np.int64)
    close = (np.abs(points[:, None, 0] - sx[None, :]) + np.abs(points[:, None, 1] - sy[None, :])).min(axis=1)
    order = _reorder(points, close, improver)
    new = tuple(cluster.picks[i - 1] for i in order)
    before = _open_path_meters(origin, pts[1:], stations)
    after = _open_path_meters(origin, [by_id[t].pos for t in new], stations)
    return new if after <= before else tuple(cluster.picks)


def _reorder(points: np.ndarray, close: np.ndarray, improver: str) -> list[int]:
    if improver == "christofides":
        return _christofides(points, close)
    return _two_opt(points, close)


def solve_ancar(inst: Instance, cfg: BaselineConfig | None = None) -> Solution:
    cfg = cfg or BaselineConfig()
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.violations))
    started = time.perf_counter()
    routes = _run(inst, cfg)
    wall = time.perf_counter() - started
    return solution_from_routes(inst, routes, algorithm=ALGORITHM, wall_time=wall)


def _run(inst: Instance, cfg: BaselineConfig) -> dict[int, list]:
    table = TaskTable(inst.tasks, inst.stations)
    left = np.ones(len(table), dtype=bool)
    pos = {r.id: r.start for r in inst.robots}
    routes: dict[int, list] = {r.id: [] for r in inst.robots}
    task_xy = np.stack([table.x, table.y], axis=1) if len(table) else np.zeros((0, 2), dtype=np.int64)

    while left.any():
        best: tuple[float, int, list[int]] | None = None
        for robot in inst.robots:
            cols = _grow_cluster(table.x, table.y, table.demand, left, pos[robot.id], robot.max_capacity)
            if not cols:
                continue
            points = np.vstack([np.array([pos[robot.id]], dtype=np.int64), task_xy[cols]])
            close = np.concatenate([[0], table.drop_dist[cols]])
            order = [cols[i - 1] for i in _reorder(points, close, cfg.improver)]
            meters = _path_meters(pos[robot.id], order, table)
            nn_meters = _path_meters(pos[robot.id], cols, table)
            if nn_meters < meters:
                order, meters = cols, nn_meters
            cost = meters / robot.speed
            if best is None or (cost < best[0] and not math.isclose(cost, best[0], rel_tol=cfg.tie_tolerance)):
                best = (cost, robot.id, order)
        if best is None:
            j = int(np.flatnonzero(left)[np.argmax(table.demand[left])])
            raise InfeasibleTaskError(int(table.ids[j]), int(table.demand[j]))
        _, rid, order = best
        last = order[-1]
        station_row = int(table.drop_station[last])
        routes[rid].extend(pick(int(table.ids[c])) for c in order)
        routes[rid].append(deliver(int(table.station_ids[station_row])))
        pos[rid] = (int(table.sx[station_row]), int(table.sy[station_row]))
        left[order] = False
    return routes


def _path_meters(start, cols: Sequence[int], table: TaskTable) -> int:
    xs = [start[0]] + [int(table.x[c]) for c in cols]
    ys = [start[1]] + [int(table.y[c]) for c in cols]
    meters = sum(abs(xs[i + 1] - xs[i]) + abs(ys[i + 1] - ys[i]) for i in range(len(cols)))
    return meters + int(table.drop_dist[cols[-1]])
