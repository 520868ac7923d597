"""Robot domains: which robots reach each remaining task at minimal estimated cost.

This is a Voronoi-style partition of the tasks with robots as sites and the
capacity-aware estimator as the metric. A task tied between several robots
belongs to the domain of each of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .cost import INFEASIBLE, CostContext, RobotArrays, RobotState, TaskTable, cost_matrix, edge_cost
from .model import REL_TOL, DeliveryStation, PickingTask


class InfeasibleTaskError(ValueError):
    """A picking task no robot can carry."""

    def __init__(self, task_id: int, demand: int | None = None) -> None:
        self.task_id = task_id
        detail = f" (demand {demand})" if demand is not None else ""
        super().__init__(f"infeasible task {task_id}{detail}: no robot has enough capacity")


def near_min(cost, best, tol: float = REL_TOL):
    """Whether ``cost`` ties the minimum ``best`` within relative tolerance ``tol``.

    Works elementwise on numpy arrays and on plain floats alike.
    """
    return (cost - best) <= tol * np.maximum(np.abs(cost), np.abs(best))


@dataclass
class DomainMap:
    """Domains (robot -> dominated tasks) and dominants (task -> robots).

    Rows follow the robot order the map was computed from, columns the
    remaining tasks in id order. ``valid`` holds one flag per robot row.
    """

    robot_ids: np.ndarray
    task_ids: np.ndarray
    cols: np.ndarray
    dominant: np.ndarray
    costs: np.ndarray
    valid: np.ndarray

    @cached_property
    def phi(self) -> dict[int, frozenset[int]]:
        return {
            int(rid): frozenset(int(t) for t in self.task_ids[row])
            for rid, row in zip(self.robot_ids, self.dominant)
        }

    @cached_property
    def psi(self) -> dict[int, frozenset[int]]:
        return {
            int(tid): frozenset(int(r) for r in self.robot_ids[col])
            for tid, col in zip(self.task_ids, self.dominant.T)
        }

    @cached_property
    def sizes(self) -> np.ndarray:
        """Number of dominated tasks per robot row."""
        return self.dominant.sum(axis=1)

    @cached_property
    def size_map(self) -> dict[int, int]:
        """Domain size by robot id."""
        return dict(zip(self.robot_ids.tolist(), self.sizes.tolist()))

    def domain_cols(self, row: int) -> np.ndarray:
        """Table columns of the tasks dominated by robot ``row``."""
        return self.cols[self.dominant[row]]

    def domain_costs(self, row: int) -> np.ndarray:
        """Estimated costs of robot ``row`` for its dominated tasks, as of this map."""
        return self.costs[row, self.dominant[row]]

    def dominant_rows(self, col: int) -> np.ndarray:
        """Robot rows dominating table column ``col``."""
        pos = int(np.searchsorted(self.cols, col))
        return np.flatnonzero(self.dominant[:, pos])

    def is_valid(self, rid: int) -> bool:
        return bool(self.valid[self._row(rid)])

    def invalidate(self, rid: int) -> None:
        self.valid[self._row(rid)] = False

    def _row(self, rid: int) -> int:
        return self._rows[rid]

    @cached_property
    def _rows(self) -> dict[int, int]:
        return {int(rid): i for i, rid in enumerate(self.robot_ids)}


def domain_from_table(
    table: TaskTable,
    robots: RobotArrays,
    robot_ids: np.ndarray,
    cols: np.ndarray,
    tol: float = REL_TOL,
) -> DomainMap:
    """Vectorized domain computation over the table columns ``cols``."""
    return domain_from_costs(table, cost_matrix(table, robots, cols), robot_ids, cols, tol)


def domain_from_costs(
    table: TaskTable,
    cost: np.ndarray,
    robot_ids: np.ndarray,
    cols: np.ndarray,
    tol: float = REL_TOL,
) -> DomainMap:
    """Domains from an already computed robots x ``cols`` cost matrix."""
    if len(cols):
        best = cost.min(axis=0)
        lost = ~np.isfinite(best)
        if lost.any():
            j = int(np.flatnonzero(lost)[0])
            raise InfeasibleTaskError(int(table.ids[cols[j]]), int(table.demand[cols[j]]))
        # costs are non-negative and best is the column minimum, so the
        # near_min scale max(|c|, |best|) is c itself
        with np.errstate(invalid="ignore"):
            dominant = (cost - best) <= tol * cost
        dominant &= cost != INFEASIBLE
    else:
        dominant = np.zeros(cost.shape, dtype=bool)
    return DomainMap(
        robot_ids=np.asarray(robot_ids),
        task_ids=table.ids[cols],
        cols=np.asarray(cols),
        dominant=dominant,
        costs=cost,
        valid=np.ones(len(robot_ids), dtype=bool),
    )


def compute_domain(
    states: Sequence[RobotState],
    remaining: Sequence[PickingTask],
    stations: Sequence[DeliveryStation],
    tol: float = REL_TOL,
) -> DomainMap:
    """Domains of every robot over the remaining picks.

    Raises InfeasibleTaskError naming the first task (by id) that no robot
    can carry.
    """
    tasks = sorted(remaining, key=lambda t: t.id)
    table = TaskTable(tasks, stations)
    robots = RobotArrays.from_states(states)
    ids = np.array([s.robot.id for s in states], dtype=np.int64)
    return domain_from_table(table, robots, ids, np.arange(len(tasks)), tol)


def min_cost_task(
    phi_r: Sequence[int] | frozenset[int],
    state: RobotState,
    remaining: Sequence[PickingTask],
    stations: Sequence[DeliveryStation],
    tol: float = REL_TOL,
) -> int:
    """Id of the cheapest task in ``phi_r`` for ``state``; ties go to the lowest id."""
    if not phi_r:
        raise ValueError("empty domain")
    ctx = CostContext.from_tasks(remaining, stations)
    by_id = {t.id: t for t in remaining}
    costs = {tid: edge_cost(state.pos, by_id[tid], state, ctx) for tid in phi_r}
    best = min(costs.values())
    return min(tid for tid, c in costs.items() if near_min(c, best, tol))


def min_cost_col(
    table: TaskTable,
    robot: RobotArrays,
    phi_cols: np.ndarray,
    remaining_cols: np.ndarray,
    tol: float = REL_TOL,
) -> int:
    """Vectorized counterpart of ``min_cost_task`` for a single robot row."""
    cost = cost_matrix(table, robot, phi_cols, remaining_cols)[0]
    return cheapest_col(cost, phi_cols, tol)


def cheapest_col(cost: np.ndarray, phi_cols: np.ndarray, tol: float = REL_TOL) -> int:
    best = cost.min()
    with np.errstate(invalid="ignore"):
        ties = np.flatnonzero(near_min(cost, best, tol))
    # columns are in id order, so the first tie is the lowest id
    return int(phi_cols[ties[0]])
