import random

import numpy as np
import pytest

from hfmdvrp.cost import RobotArrays, RobotState, TaskTable
from hfmdvrp.domain import InfeasibleTaskError, compute_domain, min_cost_col, min_cost_task
from hfmdvrp.model import DeliveryStation, PickingTask, Point, Robot

from support import naive_domain

STATION = (DeliveryStation(1, Point(5, 5)),)


def robots(*specs):
    """specs: (x, y, capacity, speed)."""
    return [RobotState.initial(Robot(i + 1, Point(x, y), c, v)) for i, (x, y, c, v) in enumerate(specs)]


def picks(*specs):
    return [PickingTask(i + 1, Point(x, y), d) for i, (x, y, d) in enumerate(specs)]


def test_nearest_robot_takes_each_pick():
    dm = compute_domain(robots((0, 0, 100, 1.0), (10, 0, 100, 1.0)), picks((1, 0, 1), (9, 0, 1)), STATION)
    assert dm.phi == {1: frozenset({1}), 2: frozenset({2})}
    assert dm.psi == {1: frozenset({1}), 2: frozenset({2})}


def test_equidistant_pick_is_shared():
    states = robots((0, 0, 100, 1.0), (10, 0, 100, 1.0))
    dm = compute_domain(states, picks((5, 0, 1), (5, 9, 1)), STATION)
    assert dm.psi[1] == frozenset({1, 2})


def test_speed_compensates_distance():
    states = robots((0, 0, 100, 1.0), (10, 0, 100, 9.0))
    dm = compute_domain(states, picks((1, 0, 1), (2, 2, 1)), STATION)
    assert dm.psi[1] == frozenset({1, 2})


def test_incapable_robot_never_dominates():
    states = robots((0, 0, 10, 1.0), (50, 50, 200, 1.0))
    dm = compute_domain(states, picks((1, 0, 150), (2, 0, 5)), STATION)
    assert dm.psi[1] == frozenset({2})


def test_task_nobody_can_carry():
    with pytest.raises(InfeasibleTaskError) as err:
        compute_domain(robots((0, 0, 10, 1.0)), picks((1, 0, 5), (2, 0, 11)), STATION)
    assert err.value.task_id == 2


def test_validity_flags_start_true_and_toggle():
    dm = compute_domain(robots((0, 0, 9, 1.0), (3, 3, 9, 1.0)), picks((1, 1, 1)), STATION)
    assert dm.is_valid(1) and dm.is_valid(2)
    dm.invalidate(2)
    assert dm.is_valid(1) and not dm.is_valid(2)


def _random_config(rng: random.Random):
    m = rng.randint(1, 15)
    n = rng.randint(1, 5)
    p = rng.randint(1, 3)
    states = []
    for i in range(n):
        cap = rng.randint(5, 40)
        pos = Point(rng.randint(0, 40), rng.randint(0, 40))
        st = RobotState(Robot(i + 1, pos, cap, rng.choice([0.5, 1.0, 1.2, 2.0])), pos, rng.randint(0, cap))
        states.append(st)
    top = max(s.robot.max_capacity for s in states)
    tasks = picks(*[(rng.randint(0, 40), rng.randint(0, 40), rng.randint(1, top)) for _ in range(m)])
    stations = tuple(DeliveryStation(i + 1, Point(rng.randint(0, 40), rng.randint(0, 40))) for i in range(p))
    return states, tasks, stations


@pytest.mark.parametrize("seed", range(40))
def test_matches_naive_double_loop(seed):
    states, tasks, stations = _random_config(random.Random(seed))
    dm = compute_domain(states, tasks, stations)
    phi, psi = naive_domain(states, tasks, stations)
    assert dm.phi == phi
    assert dm.psi == psi
    assert sum(len(v) for v in dm.phi.values()) >= len(tasks)


@pytest.mark.parametrize("seed", range(20))
def test_uniform_speed_scaling_keeps_domains(seed):
    rng = random.Random(seed)
    states, tasks, stations = _random_config(rng)
    factor = rng.choice([0.5, 2.0, 3.0, 10.0])
    scaled = [
        RobotState(Robot(s.robot.id, s.robot.start, s.robot.max_capacity, s.robot.speed * factor), s.pos, s.gamma)
        for s in states
    ]
    a, b = compute_domain(states, tasks, stations), compute_domain(scaled, tasks, stations)
    assert a.phi == b.phi and a.psi == b.psi


@pytest.mark.parametrize("seed", range(20))
def test_translation_keeps_domains(seed):
    rng = random.Random(seed)
    states, tasks, stations = _random_config(rng)
    dx, dy = rng.randint(-100, 100), rng.randint(-100, 100)

    def mv(p):
        return Point(p.x + dx, p.y + dy)

    moved = [RobotState(s.robot, mv(s.pos), s.gamma) for s in states]
    tasks2 = [PickingTask(t.id, mv(t.pos), t.demand) for t in tasks]
    stations2 = tuple(DeliveryStation(s.id, mv(s.pos)) for s in stations)
    a, b = compute_domain(states, tasks, stations), compute_domain(moved, tasks2, stations2)
    assert a.psi == b.psi


class TestMinCostTask:
    def setup_method(self):
        self.state = robots((0, 0, 100, 1.0))[0]
        self.tasks = picks((1, 0, 1), (9, 0, 1), (0, 1, 1))

    def test_cheapest(self):
        assert min_cost_task({1, 2}, self.state, self.tasks, STATION) == 1

    def test_singleton(self):
        assert min_cost_task({2}, self.state, self.tasks, STATION) == 2

    def test_tie_goes_to_lowest_id(self):
        assert min_cost_task({3, 1}, self.state, self.tasks, STATION) == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            min_cost_task(set(), self.state, self.tasks, STATION)


@pytest.mark.parametrize("seed", range(30))
def test_vectorized_choice_agrees(seed):
    rng = random.Random(seed)
    states, tasks, stations = _random_config(rng)
    s = states[0]
    feasible = [t for t in tasks if t.demand <= s.robot.max_capacity]
    if not feasible:
        return
    phi = rng.sample(feasible, rng.randint(1, len(feasible)))
    table = TaskTable(tasks, stations)
    cols = np.array(sorted(t.id - 1 for t in phi))
    col = min_cost_col(table, RobotArrays.from_states([s]), cols, np.arange(len(tasks)))
    assert col + 1 == min_cost_task({t.id for t in phi}, s, tasks, stations)
