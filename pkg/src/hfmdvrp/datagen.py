"""Instance generation for the four warehouse families.

A single-depot CVRP instance (the *base*) is adapted into XMT, RMT, WMT or
SMT form: task positions are kept, the fleet is either cloned from the base
capacity or sampled from a robot catalog, and multi-station families get
randomly placed delivery stations and robot start positions. All randomness
flows from one 64-bit seed through ``rng.Xoshiro256``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .model import (
    DeliveryStation,
    Family,
    Instance,
    PickingTask,
    Point,
    Robot,
    validate_instance,
)
from .rng import Xoshiro256, derive_seed

# stream indices for derive_seed
FLEET_STREAM = 1
PLACEMENT_STREAM = 2


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class RobotCatalogEntry:
    model_name: str
    capacity: int
    speed: float

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError(f"{self.model_name}: capacity must be >= 1")
        if not self.speed > 0:
            raise ValueError(f"{self.model_name}: speed must be > 0")


def parse_catalog(text: str) -> list[RobotCatalogEntry]:
    rows = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(io.StringIO("\n".join(rows)))
    entries = [
        RobotCatalogEntry(r["model_name"].strip(), int(r["capacity_kg"]), float(r["speed_mps"]))
        for r in reader
    ]
    if not entries:
        raise ValueError("empty robot catalog")
    return entries


def load_catalog(path: str | Path | None = None) -> list[RobotCatalogEntry]:
    """Read a catalog CSV; without a path, the packaged default catalog."""
    if path is None:
        text = resources.files("hfmdvrp").joinpath("data/robot_catalog.csv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return parse_catalog(text)


@dataclass(frozen=True)
class FleetSampling:
    """Capacity-stratified normal sampling parameters.

    A capacity level is drawn from N(mean, sd), redrawn until it falls in
    [0, max catalog capacity], and rounded up to the next catalog capacity
    (the stratum threshold). The robot is then drawn uniformly among catalog
    entries whose capacity does not exceed the threshold. ``None`` picks the
    defaults: mean at the smallest catalog capacity, sd equal to the
    catalog's capacity range.
    """

    mean: float | None = None
    sd: float | None = None


@dataclass(frozen=True)
class GenSpec:
    base: Instance
    family: Family
    seed: int
    catalog: tuple[RobotCatalogEntry, ...] = field(default_factory=lambda: tuple(load_catalog()))
    sampling: FleetSampling = FleetSampling()
    n_robots: int | None = None


def delivery_count(m: int) -> int:
    """Number of delivery stations for ``m`` picking tasks: floor(ln m - 1), at least 1."""
    if m < 1:
        raise ValueError("need at least one picking task")
    return max(1, math.floor(math.log(m) - 1))


def adapt_demand(mu_gamma: float, d: int, capacity: int) -> int:
    """Scale a base demand to a fleet with mean capacity ``mu_gamma`` (half-up rounding, >= 1)."""
    if capacity < 1 or d < 1:
        raise ValueError("demand and capacity must be positive")
    return max(1, math.floor(mu_gamma * d / capacity + 0.5))


def _ordered(catalog: Sequence[RobotCatalogEntry]) -> list[RobotCatalogEntry]:
    return sorted(catalog, key=lambda e: (e.capacity, e.speed, e.model_name))


def _robot(rid: int, entry: RobotCatalogEntry, start: Point = Point(0, 0)) -> Robot:
    return Robot(rid, start, entry.capacity, entry.speed, entry.model_name)


def sample_fleet(
    catalog: Sequence[RobotCatalogEntry],
    n: int,
    seed: int,
    *,
    sampling: FleetSampling = FleetSampling(),
    min_capacity: int = 0,
) -> list[Robot]:
    """Draw ``n`` robots (ids 1..n, start at the origin) from the catalog.

    If no drawn robot reaches ``min_capacity``, the last one is replaced by a
    draw from the top capacity stratum.
    """
    if not catalog:
        raise ValueError("empty robot catalog")
    if n < 1:
        raise ValueError("need at least one robot")
    entries = _ordered(catalog)
    levels = sorted({e.capacity for e in entries})
    lo, hi = levels[0], levels[-1]
    mean = lo if sampling.mean is None else sampling.mean
    sd = (hi - lo) if sampling.sd is None else sampling.sd
    rng = Xoshiro256(seed)

    picked: list[RobotCatalogEntry] = []
    for _ in range(n):
        if len(levels) == 1:
            picked.append(rng.choice(entries))
            continue
        while True:
            draw = rng.normal(mean, sd)
            if 0.0 <= draw <= hi:
                break
        threshold = next(c for c in levels if c >= draw)
        stratum = [e for e in entries if e.capacity <= threshold]
        picked.append(rng.choice(stratum))

    if max(e.capacity for e in picked) < min_capacity:
        top = [e for e in entries if e.capacity == hi]
        picked[-1] = rng.choice(top)
        if hi < min_capacity:
            raise GenerationError(
                f"catalog max capacity {hi} is below the required {min_capacity}"
            )
    return [_robot(i + 1, e) for i, e in enumerate(picked)]


def instance_name(family: Family, task_count: int, robots: int, stations: int) -> str:
    return f"{Family(family).value}-t{task_count}-r{robots}-d{stations}"


def _bounding_box(points: Sequence[Point]) -> tuple[int, int, int, int]:
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    return min(xs), max(xs), min(ys), max(ys)


def _place(rng: Xoshiro256, box, occupied: set[Point], count: int) -> list[Point]:
    """``count`` distinct uniformly random free grid points inside ``box``."""
    x0, x1, y0, y1 = box
    area = (x1 - x0 + 1) * (y1 - y0 + 1)
    free = area - sum(1 for p in occupied if x0 <= p.x <= x1 and y0 <= p.y <= y1)
    if free < count:
        raise GenerationError(
            f"bounding box has {free} free points, {count} needed"
        )
    taken = set(occupied)
    out: list[Point] = []
    if free <= 4 * count:
        cells = [
            Point(x, y)
            for x in range(x0, x1 + 1)
            for y in range(y0, y1 + 1)
            if Point(x, y) not in taken
        ]
        for _ in range(count):
            out.append(cells.pop(rng.below(len(cells))))
        return out
    while len(out) < count:
        p = Point(rng.integers(x0, x1), rng.integers(y0, y1))
        if p not in taken:
            taken.add(p)
            out.append(p)
    return out


def _check_base(base: Instance) -> None:
    if len(base.stations) != 1:
        raise GenerationError("base must have exactly one depot")
    if not base.robots:
        raise GenerationError("base has no robots")
    if len({r.max_capacity for r in base.robots}) != 1:
        raise GenerationError("base fleet must share one capacity")
    if not base.tasks:
        raise GenerationError("base has no picking tasks")
    report = validate_instance(base)
    if not report.ok:
        raise GenerationError("invalid base: " + "; ".join(report.violations))


def generate_instance(spec: GenSpec) -> Instance:
    """Adapt ``spec.base`` into an instance of ``spec.family``.

    The ``t`` count in the generated name is the base's node count (tasks
    plus depot), which is how the base's own ``X-n<count>`` name counts.
    """
    base = spec.base
    _check_base(base)
    family = Family(spec.family)
    depot = base.stations[0].pos
    capacity = base.robots[0].max_capacity
    n = spec.n_robots or len(base.robots)
    m = len(base.tasks)

    if family.homogeneous:
        fleet = [Robot(i + 1, Point(0, 0), capacity, 1.0) for i in range(n)]
        demands = [t.demand for t in base.tasks]
    else:
        fleet = sample_fleet(spec.catalog, n, derive_seed(spec.seed, FLEET_STREAM), sampling=spec.sampling)
        demands = _adapted(base, fleet, capacity)
        if max(demands) > max(r.max_capacity for r in fleet):
            fleet = _lift_fleet(spec, n)
            demands = _adapted(base, fleet, capacity)
            if max(demands) > max(r.max_capacity for r in fleet):
                raise GenerationError("no sampled fleet can carry the heaviest task")

    tasks = tuple(PickingTask(t.id, t.pos, d) for t, d in zip(base.tasks, demands))

    if family.single_station:
        stations = (DeliveryStation(1, depot),)
        starts = [depot] * n
    else:
        p = delivery_count(m)
        rng = Xoshiro256(derive_seed(spec.seed, PLACEMENT_STREAM))
        box = _bounding_box([t.pos for t in base.tasks] + [depot])
        occupied = {t.pos for t in base.tasks}
        spots = _place(rng, box, occupied, p + n)
        stations = tuple(DeliveryStation(i + 1, pt) for i, pt in enumerate(spots[:p]))
        starts = spots[p:]

    robots = tuple(
        Robot(r.id, start, r.max_capacity, r.speed, r.model_name) for r, start in zip(fleet, starts)
    )
    name = instance_name(family, m + len(base.stations), n, len(stations))
    inst = Instance(name, tasks, stations, robots, family)
    report = validate_instance(inst)
    if not report.ok:
        raise GenerationError("generated instance invalid: " + "; ".join(report.violations))
    return inst


def _adapted(base: Instance, fleet: Sequence[Robot], capacity: int) -> list[int]:
    mu = sum(r.max_capacity for r in fleet) / len(fleet)
    return [adapt_demand(mu, t.demand, capacity) for t in base.tasks]


def _lift_fleet(spec: GenSpec, n: int) -> list[Robot]:
    top = max(e.capacity for e in spec.catalog)
    return sample_fleet(
        spec.catalog, n, derive_seed(spec.seed, FLEET_STREAM), sampling=spec.sampling, min_capacity=top
    )


def random_cvrp_base(
    n_customers: int,
    n_vehicles: int,
    seed: int,
    *,
    grid: int = 1000,
    max_demand: int = 100,
) -> Instance:
    """Synthetic single-depot CVRP instance in the style of the X benchmark set.

    Customers and depot sit at distinct random points of a ``grid`` x ``grid``
    square, demands are uniform in [1, max_demand], and the vehicle capacity
    is the smallest that lets ``n_vehicles`` routes cover the total demand.
    """
    if n_customers < 1 or n_vehicles < 1:
        raise ValueError("need at least one customer and one vehicle")
    rng = Xoshiro256(seed)
    spots = _place(rng, (0, grid, 0, grid), set(), n_customers + 1)
    depot, points = spots[0], spots[1:]
    demands = [rng.integers(1, max_demand) for _ in points]
    capacity = max(max(demands), math.ceil(sum(demands) / n_vehicles))
    tasks = tuple(PickingTask(i + 1, p, d) for i, (p, d) in enumerate(zip(points, demands)))
    robots = tuple(Robot(i + 1, depot, capacity, 1.0) for i in range(n_vehicles))
    return Instance(
        f"X-n{n_customers + 1}-k{n_vehicles}",
        tasks,
        (DeliveryStation(1, depot),),
        robots,
        Family.XMT,
    )
