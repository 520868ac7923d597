"""Experiment harness: generate instance variations, run the solvers, tabulate.

Output directory layout (all CSVs: header row, comma separator, LF endings)::

    runs.csv          one row per (source, algorithm, variation)
    summary.csv       one row per (source, algorithm)
    comparison.csv    Mann-Whitney U test of cost per source and algorithm pair
    timing.csv        solver wall time per run (seconds)
    meta.json         schema version, base seed, timing note
    instances/        every solved instance file
    solutions/        every solution record

``runs.csv``, ``summary.csv`` and ``comparison.csv`` hold deterministic
values only, so two runs with the same base seed produce identical bytes.
Wall times differ from run to run and live in ``timing.csv``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field, fields, replace
from itertools import combinations
from pathlib import Path
from typing import Callable, Sequence

from .baseline import ALGORITHM as ANCAR
from .baseline import BaselineConfig, solve_ancar
from .datagen import GenSpec, generate_instance
from .io import parse_instance, write_instance, write_solution
from .model import (
    MAX_ORACLE_ROBOTS,
    MAX_ORACLE_TASKS,
    REL_TOL,
    Family,
    Instance,
    Solution,
    brute_force_optimum,
    validate_solution,
)
from .rng import derive_seed
from .scheduler import ALGORITHM as DONE
from .scheduler import solve
from .stats import mann_whitney_u

SCHEMA_VERSION = 1
ALGORITHMS = (DONE, ANCAR)
TIMING_NOTE = "wall_time is solver time only, measured with a monotonic clock; parsing and serialization are excluded"


class BenchError(RuntimeError):
    """A run failed validation; ``seed`` reproduces it."""

    def __init__(self, message: str, seed: int) -> None:
        self.seed = seed
        super().__init__(f"{message} (seed {seed})")


@dataclass(frozen=True)
class Source:
    """One experiment input: a fixed instance, or a base to derive a family from."""

    label: str
    instance: Instance
    family: Family | None = None
    spec: GenSpec | None = None

    def variation(self, seed: int) -> Instance:
        if self.spec is None:
            return self.instance
        return generate_instance(replace(self.spec, seed=seed))


@dataclass
class ExperimentConfig:
    """``instances`` holds paths, Instances or GenSpecs.

    With ``families`` set, every path or Instance is treated as a base CVRP
    instance and one source per family is generated; otherwise it is solved
    as is. GenSpecs always generate. Variation ``k`` of a generated source
    uses seed ``derive_seed(base_seed, k)``.
    """

    instances: Sequence[str | Path | Instance | GenSpec]
    algorithms: Sequence[str] = ALGORITHMS
    variations: int = 30
    base_seed: int = 0
    output: str | Path | None = None
    families: Sequence[Family] | None = None
    improver: str = "2opt"
    oracle: bool = True

    def __post_init__(self) -> None:
        if self.variations < 1:
            raise ValueError("variations must be >= 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"algorithms must be a non-empty subset of {ALGORITHMS}")


@dataclass(frozen=True)
class RunRow:
    source: str
    instance: str
    family: str
    variation: int
    seed: int
    algorithm: str
    tasks: int
    robots: int
    stations: int
    total_cost: float
    used_robots: int
    depot_visits: int
    optimum: float | None
    solution_file: str
    wall_time: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class SummaryRow:
    source: str
    instance: str
    family: str
    algorithm: str
    variations: int
    mean_cost: float
    min_cost: float
    max_cost: float
    mean_used_robots: float
    mean_depot_visits: float
    mean_optimum: float | None
    base_seed: int
    mean_wall_time: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class Comparison:
    source: str
    algorithm_a: str
    algorithm_b: str
    u: float
    p_value: float


@dataclass
class ExperimentResult:
    runs: list[RunRow]
    summary: list[SummaryRow]
    comparisons: list[Comparison]

    def runs_csv(self) -> str:
        return _csv(RunRow, self.runs, exclude={"wall_time"})

    def summary_csv(self) -> str:
        return _csv(SummaryRow, self.summary, exclude={"mean_wall_time"})

    def comparison_csv(self) -> str:
        return _csv(Comparison, self.comparisons)

    def timing_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["schema_version", "source", "algorithm", "variation", "seed", "wall_time"])
        for r in self.runs:
            w.writerow([SCHEMA_VERSION, r.source, r.algorithm, r.variation, r.seed, _num(r.wall_time)])
        return buf.getvalue()


def _num(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(kind, rows, exclude: set[str] = frozenset()) -> str:
    names = [f.name for f in fields(kind) if f.name not in exclude]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema_version", *names])
    for row in rows:
        w.writerow([SCHEMA_VERSION, *(_num(getattr(row, n)) for n in names)])
    return buf.getvalue()


def _load(item) -> Instance:
    if isinstance(item, Instance):
        return item
    return parse_instance(Path(item).read_bytes())


def sources(cfg: ExperimentConfig) -> list[Source]:
    out: list[Source] = []
    for item in cfg.instances:
        if isinstance(item, GenSpec):
            fam = Family(item.family)
            out.append(Source(f"{item.base.name}:{fam.value}", item.base, fam, item))
            continue
        inst = _load(item)
        if cfg.families:
            for fam in cfg.families:
                fam = Family(fam)
                out.append(Source(f"{inst.name}:{fam.value}", inst, fam, GenSpec(inst, fam, 0)))
        else:
            out.append(Source(inst.name, inst))
    seen: dict[str, int] = {}
    unique = []
    for src in out:
        n = seen.get(src.label, 0)
        seen[src.label] = n + 1
        unique.append(src if n == 0 else replace(src, label=f"{src.label}#{n + 1}"))
    return unique


def _solver(algorithm: str, cfg: ExperimentConfig) -> Callable[[Instance], Solution]:
    if algorithm == DONE:
        return solve
    return lambda inst: solve_ancar(inst, BaselineConfig(improver=cfg.improver))


def _file_stem(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


def _oracle_cost(inst: Instance, seed: int) -> float | None:
    if len(inst.tasks) > MAX_ORACLE_TASKS or len(inst.robots) > MAX_ORACLE_ROBOTS:
        return None
    best = brute_force_optimum(inst)
    report = validate_solution(inst, best)
    if not report.ok:
        raise BenchError("optimum failed validation: " + "; ".join(report.violations), seed)
    return best.total_cost


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every (source, variation, algorithm) and write results if ``cfg.output`` is set.

    Every solution is re-checked with validate_solution before it counts;
    the first failure raises BenchError carrying the run's seed.
    """
    out = Path(cfg.output) if cfg.output is not None else None
    if out is not None:
        (out / "instances").mkdir(parents=True, exist_ok=True)
        (out / "solutions").mkdir(parents=True, exist_ok=True)
    runs: list[RunRow] = []
    for src in sources(cfg):
        stem = _file_stem(src.label)
        for k in range(cfg.variations):
            seed = derive_seed(cfg.base_seed, k)
            inst = src.variation(seed)
            inst_file = f"instances/{stem}-v{k:03d}.vrp"
            if out is not None:
                (out / inst_file).write_text(write_instance(inst), encoding="utf-8", newline="\n")
            optimum = _oracle_cost(inst, seed) if cfg.oracle else None
            for algorithm in cfg.algorithms:
                sol = replace(_solver(algorithm, cfg)(inst), seed=seed)
                report = validate_solution(inst, sol)
                if not report.ok:
                    raise BenchError(
                        f"{algorithm} on {src.label} variation {k}: " + "; ".join(report.violations), seed
                    )
                if optimum is not None and sol.total_cost < optimum and not math.isclose(
                    sol.total_cost, optimum, rel_tol=REL_TOL
                ):
                    raise BenchError(f"{algorithm} on {src.label} beat the exact optimum", seed)
                sol_file = f"solutions/{stem}-v{k:03d}-{algorithm}.json"
                if out is not None:
                    (out / sol_file).write_text(write_solution(sol), encoding="utf-8", newline="\n")
                runs.append(
                    RunRow(
                        source=src.label,
                        instance=inst.name,
                        family=inst.family.value,
                        variation=k,
                        seed=seed,
                        algorithm=algorithm,
                        tasks=len(inst.tasks),
                        robots=len(inst.robots),
                        stations=len(inst.stations),
                        total_cost=sol.total_cost,
                        used_robots=sol.used_robots,
                        depot_visits=sol.depot_visits,
                        optimum=optimum,
                        solution_file=sol_file,
                        wall_time=sol.wall_time,
                    )
                )
    runs.sort(key=lambda r: (r.source, r.algorithm, r.variation))
    result = ExperimentResult(runs, summarize(runs, cfg.base_seed), compare(runs))
    if out is not None:
        _write(out, result, cfg)
    return result


def summarize(runs: Sequence[RunRow], base_seed: int) -> list[SummaryRow]:
    groups: dict[tuple[str, str], list[RunRow]] = {}
    for r in runs:
        groups.setdefault((r.source, r.algorithm), []).append(r)
    rows = []
    for (source, algorithm), group in sorted(groups.items()):
        costs = [r.total_cost for r in group]
        optima = [r.optimum for r in group if r.optimum is not None]
        rows.append(
            SummaryRow(
                source=source,
                instance=group[0].instance,
                family=group[0].family,
                algorithm=algorithm,
                variations=len(group),
                mean_cost=statistics.fmean(costs),
                min_cost=min(costs),
                max_cost=max(costs),
                mean_used_robots=statistics.fmean(r.used_robots for r in group),
                mean_depot_visits=statistics.fmean(r.depot_visits for r in group),
                mean_optimum=statistics.fmean(optima) if len(optima) == len(group) else None,
                base_seed=base_seed,
                mean_wall_time=statistics.fmean(r.wall_time for r in group),
            )
        )
    return rows


def compare(runs: Sequence[RunRow]) -> list[Comparison]:
    costs: dict[str, dict[str, list[float]]] = {}
    for r in runs:
        costs.setdefault(r.source, {}).setdefault(r.algorithm, []).append(r.total_cost)
    out = []
    for source in sorted(costs):
        for a, b in combinations(sorted(costs[source]), 2):
            res = mann_whitney_u(costs[source][a], costs[source][b])
            out.append(Comparison(source, a, b, res.u, res.p_value))
    return out


def _write(out: Path, result: ExperimentResult, cfg: ExperimentConfig) -> None:
    files = {
        "runs.csv": result.runs_csv(),
        "summary.csv": result.summary_csv(),
        "comparison.csv": result.comparison_csv(),
        "timing.csv": result.timing_csv(),
    }
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8", newline="\n")
    meta = {
        "schema_version": SCHEMA_VERSION,
        "base_seed": cfg.base_seed,
        "variations": cfg.variations,
        "algorithms": list(cfg.algorithms),
        "seed_rule": "variation k uses derive_seed(base_seed, k)",
        "timing": TIMING_NOTE,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8", newline="\n")
