"""Capacity-aware task allocation and routing for heterogeneous warehouse robot fleets."""

from .baseline import BaselineConfig, solve_ancar
from .bench import ExperimentConfig, SummaryRow, run_experiment
from .cost import RobotState, edge_cost, is_feasible
from .datagen import GenSpec, RobotCatalogEntry, delivery_count, generate_instance, load_catalog
from .domain import InfeasibleTaskError, compute_domain
from .io import ParseError, parse_instance, parse_solution, write_instance, write_solution
from .model import (
    DeliveryStation,
    Family,
    Instance,
    PickingTask,
    Point,
    Robot,
    RouteStep,
    Solution,
    brute_force_optimum,
    validate_instance,
    validate_solution,
)
from .scheduler import SchedulerConfig, solve
from .stats import mann_whitney_u

__all__ = [
    "BaselineConfig",
    "DeliveryStation",
    "ExperimentConfig",
    "Family",
    "GenSpec",
    "InfeasibleTaskError",
    "Instance",
    "ParseError",
    "PickingTask",
    "Point",
    "Robot",
    "RobotCatalogEntry",
    "RobotState",
    "RouteStep",
    "SchedulerConfig",
    "Solution",
    "SummaryRow",
    "brute_force_optimum",
    "compute_domain",
    "delivery_count",
    "edge_cost",
    "generate_instance",
    "is_feasible",
    "load_catalog",
    "mann_whitney_u",
    "parse_instance",
    "parse_solution",
    "run_experiment",
    "solve",
    "solve_ancar",
    "validate_instance",
    "validate_solution",
    "write_instance",
    "write_solution",
]
