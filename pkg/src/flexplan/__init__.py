"""Capacity-expansion and dispatch LPs for multi-carrier energy systems."""

from .analysis import (
    aggregate_flows,
    attribute_flexibility,
    inflexible_demand,
    residual_curve,
    supply_decomposition,
)
from .builder import build_lp
from .model import (
    Carrier,
    EmbeddedStorageSpec,
    EnergyModel,
    ExchangeCorridor,
    ImportOption,
    ModelError,
    StorageTechnology,
    Technology,
    annuitize,
    build_time_hierarchy,
    validate_model,
)
from .scenario import load_scenario, read_solution, write_scenario, write_solution
from .solver import Solution, SolverOptions, solve, verify_solution

__version__ = "0.1.0"
