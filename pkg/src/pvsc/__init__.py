"""Least-cost sizing and operation of residential rooftop PV with batteries under net billing."""

from .model import (
    BatteryTechnology,
    BuildingScenario,
    Capacities,
    EconomicParams,
    OptimizationResult,
    RemunerationPolicy,
    TechnologyCatalog,
)
from .sizing import compare_policies, optimize_installation

__version__ = "0.1.0"

__all__ = [
    "BatteryTechnology",
    "BuildingScenario",
    "Capacities",
    "EconomicParams",
    "OptimizationResult",
    "RemunerationPolicy",
    "TechnologyCatalog",
    "compare_policies",
    "optimize_installation",
    "__version__",
]
