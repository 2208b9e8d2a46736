"""dvppres: robust virtual-inertia/damping sizing and reserve planning for
dynamic virtual power plants under sequential, uncertain disturbances."""

__version__ = "0.1.0"

from .model import (DisturbanceForecast, DisturbanceScenario, GridParameters,
                    IbrSpec, SecurityLimits, validate_inputs)
from .response import (DerivedSecondOrder, derive_second_order,
                       sequential_response, step_response,
                       step_response_derivative)
from .metrics import MetricsResult, check_limits, evaluate_metrics, peak_time
from .worstcase import WorstEnvelope, enumerate_scenarios, find_worst
from .region import RegionGrid, is_feasible, scan_region
from .selection import select_damping, select_inertia, select_parameters
from .injection import alpha_beta, reserves, sequential_injection, step_injection
from .allocation import AllocationProblem, build_lp, solve_allocation
from .oracle import simulate, simulate_single_step

__all__ = [
    "GridParameters", "SecurityLimits", "DisturbanceForecast",
    "DisturbanceScenario", "IbrSpec", "validate_inputs",
    "DerivedSecondOrder", "derive_second_order", "step_response",
    "step_response_derivative", "sequential_response",
    "MetricsResult", "peak_time", "evaluate_metrics", "check_limits",
    "WorstEnvelope", "enumerate_scenarios", "find_worst",
    "RegionGrid", "is_feasible", "scan_region",
    "select_damping", "select_inertia", "select_parameters",
    "step_injection", "alpha_beta", "sequential_injection", "reserves",
    "AllocationProblem", "build_lp", "solve_allocation",
    "simulate", "simulate_single_step",
]
