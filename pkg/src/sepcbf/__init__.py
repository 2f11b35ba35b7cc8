"""Collision avoidance for rigid p-norm ellipsoids with separating-hyperplane barrier functions.

Each pair of bodies shares a hyperplane ``{y : n^T y = gamma}`` whose normal and
offset are extra decision variables of the safety filter. Keeping one body on
each side of the plane certifies that the pair does not collide.
"""

from .config import AgentConfig, ConfigError, ScenarioConfig, bundled_config, load_config, loads_config
from .derivatives import hdot, nonholonomic_coefficients, pair_coefficients, unicycle_input_map
from .geometry import DomainError, Pose, Superellipsoid, dual_order
from .opt import ClassKappa, SeparationFailure, max_margin_hyperplane, safety_filter, solve_qp
from .separation import Hyperplane, Side, barrier_pair, is_separating, side_barrier
from .sim import BarrierViolation, QpFailure, TrajectoryLog, run_scenario, run_world, step
from .world import AgentState, ConfigurationError, Dynamics, World

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "AgentState",
    "BarrierViolation",
    "ClassKappa",
    "ConfigError",
    "ConfigurationError",
    "DomainError",
    "Dynamics",
    "Hyperplane",
    "Pose",
    "QpFailure",
    "ScenarioConfig",
    "SeparationFailure",
    "Side",
    "Superellipsoid",
    "TrajectoryLog",
    "World",
    "barrier_pair",
    "bundled_config",
    "dual_order",
    "hdot",
    "is_separating",
    "load_config",
    "loads_config",
    "max_margin_hyperplane",
    "nonholonomic_coefficients",
    "pair_coefficients",
    "run_scenario",
    "run_world",
    "safety_filter",
    "side_barrier",
    "solve_qp",
    "step",
    "unicycle_input_map",
]
