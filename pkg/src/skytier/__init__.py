"""Tiered aerial base-station placement: coverage zones, survivability, mobility and recursive placement."""
from .baselines import pso_optimize, swarm_run, vpso_optimize
from .estimators import DronePlacer
from .harness import compare, run_scenario, sweep
from .nbrl import NbrlConfig, nbrl_iteration, nbrl_run
from .scenario import (
    REFERENCE_CONFIG,
    ConfigError,
    ScenarioConfig,
    allocation_accuracy,
    build_scenario,
    friis_link_ok,
    users_handled_fraction,
)

__version__ = "0.1.0"

__all__ = [
    "REFERENCE_CONFIG",
    "ConfigError",
    "DronePlacer",
    "NbrlConfig",
    "ScenarioConfig",
    "allocation_accuracy",
    "build_scenario",
    "compare",
    "friis_link_ok",
    "nbrl_iteration",
    "nbrl_run",
    "pso_optimize",
    "run_scenario",
    "swarm_run",
    "sweep",
    "users_handled_fraction",
    "vpso_optimize",
]
