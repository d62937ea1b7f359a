"""Simulator for information-sharing parking guidance with probe-car scanning."""

__version__ = "0.1.0"

from .belief import BeliefState, SensorModel, Thresholds  # noqa: E402
from .config import ArrivalProfile, ConfigError, ExperimentConfig, PolicyId  # noqa: E402
from .engine import run_day  # noqa: E402
from .harness import run_replication, sweep, time_avg_error  # noqa: E402
from .lot import LotGraph, Route, RouteMode, build_grid_lot, load_lot  # noqa: E402

__all__ = [
    "ArrivalProfile", "BeliefState", "ConfigError", "ExperimentConfig", "LotGraph",
    "PolicyId", "Route", "RouteMode", "SensorModel", "Thresholds", "build_grid_lot",
    "load_lot", "run_day", "run_replication", "sweep", "time_avg_error",
]
