"""Scenario harness: config, headless runner, metrics, live server, CLI."""

from .config import ConfigError, Scenario, load_scenario, load_scenario_text
from .metrics import MetricsReport, compute_metrics
from .runner import RunResult, run_scenario
from .scenarios import BUILTIN_SCENARIOS, builtin_scenarios

__all__ = [
    "ConfigError", "Scenario", "load_scenario", "load_scenario_text",
    "MetricsReport", "compute_metrics", "RunResult", "run_scenario",
    "BUILTIN_SCENARIOS", "builtin_scenarios",
]
