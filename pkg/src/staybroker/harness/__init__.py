"""Scenario-driven deterministic simulation, trace checking, and the CLI."""

from .scenario import Scenario, load_scenario, random_scenario, scenario_from_dict
from .runner import RunResult, SimRun, run_scenario, trace_digest
from .checker import check_lines, check_trace_text

__all__ = [
    "RunResult",
    "Scenario",
    "SimRun",
    "check_lines",
    "check_trace_text",
    "load_scenario",
    "random_scenario",
    "run_scenario",
    "scenario_from_dict",
    "trace_digest",
]
