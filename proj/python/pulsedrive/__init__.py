"""Pulsating dc-link drive simulator."""

from pathlib import Path

from ._core import (
    IoError,
    ParseError,
    SimulationError,
    ValidationError,
    compare,
    envelope,
    frequency_response,
    normalize_scenario,
    ripple_analytic,
)
from ._core import run as _run

__all__ = [
    "IoError",
    "ParseError",
    "SimulationError",
    "ValidationError",
    "compare",
    "envelope",
    "frequency_response",
    "normalize_scenario",
    "ripple_analytic",
    "run",
    "run_file",
]


def run(scenario, overrides=(), trace=True):
    """Simulate a scenario document given as text."""
    return _run(scenario, list(overrides), trace)


def run_file(path, overrides=(), trace=True):
    """Simulate the scenario stored at ``path``."""
    return run(Path(path).read_text(), overrides, trace)
