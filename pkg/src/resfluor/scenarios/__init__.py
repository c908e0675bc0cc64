"""Configuration, data files, pulse programs and scenario pipelines."""

from .config import SCENARIOS, ScenarioConfig, load_config
from .dataio import Table, read_table, write_table
from .pulses import PulseProgram, PulseResult, Segment, run_pulse_program
from .runner import ScenarioOutput, compare_analytic, read_manifest, run_scenario

__all__ = [
    "SCENARIOS",
    "ScenarioConfig",
    "load_config",
    "Table",
    "read_table",
    "write_table",
    "PulseProgram",
    "PulseResult",
    "Segment",
    "run_pulse_program",
    "ScenarioOutput",
    "compare_analytic",
    "read_manifest",
    "run_scenario",
]
