"""Scenario simulation, log ingestion and the command line interface."""

from .harness import RunConfig, RunReport, monte_carlo, run, run_data, run_samples
from .trajectory import ImuSample, SensorSpec, SimData, TrajectorySpec, generate, generate_data

__all__ = [
    "ImuSample",
    "RunConfig",
    "RunReport",
    "SensorSpec",
    "SimData",
    "TrajectorySpec",
    "generate",
    "generate_data",
    "monte_carlo",
    "run",
    "run_data",
    "run_samples",
]
