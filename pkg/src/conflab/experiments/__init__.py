"""Simulation drivers for the static channel, the temporal gate and time of flight."""
from .runs import (EQUIVALENCE_TOLERANCE, STATIC_2D_TOLERANCES, STATIC_TOLERANCES, TEMPORAL_TOLERANCES,
                   TOF_TOLERANCES, AdiabaticityError, ConfigError, DriverError, Measurement,
                   NonAdiabaticEntranceError, PerturbativeRegimeError, StaticRun, TemporalRun)
from .static import guided_contrast, resolve_static, run_static_2d, run_static_effective, run_tof
from .sweep import SweepRow, SweepTable, check_convergence, driver_for, eq5_view, sweep, with_parameter
from .temporal import dilation_phase, resolve_temporal, run_equivalence, run_temporal

__all__ = [
    "StaticRun", "TemporalRun", "Measurement", "ConfigError", "DriverError", "PerturbativeRegimeError",
    "NonAdiabaticEntranceError", "AdiabaticityError", "STATIC_TOLERANCES", "STATIC_2D_TOLERANCES",
    "TEMPORAL_TOLERANCES", "TOF_TOLERANCES", "EQUIVALENCE_TOLERANCE", "run_static_effective",
    "run_static_2d", "run_tof", "run_temporal", "run_equivalence", "resolve_static", "resolve_temporal",
    "sweep", "SweepTable", "SweepRow", "check_convergence", "driver_for", "with_parameter", "eq5_view",
    "guided_contrast", "dilation_phase",
]
