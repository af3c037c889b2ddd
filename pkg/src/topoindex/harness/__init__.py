"""Sweeps, convergence studies, calibration and the command-line interface."""

from .calibrate import calibrate_sign, calibration_id, load_calibration
from .config import SweepConfig
from .sweep import convergence_study, run_sweep

__all__ = ["SweepConfig", "calibrate_sign", "calibration_id", "convergence_study",
           "load_calibration", "run_sweep"]
