"""Simulation of BN-S dynamics driven by one or two Levy subordinators."""

from .io import MAGIC, read_ensemble_binary, write_ensemble_binary, write_ensemble_csv
from .params import MODELS, BnsParams
from .schedule import TRADING_DAY, ThetaSchedule, schedule_from_predictions
from .simulate import (
    CapacityError,
    SimEnsemble,
    SimPath,
    draw_inputs,
    drivers,
    expected_sigma_sq,
    integrate,
    simulate_ensemble,
    simulate_path,
)
from .subordinators import CPE, GAMMA, SubordinatorSpec, cpe, gamma, sample_increment, sample_increments

__all__ = [
    "MAGIC", "MODELS", "TRADING_DAY", "BnsParams", "CapacityError", "SimEnsemble", "SimPath", "SubordinatorSpec",
    "ThetaSchedule", "CPE", "GAMMA", "cpe", "gamma", "draw_inputs", "drivers", "expected_sigma_sq", "integrate",
    "read_ensemble_binary", "sample_increment", "sample_increments", "schedule_from_predictions",
    "simulate_ensemble", "simulate_path", "write_ensemble_binary", "write_ensemble_csv",
]
