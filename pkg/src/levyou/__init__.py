"""Ornstein-Uhlenbeck processes driven by Lévy noise: exact laws, simulation,
generators and invariance diagnostics."""
from .levy_core import (AtomicMeasure, CompoundPoissonMeasure, LevyMeasure, LevyTriplet,
                        LogTailMeasure, StableMeasure, TemperedStableMeasure, ZeroMeasure,
                        cf, char_exponent, convert_truncation)
from .ou_models import (LogMomentViolation, OUModel, invariant_cf, invariant_triplet,
                        transition_cf, transition_triplet)
from .sampler import SimScheme, simulate_groundstate, simulate_nonlinear, simulate_ou

__all__ = [
    "AtomicMeasure", "CompoundPoissonMeasure", "LevyMeasure", "LevyTriplet", "LogTailMeasure",
    "StableMeasure", "TemperedStableMeasure", "ZeroMeasure", "cf", "char_exponent",
    "convert_truncation", "LogMomentViolation", "OUModel", "invariant_cf", "invariant_triplet",
    "transition_cf", "transition_triplet", "SimScheme", "simulate_groundstate",
    "simulate_nonlinear", "simulate_ou",
]
