"""Numerical laboratory for mean-field annihilation and pair-contact kinetics."""
from .grid import DomainSpec, ScalarField
from .kinetics import ModelKind, ModelSpec
from .stepper import (
    ICKind,
    InitialCondition,
    RunSchedule,
    Scheme,
    StepperConfig,
    TimeSeries,
    make_initial_condition,
    run,
)

__all__ = [
    "DomainSpec",
    "ScalarField",
    "ModelKind",
    "ModelSpec",
    "ICKind",
    "InitialCondition",
    "RunSchedule",
    "Scheme",
    "StepperConfig",
    "TimeSeries",
    "make_initial_condition",
    "run",
]
