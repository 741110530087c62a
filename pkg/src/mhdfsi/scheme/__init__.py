"""Penalized hybrid time stepper."""
from .coupled import StepReport, step_coupled
from .induction import InductionReport, SolverError, induction_step, lorentz_force
from .mechanics import CFLError, MechanicalReport, mechanical_substep, pressure, variable_viscosity
from .params import InvalidParameters, MagneticState, MechanicalState, SchemeParams

__all__ = [
    "CFLError",
    "InductionReport",
    "InvalidParameters",
    "MagneticState",
    "MechanicalReport",
    "MechanicalState",
    "SchemeParams",
    "SolverError",
    "StepReport",
    "induction_step",
    "lorentz_force",
    "mechanical_substep",
    "pressure",
    "step_coupled",
    "variable_viscosity",
]
