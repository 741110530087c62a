"""Hybrid coupled step: mechanical substeps with lagged field, body update, induction step."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from ..fields import ScalarField
from ..geometry import advance_flow_map, body_integrals, check_configuration, extract_rigid_velocity
from .induction import InductionReport, induction_step, lorentz_force
from .mechanics import MechanicalReport, coefficients, mechanical_substep
from .params import MagneticState, MechanicalState, SchemeParams


@dataclass(frozen=True)
class StepReport:
    """Energy bookkeeping of one outer step.

    Attributes:
        mechanical: Substep terms integrated over the outer step.
        induction: Induction terms (rates).
        coupling: Net rate of magnetic-mechanical exchange that the time lag
            leaves unbalanced: Lorentz work on the substeps plus the induction
            transport term.  Zero when either the field or the velocity vanishes.
    """

    mechanical: MechanicalReport
    induction: InductionReport
    coupling: float


def step_coupled(
    mech: MechanicalState,
    mag: MagneticState,
    params: SchemeParams,
    gravity=(0.0, 0.0),
    J: Optional[ScalarField] = None,
) -> tuple[MechanicalState, MagneticState, StepReport]:
    """Advance both subsystems over one outer step ``params.dt``."""
    dt = params.dt
    rep = MechanicalReport()
    if not params.pin_velocity:
        force = lorentz_force(mag, params.mu)
        if force.max_abs() == 0.0:
            force = None
        coef = coefficients(mech, params)
        for _ in range(params.inner_substeps):
            mech, r = mechanical_substep(mech, force, params, params.dt_inner, gravity, coef)
            rep = rep + r
        if mech.bodies:
            moved = []
            for b in mech.bodies:
                X = body_integrals(mech.rho, b).X
                V, w = extract_rigid_velocity(mech.rho, mech.u, b)
                moved.append(advance_flow_map(b, V, w, dt, center=X))
            check_configuration(moved, mech.rho.grid)
            mech = replace(mech, bodies=tuple(moved))
    else:
        mech = replace(mech, time=mech.time + dt)
    new_mag, irep = induction_step(mag, mech.u, J, params)
    coupling = rep.lorentz_work / dt + irep.mixed
    return mech, new_mag, StepReport(rep, irep, coupling)
