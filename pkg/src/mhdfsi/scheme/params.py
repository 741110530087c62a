"""Scheme coefficients and the states advanced by the stepper."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..fields import NODE, ScalarField, VectorField
from ..geometry import RigidBodyState


class InvalidParameters(ValueError):
    """Raised with the list of admissibility conditions that fail."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class SchemeParams:
    """All coefficients of the penalized hybrid scheme.

    Attributes:
        nu, lam: Shear and bulk viscosity.
        a, gamma: Isentropic pressure law ``p = a rho**gamma``.
        sigma, mu: Conductivity and permeability.
        dt: Outer (induction) time step.
        m: Penalization strength of the variable viscosity.
        eps: Regularization parameter.  ``None`` selects ``eps = dt``.
        alpha, beta: Artificial pressure ``alpha rho**beta``.
        delta: Mollification radius.
        picard_tol, picard_max: Controls of the nonlinear induction solve.
        inner_substeps: Mechanical substeps per outer step.
        coupling_tol, coupling_max: Fixed-point controls of the mechanical substep.
        cg_tol: Relative residual target of the conjugate-gradient solves.
        pin_velocity: Keep ``u = 0`` and skip the mechanical update.
    """

    nu: float = 1.0
    lam: float = 0.0
    a: float = 1.0
    gamma: float = 2.0
    sigma: float = 1.0
    mu: float = 1.0
    dt: float = 1e-2
    m: float = 0.0
    eps: Optional[float] = 0.0
    alpha: float = 0.0
    beta: Optional[float] = None
    delta: float = 0.1
    picard_tol: float = 1e-10
    picard_max: int = 50
    inner_substeps: int = 1
    coupling_tol: float = 1e-12
    coupling_max: int = 200
    cg_tol: float = 1e-12
    pin_velocity: bool = False
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.eps is None:
            object.__setattr__(self, "eps", float(self.dt))
            self.metadata["eps_rule"] = "eps = dt"
        if self.beta is None:
            object.__setattr__(self, "beta", max(4.0, float(self.gamma)) + 1.0)
        errors = self.violations()
        if errors:
            raise InvalidParameters(errors)

    def violations(self) -> list[str]:
        """Admissibility conditions that fail, each named by its inequality."""
        out = []
        finite = all(
            np.isfinite(v)
            for v in (self.nu, self.lam, self.a, self.gamma, self.sigma, self.mu, self.dt,
                      self.m, self.eps, self.alpha, self.beta, self.delta)
        )
        if not finite:
            return ["all coefficients must be finite"]
        if not self.gamma > 1.5:
            out.append(f"gamma > 3/2 violated (gamma = {self.gamma:g})")
        if not self.nu > 0:
            out.append(f"nu > 0 violated (nu = {self.nu:g})")
        if not self.nu + self.lam >= 0:
            out.append(f"nu + lambda >= 0 violated (nu + lambda = {self.nu + self.lam:g})")
        if not self.a > 0:
            out.append(f"a > 0 violated (a = {self.a:g})")
        if not self.sigma > 0:
            out.append(f"sigma > 0 violated (sigma = {self.sigma:g})")
        if not self.mu > 0:
            out.append(f"mu > 0 violated (mu = {self.mu:g})")
        if not self.beta > max(4.0, self.gamma):
            out.append(
                f"beta > max{{4, gamma}} violated (beta = {self.beta:g}, gamma = {self.gamma:g})"
            )
        if not self.dt > 0:
            out.append(f"dt > 0 violated (dt = {self.dt:g})")
        if not self.m >= 0:
            out.append(f"m >= 0 violated (m = {self.m:g})")
        if not self.eps >= 0:
            out.append(f"eps >= 0 violated (eps = {self.eps:g})")
        if not self.alpha >= 0:
            out.append(f"alpha >= 0 violated (alpha = {self.alpha:g})")
        if not self.delta > 0:
            out.append(f"delta > 0 violated (delta = {self.delta:g})")
        if int(self.inner_substeps) != self.inner_substeps or self.inner_substeps < 1:
            out.append("inner_substeps >= 1 violated")
        if self.picard_max < 1 or self.coupling_max < 1:
            out.append("iteration caps must be >= 1")
        return out

    @property
    def dt_inner(self) -> float:
        return self.dt / self.inner_substeps

    def pressure_potential(self, rho):
        """Helmholtz-type energy density ``a/(g-1) rho^g + alpha/(b-1) rho^b``."""
        return self.a / (self.gamma - 1) * rho**self.gamma + self.alpha / (self.beta - 1) * rho**self.beta


@dataclass(frozen=True, eq=False)
class MechanicalState:
    rho: ScalarField
    u: VectorField
    bodies: tuple[RigidBodyState, ...] = ()
    time: float = 0.0

    def __post_init__(self):
        if np.min(self.rho.values) < 0:
            raise ValueError("density must be nonnegative")
        u = self.u
        if np.any(u.x[[0, -1], :] != 0) or np.any(u.y[:, [0, -1]] != 0):
            raise ValueError("velocity must vanish on the walls")
        object.__setattr__(self, "bodies", tuple(self.bodies))


@dataclass(frozen=True, eq=False)
class MagneticState:
    psi: ScalarField
    k: int = 0

    def __post_init__(self):
        if self.psi.location != NODE:
            raise ValueError("magnetic potential must be node-located")
        v = self.psi.values
        edge = np.concatenate([v[0], v[-1], v[:, 0], v[:, -1]])
        if np.any(edge != 0.0):
            raise ValueError("magnetic potential must vanish on the boundary (B.n = 0)")
