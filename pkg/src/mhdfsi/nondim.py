"""Characteristic scales, MHD-approximation checks and unit conversion.

Closure relations (with ``mu_f = mu0 mur`` and ``eps_f = eps0 epsr``)::

    ubar = xbar / tbar
    Ebar = Bbar xbar / tbar
    jbar = Bbar / (mu_f xbar)
    rhocbar = eps_f ubar Bbar / xbar

The scales ``pbar``, ``rhobar``, ``gbar``, ``Hbar`` and ``Dbar`` are not
fixed by these relations; they are user inputs and reported as unconstrained.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Optional

import numpy as np
from scipy import constants

MU0 = constants.mu_0
EPS0 = constants.epsilon_0

UNCONSTRAINED = ("pbar", "rhobar", "gbar", "Hbar", "Dbar")

# field name -> scale attribute
FIELD_SCALES = {
    "x": "xbar",
    "t": "tbar",
    "u": "ubar",
    "rho": "rhobar",
    "p": "pbar",
    "g": "gbar",
    "B": "Bbar",
    "E": "Ebar",
    "H": "Hbar",
    "D": "Dbar",
    "j": "jbar",
    "rhoc": "rhocbar",
}


@dataclass(frozen=True)
class CharacteristicScales:
    """Closed set of characteristic magnitudes (SI units)."""

    xbar: float
    tbar: float
    ubar: float
    Bbar: float
    Ebar: float
    jbar: float
    rhocbar: float
    mu0: float = MU0
    eps0: float = EPS0
    mur: float = 1.0
    epsr: float = 1.0
    sigma: Optional[float] = None
    rhobar: Optional[float] = None
    pbar: Optional[float] = None
    gbar: Optional[float] = None
    Hbar: Optional[float] = None
    Dbar: Optional[float] = None

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v is not None and not (np.isfinite(v) and v > 0):
                raise ValueError(f"scale {k} must be positive, got {v}")

    @property
    def mu_f(self) -> float:
        return self.mu0 * self.mur

    @property
    def eps_f(self) -> float:
        return self.eps0 * self.epsr

    @property
    def c(self) -> float:
        """Speed of light ``(mu0 eps0)^(-1/2)``."""
        return (self.mu0 * self.eps0) ** -0.5

    def scale_of(self, name: str) -> float:
        attr = FIELD_SCALES.get(name, name)
        if not hasattr(self, attr):
            raise KeyError(f"unknown field {name!r}")
        v = getattr(self, attr)
        if v is None:
            raise KeyError(f"missing scale for field {name!r} ({attr} not supplied)")
        return v

    def unconstrained(self) -> list[str]:
        return [k for k in UNCONSTRAINED if getattr(self, k) is not None]


def _positive(**kw):
    for k, v in kw.items():
        if v is not None and not (np.isfinite(v) and v > 0):
            raise ValueError(f"{k} must be positive, got {v}")


def close_scales(
    xbar: float,
    tbar: float,
    Bbar: float,
    *,
    mu0: float = MU0,
    eps0: float = EPS0,
    mur: float = 1.0,
    epsr: float = 1.0,
    **extra,
) -> CharacteristicScales:
    """Close the scale set from ``(xbar, tbar, Bbar)`` and material constants."""
    _positive(xbar=xbar, tbar=tbar, Bbar=Bbar, mu0=mu0, eps0=eps0, mur=mur, epsr=epsr)
    ubar = xbar / tbar
    mu_f, eps_f = mu0 * mur, eps0 * epsr
    return CharacteristicScales(
        xbar=xbar,
        tbar=tbar,
        ubar=ubar,
        Bbar=Bbar,
        Ebar=Bbar * xbar / tbar,
        jbar=Bbar / (mu_f * xbar),
        rhocbar=eps_f * ubar * Bbar / xbar,
        mu0=mu0,
        eps0=eps0,
        mur=mur,
        epsr=epsr,
        **extra,
    )


def close_scales_from_velocity(
    xbar: float, ubar: float, jbar: float, *, mu0: float = MU0, mur: float = 1.0, **kw
) -> CharacteristicScales:
    """Alternate closure from ``(xbar, ubar, jbar)``."""
    _positive(xbar=xbar, ubar=ubar, jbar=jbar)
    return close_scales(xbar, xbar / ubar, jbar * mu0 * mur * xbar, mu0=mu0, mur=mur, **kw)


def closure_residual(s: CharacteristicScales) -> float:
    """Largest relative disagreement among ``Ebar/Bbar``, ``ubar`` and ``xbar/tbar``."""
    vals = np.array([s.Ebar / s.Bbar, s.ubar, s.xbar / s.tbar])
    return float(np.max(np.abs(vals - vals.mean())) / np.abs(vals.mean()))


def displacement_current_ratio(s: CharacteristicScales) -> float:
    """Weight ``(ubar/c)^2`` of the dropped displacement current."""
    return (s.ubar / s.c) ** 2


@dataclass(frozen=True)
class Thresholds:
    speed_holds: float = 1e-3
    speed_marginal: float = 1e-1
    murepsr_holds: float = 0.05
    murepsr_marginal: float = 0.2


@dataclass(frozen=True)
class ApproximationReport:
    ratio_u_c: float
    displacement_ratio: float
    murepsr: float
    verdicts: dict = field(default_factory=dict)
    thresholds: Thresholds = Thresholds()
    unconstrained: tuple = ()

    def lines(self) -> list[str]:
        t = self.thresholds
        out = [
            f"ratio_u_c: {self.ratio_u_c:.17g}",
            f"displacement_ratio: {self.displacement_ratio:.17g}",
            f"murepsr: {self.murepsr:.17g}",
            f"verdict_speed: {self.verdicts['speed']}",
            f"verdict_murepsr: {self.verdicts['murepsr']}",
            f"threshold_speed_holds: {t.speed_holds:g}",
            f"threshold_speed_marginal: {t.speed_marginal:g}",
            f"threshold_murepsr_holds: {t.murepsr_holds:g}",
            f"threshold_murepsr_marginal: {t.murepsr_marginal:g}",
        ]
        out += [f"unconstrained_scale: {k}" for k in self.unconstrained]
        return out


def _verdict(x: float, holds: float, marginal: float) -> str:
    if x <= holds:
        return "holds"
    if x <= marginal:
        return "marginal"
    return "violated"


def check_assumptions(s: CharacteristicScales, thresholds: Thresholds = Thresholds()) -> ApproximationReport:
    """Grade ``ubar << c`` and ``mur epsr ~ 1`` against the configured cutoffs."""
    ratio = s.ubar / s.c
    prod = s.mur * s.epsr
    return ApproximationReport(
        ratio_u_c=ratio,
        displacement_ratio=ratio**2,
        murepsr=prod,
        verdicts={
            "speed": _verdict(ratio, thresholds.speed_holds, thresholds.speed_marginal),
            "murepsr": _verdict(abs(prod - 1.0), thresholds.murepsr_holds, thresholds.murepsr_marginal),
        },
        thresholds=thresholds,
        unconstrained=tuple(s.unconstrained()),
    )


def nondimensionalize(values: Mapping[str, np.ndarray], s: CharacteristicScales) -> dict:
    return {k: np.asarray(v) / s.scale_of(k) for k, v in values.items()}


def redimensionalize(values: Mapping[str, np.ndarray], s: CharacteristicScales) -> dict:
    return {k: np.asarray(v) * s.scale_of(k) for k, v in values.items()}


# --- presets --------------------------------------------------------------------

PRESETS = {
    # Blood in a large vessel; permittivity left at the vacuum value.
    "blood": dict(xbar=1e-2, tbar=2e-2, Bbar=1.0, mur=1.0 - 9.05e-6, epsr=1.0, sigma=0.7, rhobar=1060.0),
    # Liquid gallium in a laboratory channel.
    "gallium": dict(xbar=0.1, tbar=1.0, Bbar=0.1, mur=1.0, epsr=1.0, sigma=3.7e6, rhobar=6095.0),
}


def preset_scales(name: str) -> CharacteristicScales:
    kw = dict(PRESETS[name])
    return close_scales(kw.pop("xbar"), kw.pop("tbar"), kw.pop("Bbar"), **kw)


# --- scheme scaling -----------------------------------------------------------------


@dataclass(frozen=True)
class SchemeScaling:
    """Factors mapping a dimensional run to its dimensionless twin.

    Dimensionless value = dimensional value / factor.
    """

    length: float
    time: float
    velocity: float
    density: float
    potential: float
    gravity: float
    current: float


def scheme_scaling(s: CharacteristicScales, params) -> tuple[object, SchemeScaling]:
    """Dimensionless coefficients and field factors for the scheme.

    Requires ``rhobar``.  Pressure and gravity are scaled dynamically
    (``rhobar ubar^2`` and ``ubar/tbar``), which fixes the coefficient groups
    ``a'``, ``alpha'`` and ``g'``.  Only ``eps = 0`` is supported because the
    regularizers carry mutually inconsistent units.
    """
    if s.rhobar is None:
        raise KeyError("missing scale rhobar")
    if params.eps != 0:
        raise ValueError("scheme scaling requires eps = 0")
    rho, u, x, t, B = s.rhobar, s.ubar, s.xbar, s.tbar, s.Bbar
    mu_d = rho * u**2 / B**2
    new = replace(
        params,
        nu=params.nu / (rho * u * x),
        lam=params.lam / (rho * u * x),
        a=params.a * rho ** (params.gamma - 1) / u**2,
        alpha=params.alpha * rho ** (params.beta - 1) / u**2,
        mu=params.mu * mu_d,
        sigma=params.sigma * params.mu * x * u / (params.mu * mu_d),
        dt=params.dt / t,
        m=params.m * x**2 / (rho * u),
        delta=params.delta / x,
        metadata={},
    )
    factors = SchemeScaling(
        length=x,
        time=t,
        velocity=u,
        density=rho,
        potential=B * x,
        gravity=u / t,
        current=params.mu * mu_d * B / (params.mu * x),
    )
    return new, factors


def _scale_grid(grid, length: float):
    from .fields import Grid

    return Grid(grid.nx, grid.ny, grid.dx / length, grid.dy / length, tuple(o / length for o in grid.origin))


def _scale_body(body, f: SchemeScaling, inverse: bool):
    from .geometry import Disk, Isometry, Rectangle

    k = f.length if inverse else 1.0 / f.length
    kv = f.velocity if inverse else 1.0 / f.velocity
    kw = 1.0 / f.time if inverse else f.time
    shape = body.shape
    shape = Disk(shape.radius * k) if isinstance(shape, Disk) else Rectangle(shape.width * k, shape.height * k)
    pose = Isometry(body.pose.rotation, np.asarray(body.pose.translation) * k)
    return replace(body, shape=shape, pose=pose, V=tuple(np.asarray(body.V) * kv), w=body.w * kw, delta=body.delta * k)


def scale_states(mech, mag, f: SchemeScaling, inverse: bool = False):
    """Divide (or with ``inverse`` multiply) scheme states by their factors."""
    from .fields import ScalarField, VectorField
    from .scheme.params import MagneticState, MechanicalState

    op = np.multiply if inverse else np.divide
    grid = _scale_grid(mech.rho.grid, 1.0 / f.length if inverse else f.length)
    rho = ScalarField(grid, op(mech.rho.values, f.density), mech.rho.location)
    u = VectorField(grid, op(mech.u.x, f.velocity), op(mech.u.y, f.velocity))
    psi = ScalarField(grid, op(mag.psi.values, f.potential), mag.psi.location)
    bodies = tuple(_scale_body(b, f, inverse) for b in mech.bodies)
    return (
        MechanicalState(rho, u, bodies, float(op(mech.time, f.time))),
        MagneticState(psi, mag.k),
    )


def unscale_params(s: CharacteristicScales, params):
    """Inverse of :func:`scheme_scaling`: dimensional coefficients for dimensionless ones."""
    if s.rhobar is None:
        raise KeyError("missing scale rhobar")
    if params.eps != 0:
        raise ValueError("scheme scaling requires eps = 0")
    rho, u, x, t, B = s.rhobar, s.ubar, s.xbar, s.tbar, s.Bbar
    mu_d = rho * u**2 / B**2
    return replace(
        params,
        nu=params.nu * rho * u * x,
        lam=params.lam * rho * u * x,
        a=params.a * u**2 / rho ** (params.gamma - 1),
        alpha=params.alpha * u**2 / rho ** (params.beta - 1),
        mu=params.mu / mu_d,
        sigma=params.sigma * mu_d / (x * u),
        dt=params.dt * t,
        m=params.m * rho * u / x**2,
        delta=params.delta * x,
        metadata={},
    )
