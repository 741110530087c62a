"""Pill-box interface checks on curved geometries.

A curved rectangle straddles the curve ``y = phi(x)`` in the ``(x, y)`` plane
and a curved cylinder straddles the surface ``y = Phi(x, z)``.  Integral
forms of Ampere's law (circulation against enclosed current) and Gauss's law
(outward flux against enclosed charge) are evaluated by composite
Gauss-Legendre quadrature; the defects measure how well point values at
``(0, +-dl, 0)`` reproduce the interface jump.

Synthetic fields are built from sympy expressions in ``x, y, z`` so that
derivatives (curve slopes, consistent currents and charges) are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import sympy

X, Y, Z = sympy.symbols("x y z", real=True)
TAU = np.array([-1.0, 0.0, 0.0])
NORMAL = np.array([0.0, 1.0, 0.0])
ZERO_DEFECT = 1e-12


def _lambdify(expr, args):
    f = sympy.lambdify(args, expr, "numpy")

    def wrapped(*a):
        out = f(*a)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(*a).shape)

    return wrapped


# --- synthetic fields --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SyntheticField:
    """Closed-form scalar or vector field of ``(x, y, z)``.

    Attributes:
        exprs: One sympy expression (scalar) or three (vector).
        jump: Free-text description of the modeled interface jump.
    """

    exprs: tuple
    jump: str = "none"
    _funcs: tuple = field(init=False, repr=False)

    def __post_init__(self):
        exprs = tuple(sympy.sympify(e) for e in self.exprs)
        if len(exprs) not in (1, 3):
            raise ValueError("a synthetic field has one or three components")
        object.__setattr__(self, "exprs", exprs)
        object.__setattr__(self, "_funcs", tuple(_lambdify(e, (X, Y, Z)) for e in exprs))

    @property
    def is_vector(self) -> bool:
        return len(self.exprs) == 3

    def __call__(self, x, y, z):
        x, y, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float))
        vals = [f(x, y, z) for f in self._funcs]
        return np.stack(vals) if self.is_vector else vals[0]

    def curl(self) -> "SyntheticField":
        fx, fy, fz = self.exprs
        return SyntheticField(
            (sympy.diff(fz, Y) - sympy.diff(fy, Z), sympy.diff(fx, Z) - sympy.diff(fz, X), sympy.diff(fy, X) - sympy.diff(fx, Y)),
            jump=f"curl of field with jump: {self.jump}",
        )

    def divergence(self) -> "SyntheticField":
        fx, fy, fz = self.exprs
        return SyntheticField((sympy.diff(fx, X) + sympy.diff(fy, Y) + sympy.diff(fz, Z),), jump=f"divergence: {self.jump}")

    def reflected(self) -> "SyntheticField":
        """Mirror image under ``x -> -x``; vector fields also flip their x-component."""
        exprs = [e.subs(X, -X, simultaneous=True) for e in self.exprs]
        if self.is_vector:
            exprs[0] = -exprs[0]
        return SyntheticField(tuple(exprs), jump=self.jump)


def vector_field(fx, fy, fz, jump: str = "none") -> SyntheticField:
    return SyntheticField((fx, fy, fz), jump)


def scalar_field(f, jump: str = "none") -> SyntheticField:
    return SyntheticField((f,), jump)


def zero_scalar() -> SyntheticField:
    return SyntheticField((0,))


# --- geometry ----------------------------------------------------------------


def _check_flat_at_origin(values: Sequence[float], what: str):
    if any(abs(v) > 1e-12 for v in values):
        raise ValueError(f"{what} must vanish with its first derivatives at the origin")


@dataclass(frozen=True, eq=False)
class CurvedRectangle:
    """Region ``|x| <= ds, |y - phi(x)| <= dl`` in the plane ``z = 0``."""

    phi: object
    ds: float
    dl: float
    _f: Callable = field(init=False, repr=False)
    _df: Callable = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.ds > 0 and self.dl > 0):
            raise ValueError("ds and dl must be positive")
        phi = sympy.sympify(self.phi)
        object.__setattr__(self, "phi", phi)
        dphi = sympy.diff(phi, X)
        _check_flat_at_origin([float(phi.subs(X, 0)), float(dphi.subs(X, 0))], "phi")
        object.__setattr__(self, "_f", _lambdify(phi, (X,)))
        object.__setattr__(self, "_df", _lambdify(dphi, (X,)))

    def curve(self, x):
        return self._f(np.asarray(x, float))

    def slope(self, x):
        return self._df(np.asarray(x, float))

    def scaled(self, ds: float, dl: float) -> "CurvedRectangle":
        return CurvedRectangle(self.phi, ds, dl)

    def reflected(self) -> "CurvedRectangle":
        return CurvedRectangle(self.phi.subs(X, -X), self.ds, self.dl)


@dataclass(frozen=True, eq=False)
class CurvedCylinder:
    """Cylinder of radius ``r`` around the ``y`` axis between ``Phi - dl`` and ``Phi + dl``."""

    Phi: object
    r: float
    dl: float
    _f: Callable = field(init=False, repr=False)
    _d1: Callable = field(init=False, repr=False)
    _d2: Callable = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.r > 0 and self.dl > 0):
            raise ValueError("r and dl must be positive")
        Phi = sympy.sympify(self.Phi)
        object.__setattr__(self, "Phi", Phi)
        d1, d2 = sympy.diff(Phi, X), sympy.diff(Phi, Z)
        at0 = {X: 0, Z: 0}
        _check_flat_at_origin([float(Phi.subs(at0)), float(d1.subs(at0)), float(d2.subs(at0))], "Phi")
        object.__setattr__(self, "_f", _lambdify(Phi, (X, Z)))
        object.__setattr__(self, "_d1", _lambdify(d1, (X, Z)))
        object.__setattr__(self, "_d2", _lambdify(d2, (X, Z)))

    def surface(self, x, z):
        return self._f(np.asarray(x, float), np.asarray(z, float))

    def scaled(self, r: float, dl: float) -> "CurvedCylinder":
        return CurvedCylinder(self.Phi, r, dl)

    def reflected(self) -> "CurvedCylinder":
        return CurvedCylinder(self.Phi.subs(X, -X), self.r, self.dl)


# --- quadrature --------------------------------------------------------------


@dataclass(frozen=True)
class Quadrature:
    """Composite Gauss-Legendre rule settings.

    Attributes:
        order: Nodes per panel.
        panels: Uniform panels along smooth directions.
        grading: Number of geometric refinement levels toward the interface
            in the direction crossing it.
    """

    order: int = 16
    panels: int = 4
    grading: int = 14

    def doubled(self) -> "Quadrature":
        return Quadrature(2 * self.order, self.panels, self.grading)


def _rule(breaks: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = 0.5 * (b - a) * t + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _uniform(a: float, b: float, q: Quadrature):
    return _rule(np.linspace(a, b, q.panels + 1), q.order)


def _graded(h: float, q: Quadrature):
    """Rule on ``[-h, h]`` with panels shrinking geometrically toward 0."""
    pos = h * 2.0 ** -np.arange(q.grading + 1)
    breaks = np.concatenate([-pos, [0.0], pos[::-1]])
    return _rule(breaks, q.order)


# --- Ampere-type pill box ----------------------------------------------------------


def circulation(H: SyntheticField, rect: CurvedRectangle, q: Quadrature = Quadrature()) -> float:
    """Counter-clockwise line integral of ``H`` around the curved rectangle."""
    xs, wx = _uniform(-rect.ds, rect.ds, q)
    ts, wt = _graded(rect.dl, q)
    phi, dphi = rect.curve(xs), rect.slope(xs)
    zero_x, zero_t = np.zeros_like(xs), np.zeros_like(ts)
    Hb = H(xs, phi - rect.dl, zero_x)
    Ht = H(xs, phi + rect.dl, zero_x)
    bottom = np.sum(wx * (Hb[0] + Hb[1] * dphi))
    top = -np.sum(wx * (Ht[0] + Ht[1] * dphi))
    right = np.sum(wt * H(np.full_like(ts, rect.ds), rect.curve(rect.ds) + ts, zero_t)[1])
    left = -np.sum(wt * H(np.full_like(ts, -rect.ds), rect.curve(-rect.ds) + ts, zero_t)[1])
    return float(bottom + right + top + left)


def enclosed_current(j: SyntheticField, rect: CurvedRectangle, q: Quadrature = Quadrature()) -> float:
    """``K = integral of j . e_z`` over the curved rectangle."""
    xs, wx = _uniform(-rect.ds, rect.ds, q)
    ts, wt = _graded(rect.dl, q)
    xx, tt = np.meshgrid(xs, ts, indexing="ij")
    yy = rect.curve(xx) + tt
    vals = j(xx, yy, np.zeros_like(xx))
    jz = vals[2] if j.is_vector else vals
    return float(wx @ jz @ wt)


def tangential_defect(H: SyntheticField, j: SyntheticField, rect: CurvedRectangle, q: Quadrature = Quadrature()) -> float:
    """``|tau.H(0, dl) - tau.H(0, -dl) - K / (2 ds)|`` with ``tau = (-1, 0, 0)``."""
    up = H(0.0, rect.dl, 0.0)
    down = H(0.0, -rect.dl, 0.0)
    K = enclosed_current(j, rect, q)
    return float(abs(TAU @ up - TAU @ down - K / (2 * rect.ds)))


# --- Gauss-type pill box ----------------------------------------------------------


def flux(D: SyntheticField, cyl: CurvedCylinder, q: Quadrature = Quadrature()) -> float:
    """Outward flux of ``D`` through the top, bottom and side of the cylinder."""
    ss, ws = _uniform(0.0, cyl.r, q)
    aa, wa = _uniform(0.0, 2 * np.pi, q)
    ts, wt = _graded(cyl.dl, q)
    S, A = np.meshgrid(ss, aa, indexing="ij")
    x, z = S * np.cos(A), S * np.sin(A)
    Phi, P1, P2 = cyl.surface(x, z), cyl._d1(x, z), cyl._d2(x, z)
    Dt = D(x, Phi + cyl.dl, z)
    Db = D(x, Phi - cyl.dl, z)
    top = S * (-P1 * Dt[0] + Dt[1] - P2 * Dt[2])
    bottom = S * (P1 * Db[0] - Db[1] + P2 * Db[2])
    caps = ws @ (top + bottom) @ wa
    A2, T2 = np.meshgrid(aa, ts, indexing="ij")
    xr, zr = cyl.r * np.cos(A2), cyl.r * np.sin(A2)
    Ds = D(xr, cyl.surface(xr, zr) + T2, zr)
    side = wa @ (cyl.r * (np.cos(A2) * Ds[0] + np.sin(A2) * Ds[2])) @ wt
    return float(caps + side)


def enclosed_charge(rhoc: SyntheticField, cyl: CurvedCylinder, q: Quadrature = Quadrature()) -> float:
    """``W = integral of rho_c`` over the curved cylinder."""
    ss, ws = _uniform(0.0, cyl.r, q)
    aa, wa = _uniform(0.0, 2 * np.pi, q)
    ts, wt = _graded(cyl.dl, q)
    S, A, T = np.meshgrid(ss, aa, ts, indexing="ij")
    x, z = S * np.cos(A), S * np.sin(A)
    vals = rhoc(x, cyl.surface(x, z) + T, z) * S
    return float(np.einsum("i,j,k,ijk->", ws, wa, wt, vals))


def normal_defect(D: SyntheticField, rhoc: SyntheticField, cyl: CurvedCylinder, q: Quadrature = Quadrature()) -> float:
    """``|n.[D(0, dl, 0) - D(0, -dl, 0)] - W / (pi r^2)|`` with ``n = (0, 1, 0)``."""
    up = D(0.0, cyl.dl, 0.0)
    down = D(0.0, -cyl.dl, 0.0)
    W = enclosed_charge(rhoc, cyl, q)
    return float(abs(NORMAL @ (up - down) - W / (np.pi * cyl.r**2)))


# --- rate study --------------------------------------------------------------------


@dataclass(frozen=True)
class RateResult:
    sizes: np.ndarray
    defects: np.ndarray
    slope: Optional[float]
    status: str

    def rows(self) -> list[tuple[float, float, str]]:
        s = "" if self.slope is None else f"{self.slope:.6g}"
        return [(float(h), float(d), s) for h, d in zip(self.sizes, self.defects)]


def geometric_sizes(h0: float, n: int = 4, ratio: float = 0.5) -> np.ndarray:
    return h0 * ratio ** np.arange(n)


def rate_study(defect: Callable[[float], float], sizes: Sequence[float]) -> RateResult:
    """Least-squares slope of ``log defect`` against ``log size``.

    Raises:
        ValueError: Fewer than four sizes or not a geometric progression.
    """
    sizes = np.asarray(sizes, dtype=float)
    if sizes.size < 4:
        raise ValueError("a rate study needs at least four sizes")
    ratios = sizes[1:] / sizes[:-1]
    if np.any(sizes <= 0) or not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("sizes must form a geometric progression")
    d = np.array([defect(h) for h in sizes])
    if np.all(d < ZERO_DEFECT):
        return RateResult(sizes, d, None, "identically satisfied")
    if np.any(d <= 0):
        raise ValueError("mixed zero and nonzero defects; no slope can be fitted")
    slope = float(np.polyfit(np.log(sizes), np.log(d), 1)[0])
    return RateResult(sizes, d, slope, "fitted")


# --- constructed cases ----------------------------------------------------------


def layer(expr, width: float):
    """Smooth step ``tanh(expr / width)`` from -1 to 1."""
    return sympy.tanh(expr / width)


@dataclass(frozen=True)
class TangentialCase:
    """Field with a tangential jump ``jump`` in ``H`` across ``y = phi(x)``, carried by a thin current sheet."""

    kappa: float = 1.0
    jump: float = 1.0
    width: float = 1e-4

    @property
    def phi(self):
        return self.kappa * X**2

    def H(self) -> SyntheticField:
        step = layer(Y - self.phi, self.width)
        return vector_field(-0.5 * self.jump * step + 0.5 * Y + 0.3 * X, 0.7 * X + 0.2 * Y, 0, jump=f"tangential {self.jump}")

    def j(self) -> SyntheticField:
        return self.H().curl()

    def rect(self, h: float, aspect: float = 0.5) -> CurvedRectangle:
        return CurvedRectangle(self.phi, h, aspect * h)


@dataclass(frozen=True)
class NormalCase:
    """Field with a normal jump ``jump`` in ``D`` across ``y = Phi(x, z)``, carried by a thin charged layer."""

    k1: float = 0.5
    k2: float = 0.3
    jump: float = 1.0
    width: float = 1e-4

    @property
    def Phi(self):
        return self.k1 * X**2 + self.k2 * Z**2

    def D(self) -> SyntheticField:
        step = layer(Y - self.Phi, self.width)
        return vector_field(0.4 * X + 0.1 * Y, 0.5 * self.jump * step + 0.2 * Y, 0.6 * Z, jump=f"normal {self.jump}")

    def rhoc(self) -> SyntheticField:
        return self.D().divergence()

    def cyl(self, h: float, aspect: float = 0.5) -> CurvedCylinder:
        return CurvedCylinder(self.Phi, h, aspect * h)


def tangential_study(case: TangentialCase = TangentialCase(), h0: float = 0.08, n: int = 4, aspect: float = 0.5, q=Quadrature()):
    """Rate of the tangential defect in ``ds + dl`` (``dl = aspect * ds``)."""
    H, j = case.H(), case.j()
    return rate_study(lambda s: tangential_defect(H, j, case.rect(s / (1 + aspect), aspect), q), geometric_sizes(h0, n))


def normal_study(case: NormalCase = NormalCase(), h0: float = 0.08, n: int = 4, aspect: float = 0.5, q=Quadrature()):
    """Rate of the normal defect in ``r + dl`` (``dl = aspect * r``)."""
    D, rc = case.D(), case.rhoc()
    return rate_study(lambda s: normal_defect(D, rc, case.cyl(s / (1 + aspect), aspect), q), geometric_sizes(h0, n))


def zero_jump_studies(h0: float = 0.08, n: int = 4, q=Quadrature()) -> dict[str, RateResult]:
    """Continuous fields without sources: both defects vanish identically."""
    H = vector_field(0.3 + X**2, 0.5 * X, 0)
    D = vector_field(0.2 * Z, 1.0 + X**2 - Z**2, 0.4 * X)
    rect = lambda s: CurvedRectangle(X**2, s / 1.5, s / 3)
    cyl = lambda s: CurvedCylinder(0.5 * X**2 + 0.3 * Z**2, s / 1.5, s / 3)
    sizes = geometric_sizes(h0, n)
    return {
        "tangential": rate_study(lambda s: tangential_defect(H, zero_scalar(), rect(s), q), sizes),
        "normal": rate_study(lambda s: normal_defect(D, zero_scalar(), cyl(s), q), sizes),
    }


def quadratic_study(h0: float = 0.08, n: int = 4) -> RateResult:
    """Harness check: ``tau.H = y|y|`` on a flat interface gives defect ``2 dl^2``."""
    H = vector_field(-Y * sympy.Abs(Y), 0, 0)
    return rate_study(lambda s: tangential_defect(H, zero_scalar(), CurvedRectangle(0, s, s)), geometric_sizes(h0, n))
