"""Rigid bodies: shapes, signed distance, penalty, mollifier and momentum integrals."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

import numpy as np
from scipy import ndimage

from .fields import CENTER, Grid, ScalarField, VectorField, symgrad


class GeometryError(ValueError):
    """Invalid body configuration (overlap, wall contact, vanished body)."""


class DegenerateBodyError(GeometryError):
    pass


class Shape(Protocol):
    def sdf(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Signed distance in body coordinates, positive inside."""
        ...


@dataclass(frozen=True)
class Disk:
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("disk radius must be positive")

    def sdf(self, x, y):
        return self.radius - np.hypot(x, y)

    @property
    def area(self) -> float:
        return np.pi * self.radius**2


@dataclass(frozen=True)
class Rectangle:
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("rectangle sides must be positive")

    def sdf(self, x, y):
        qx = np.abs(x) - 0.5 * self.width
        qy = np.abs(y) - 0.5 * self.height
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return -(outside + inside)

    @property
    def area(self) -> float:
        return self.width * self.height


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class Isometry:
    """Orientation preserving rigid map ``x -> Q x + t``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(2))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=float).reshape(2, 2)
        t = np.asarray(self.translation, dtype=float).reshape(2)
        if np.max(np.abs(q.T @ q - np.eye(2))) > 1e-12 or abs(np.linalg.det(q) - 1.0) > 1e-12:
            raise ValueError("rotation must be orthogonal with determinant +1")
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_angle(cls, theta: float, translation=(0.0, 0.0)) -> "Isometry":
        return cls(rotation(theta), np.asarray(translation, dtype=float))

    @property
    def angle(self) -> float:
        return float(np.arctan2(self.rotation[1, 0], self.rotation[0, 0]))

    def apply(self, x, y):
        q, t = self.rotation, self.translation
        return q[0, 0] * x + q[0, 1] * y + t[0], q[1, 0] * x + q[1, 1] * y + t[1]

    def inverse_apply(self, x, y):
        q, t = self.rotation, self.translation
        dx, dy = x - t[0], y - t[1]
        return q[0, 0] * dx + q[1, 0] * dy, q[0, 1] * dx + q[1, 1] * dy


def nearest_rotation(q: np.ndarray) -> np.ndarray:
    """Polar-decomposition projection onto SO(2)."""
    u, _, vt = np.linalg.svd(q)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] *= -1
        r = u @ vt
    return r


@dataclass(frozen=True, eq=False)
class RigidBodyState:
    """One rigid body: reference shape, current pose and rigid velocity."""

    id: int
    shape: Shape
    pose: Isometry = field(default_factory=Isometry)
    V: tuple[float, float] = (0.0, 0.0)
    w: float = 0.0
    delta: float = 0.1

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("mollification radius delta must be positive")
        object.__setattr__(self, "V", (float(self.V[0]), float(self.V[1])))
        object.__setattr__(self, "w", float(self.w))

    def chi(self, x, y):
        return self.shape.sdf(*self.pose.inverse_apply(x, y))

    @property
    def center(self) -> np.ndarray:
        return self.pose.translation


def signed_distance(bodies: Sequence[RigidBodyState], x, y):
    """Union signed distance (max over bodies); ``-inf`` when there are none."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.full(x.shape, -np.inf)
    for b in bodies:
        out = np.maximum(out, b.chi(x, y))
    return out


def chi_field(bodies: Sequence[RigidBodyState], grid: Grid, location: str = CENTER) -> np.ndarray:
    """Signed distance sampled at a grid location; very negative where there are no bodies."""
    x, y = grid.coords(location)
    out = signed_distance(bodies, x, y)
    return np.where(np.isfinite(out), out, -1e300)


def penalty_h(z):
    """Cubic hinge ``max(z, 0)**3``: convex, C2, zero on the nonpositive axis."""
    return np.maximum(z, 0.0) ** 3


def _subsamples(grid: Grid):
    x, y = grid.coords(CENTER)
    hx, hy = 0.25 * grid.dx, 0.25 * grid.dy
    return [(x + sx * hx, y + sy * hy) for sx in (-1, 1) for sy in (-1, 1)]


def volume_fraction(body: RigidBodyState, grid: Grid) -> np.ndarray:
    """Fraction of each cell inside the body, from four sub-samples."""
    return sum((body.chi(px, py) > 0).astype(float) for px, py in _subsamples(grid)) / 4.0


def check_configuration(bodies: Sequence[RigidBodyState], grid: Grid) -> None:
    """Reject bodies that touch a wall or each other on the sub-sample lattice."""
    samples = _subsamples(grid)
    x0, y0 = grid.origin
    for b in bodies:
        xs = np.linspace(x0, x0 + grid.lx, 4 * grid.nx + 1)
        ys = np.linspace(y0, y0 + grid.ly, 4 * grid.ny + 1)
        walls = np.concatenate(
            [
                b.chi(xs, np.full_like(xs, y0)),
                b.chi(xs, np.full_like(xs, y0 + grid.ly)),
                b.chi(np.full_like(ys, x0), ys),
                b.chi(np.full_like(ys, x0 + grid.lx), ys),
            ]
        )
        if np.max(walls) >= 0.0:
            raise GeometryError(f"body {b.id} touches the domain boundary")
    for a_i, a in enumerate(bodies):
        for b in bodies[a_i + 1 :]:
            for px, py in samples:
                if np.any((a.chi(px, py) >= 0) & (b.chi(px, py) >= 0)):
                    raise GeometryError(f"bodies {a.id} and {b.id} overlap")


# --- mollifier --------------------------------------------------------------


def mollifier_kernel(delta: float, dx: float, dy: float) -> np.ndarray:
    """Discrete radial bump ``(1 - (r/delta)^2)^2`` normalized to unit mass."""
    kx, ky = int(np.floor(delta / dx)), int(np.floor(delta / dy))
    ox = np.arange(-kx, kx + 1) * dx
    oy = np.arange(-ky, ky + 1) * dy
    r2 = (ox[:, None] ** 2 + oy[None, :] ** 2) / delta**2
    k = np.where(r2 < 1.0, (1.0 - r2) ** 2, 0.0)
    return k / np.sum(k)


def mollify(u: VectorField, delta: float) -> VectorField:
    """Convolve each component with the radial bump of radius ``delta``.

    Samples are extended by reflection across the domain edge, so constants
    are reproduced everywhere and affine fields on the delta-interior.
    """
    g = u.grid
    if delta < 2.0 * max(g.dx, g.dy):
        raise ValueError(f"delta={delta} below two cells; kernel unresolvable")
    k = mollifier_kernel(delta, g.dx, g.dy)
    return VectorField(
        g,
        ndimage.correlate(u.x, k, mode="mirror"),
        ndimage.correlate(u.y, k, mode="mirror"),
    )


# --- body integrals ----------------------------------------------------------


@dataclass(frozen=True)
class BodyIntegrals:
    m: float
    X: tuple[float, float]
    J: float


def _weights(rho: ScalarField, body: RigidBodyState) -> np.ndarray:
    if rho.location != CENTER:
        raise ValueError("density must be cell-centered")
    return rho.values * volume_fraction(body, rho.grid) * rho.grid.cell_area


def body_integrals(rho: ScalarField, body: RigidBodyState) -> BodyIntegrals:
    """Mass, center of mass and scalar moment of inertia of the body region."""
    w = _weights(rho, body)
    m = float(np.sum(w))
    if not m > 0:
        raise DegenerateBodyError(f"degenerate body {body.id}: zero mass")
    x, y = rho.grid.coords(CENTER)
    X = float(np.sum(w * x) / m)
    Y = float(np.sum(w * y) / m)
    J = float(np.sum(w * ((x - X) ** 2 + (y - Y) ** 2)))
    return BodyIntegrals(m, (X, Y), J)


def extract_rigid_velocity(rho: ScalarField, u: VectorField, body: RigidBodyState):
    """Rigid velocity ``(V, w)`` carrying the body's linear and angular momentum."""
    bi = body_integrals(rho, body)
    w8 = _weights(rho, body)
    uc, vc = u.at_centers()
    x, y = rho.grid.coords(CENTER)
    V = (float(np.sum(w8 * uc) / bi.m), float(np.sum(w8 * vc) / bi.m))
    if bi.J > 0:
        omega = float(np.sum(w8 * ((x - bi.X[0]) * vc - (y - bi.X[1]) * uc)) / bi.J)
    else:
        omega = 0.0
    return V, omega


def advance_flow_map(body: RigidBodyState, V, w: float, dt: float, center=None) -> RigidBodyState:
    """Exact rigid motion over ``dt``: rotate by ``w dt`` about ``center``, translate by ``V dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    c = body.pose.translation if center is None else np.asarray(center, dtype=float)
    r = rotation(w * dt)
    q = nearest_rotation(r @ body.pose.rotation)
    t = r @ (body.pose.translation - c) + c + np.asarray(V, dtype=float) * dt
    return replace(body, pose=Isometry(q, t), V=(float(V[0]), float(V[1])), w=float(w))


def rigidity_residual(u: VectorField, body: RigidBodyState, erosion: float = 0.0) -> float:
    """``||symgrad(u)||`` in L2 over the body (optionally eroded by ``erosion``)."""
    g = u.grid
    t = symgrad(u)
    frac = sum(
        (body.chi(px, py) > erosion).astype(float) for px, py in _subsamples(g)
    ) / 4.0
    return float(np.sqrt(np.sum(frac * t.norm2()) * g.cell_area))
