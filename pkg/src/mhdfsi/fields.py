"""Staggered (MAC) grid fields and discrete differential operators.

Array layout: every array is indexed ``[i, j]`` with ``i`` along x and ``j``
along y.  Cell centers have shape ``(nx, ny)``, nodes ``(nx + 1, ny + 1)``,
vertical faces (x-component of vectors) ``(nx + 1, ny)`` and horizontal
faces (y-component) ``(nx, ny + 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

CENTER = "center"
NODE = "node"
XFACE = "xface"
YFACE = "yface"
LOCATIONS = (CENTER, NODE, XFACE, YFACE)


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid.

    Attributes:
        nx, ny: Cell counts.
        dx, dy: Cell spacings.
        origin: Lower-left corner of the domain.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("cell counts must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid needs nx, ny >= 4, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("grid spacings must be positive")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def unit(cls, n: int, length: float = 1.0) -> "Grid":
        """Square ``n x n`` grid covering ``[0, length]^2``."""
        return cls(n, n, length / n, length / n)

    @property
    def lx(self) -> float:
        return self.nx * self.dx

    @property
    def ly(self) -> float:
        return self.ny * self.dy

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def shape(self, location: str) -> tuple[int, int]:
        return {
            CENTER: (self.nx, self.ny),
            NODE: (self.nx + 1, self.ny + 1),
            XFACE: (self.nx + 1, self.ny),
            YFACE: (self.nx, self.ny + 1),
        }[location]

    def coords(self, location: str) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of the sample points of ``location`` (``ij`` meshgrid)."""
        x0, y0 = self.origin
        xc = x0 + (np.arange(self.nx) + 0.5) * self.dx
        yc = y0 + (np.arange(self.ny) + 0.5) * self.dy
        xn = x0 + np.arange(self.nx + 1) * self.dx
        yn = y0 + np.arange(self.ny + 1) * self.dy
        xs, ys = {
            CENTER: (xc, yc),
            NODE: (xn, yn),
            XFACE: (xn, yc),
            YFACE: (xc, yn),
        }[location]
        return np.meshgrid(xs, ys, indexing="ij")

    def weights(self, location: str) -> np.ndarray:
        """Quadrature weights; boundary samples carry their half (quarter) share."""
        w = np.full(self.shape(location), self.cell_area)
        if location in (NODE, XFACE):
            w[0, :] *= 0.5
            w[-1, :] *= 0.5
        if location in (NODE, YFACE):
            w[:, 0] *= 0.5
            w[:, -1] *= 0.5
        return w


def _check(values: np.ndarray, shape: tuple[int, int], what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != shape:
        raise ValueError(f"{what}: expected shape {shape}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what}: non-finite values")
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Scalar samples at cell centers or nodes."""

    grid: Grid
    values: np.ndarray
    location: str = CENTER

    def __post_init__(self):
        if self.location not in (CENTER, NODE):
            raise ValueError(f"scalar location must be center or node, got {self.location!r}")
        object.__setattr__(
            self, "values", _check(self.values, self.grid.shape(self.location), "ScalarField")
        )

    @classmethod
    def zeros(cls, grid: Grid, location: str = CENTER) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape(location)), location)

    @classmethod
    def from_function(cls, grid: Grid, f: Callable, location: str = CENTER) -> "ScalarField":
        x, y = grid.coords(location)
        return cls(grid, np.broadcast_to(f(x, y), x.shape).astype(float), location)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values, self.location)

    def integral(self) -> float:
        return float(np.sum(self.values * self.grid.weights(self.location)))


@dataclass(frozen=True, eq=False)
class VectorField:
    """MAC vector field: ``x`` on vertical faces, ``y`` on horizontal faces."""

    grid: Grid
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _check(self.x, self.grid.shape(XFACE), "VectorField.x"))
        object.__setattr__(self, "y", _check(self.y, self.grid.shape(YFACE), "VectorField.y"))

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros(grid.shape(XFACE)), np.zeros(grid.shape(YFACE)))

    @classmethod
    def from_function(cls, grid: Grid, fx: Callable, fy: Callable) -> "VectorField":
        x1, y1 = grid.coords(XFACE)
        x2, y2 = grid.coords(YFACE)
        return cls(
            grid,
            np.broadcast_to(fx(x1, y1), x1.shape).astype(float),
            np.broadcast_to(fy(x2, y2), x2.shape).astype(float),
        )

    def with_zero_walls(self) -> "VectorField":
        """Copy with the normal component set to zero on the domain walls."""
        x, y = self.x.copy(), self.y.copy()
        x[0, :] = x[-1, :] = 0.0
        y[:, 0] = y[:, -1] = 0.0
        return VectorField(self.grid, x, y)

    def at_centers(self) -> tuple[np.ndarray, np.ndarray]:
        return 0.5 * (self.x[1:] + self.x[:-1]), 0.5 * (self.y[:, 1:] + self.y[:, :-1])

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.x)), np.max(np.abs(self.y))))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.grid, self.x + other.x, self.y + other.y)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.grid, self.x - other.x, self.y - other.y)

    def __mul__(self, c: float) -> "VectorField":
        return VectorField(self.grid, c * self.x, c * self.y)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class TensorField:
    """Symmetric 2x2 tensor per cell; only ``xx``, ``yy``, ``xy`` are stored."""

    grid: Grid
    xx: np.ndarray
    yy: np.ndarray
    xy: np.ndarray

    def __post_init__(self):
        shape = self.grid.shape(CENTER)
        for name in ("xx", "yy", "xy"):
            object.__setattr__(self, name, _check(getattr(self, name), shape, f"TensorField.{name}"))

    @property
    def yx(self) -> np.ndarray:
        return self.xy

    def norm2(self) -> np.ndarray:
        """Frobenius norm squared per cell."""
        return self.xx**2 + self.yy**2 + 2.0 * self.xy**2


def inner(a, b) -> float:
    """Discrete L2 inner product of two fields of the same kind."""
    if isinstance(a, ScalarField):
        if a.location != b.location:
            raise ValueError("location mismatch")
        return float(np.sum(a.values * b.values * a.grid.weights(a.location)))
    if isinstance(a, VectorField):
        g = a.grid
        return float(np.sum(a.x * b.x * g.weights(XFACE)) + np.sum(a.y * b.y * g.weights(YFACE)))
    raise TypeError(f"unsupported field type {type(a).__name__}")


def norm(a) -> float:
    return float(np.sqrt(inner(a, a)))


def grad(f: ScalarField) -> VectorField:
    """Cell-centered gradient onto interior faces; wall faces are zero (no flux)."""
    if f.location != CENTER:
        raise ValueError("grad expects a cell-centered field")
    g = f.grid
    gx = np.zeros(g.shape(XFACE))
    gy = np.zeros(g.shape(YFACE))
    gx[1:-1] = (f.values[1:] - f.values[:-1]) / g.dx
    gy[:, 1:-1] = (f.values[:, 1:] - f.values[:, :-1]) / g.dy
    return VectorField(g, gx, gy)


def div(v: VectorField) -> ScalarField:
    """Face-to-center divergence."""
    g = v.grid
    d = (v.x[1:] - v.x[:-1]) / g.dx + (v.y[:, 1:] - v.y[:, :-1]) / g.dy
    return ScalarField(g, d, CENTER)


def _node_derivative(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Derivative of a staggered array onto the node positions between its samples.

    Interior nodes use the centered difference; the two end nodes use the
    one-sided second-order formula through the three nearest samples.
    """
    a = np.moveaxis(a, axis, 0)
    out = np.empty((a.shape[0] + 1,) + a.shape[1:])
    out[1:-1] = (a[1:] - a[:-1]) / h
    out[0] = (-2.0 * a[0] + 3.0 * a[1] - a[2]) / h
    out[-1] = (2.0 * a[-1] - 3.0 * a[-2] + a[-3]) / h
    return np.moveaxis(out, 0, axis)


def curl2d(v: VectorField) -> ScalarField:
    """Scalar curl ``d1 v2 - d2 v1`` at nodes."""
    g = v.grid
    w = _node_derivative(v.y, g.dx, 0) - _node_derivative(v.x, g.dy, 1)
    return ScalarField(g, w, NODE)


def grad_perp(psi: ScalarField) -> VectorField:
    """``(d2 psi, -d1 psi)`` from a node potential; discretely divergence free."""
    if psi.location != NODE:
        raise ValueError("grad_perp expects a node-located potential")
    g = psi.grid
    p = psi.values
    return VectorField(g, (p[:, 1:] - p[:, :-1]) / g.dy, -(p[1:] - p[:-1]) / g.dx)


def symgrad(u: VectorField) -> TensorField:
    """Symmetric gradient; the shear entry is formed at nodes and averaged to cells."""
    g = u.grid
    xx = (u.x[1:] - u.x[:-1]) / g.dx
    yy = (u.y[:, 1:] - u.y[:, :-1]) / g.dy
    s = 0.5 * (_node_derivative(u.x, g.dy, 1) + _node_derivative(u.y, g.dx, 0))
    xy = 0.25 * (s[:-1, :-1] + s[1:, :-1] + s[:-1, 1:] + s[1:, 1:])
    return TensorField(g, xx, yy, xy)


def laplacian(f: ScalarField) -> ScalarField:
    """Five-point Laplacian.

    Cell fields use the homogeneous Neumann closure so that the result equals
    ``div(grad(f))``.  Node fields use the Dirichlet interior stencil and
    return zero on boundary nodes.
    """
    g = f.grid
    v = f.values
    if f.location == CENTER:
        p = np.pad(v, 1, mode="edge")
        out = (p[2:, 1:-1] - 2 * v + p[:-2, 1:-1]) / g.dx**2 + (
            p[1:-1, 2:] - 2 * v + p[1:-1, :-2]
        ) / g.dy**2
        return ScalarField(g, out, CENTER)
    out = np.zeros_like(v)
    out[1:-1, 1:-1] = (v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / g.dx**2 + (
        v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2]
    ) / g.dy**2
    return ScalarField(g, out, NODE)


def rigid_field(grid: Grid, V, w: float, center) -> VectorField:
    """Velocity ``V + w x (x - X)`` sampled on the faces."""
    X, Y = center
    return VectorField.from_function(
        grid,
        lambda x, y: V[0] - w * (y - Y),
        lambda x, y: V[1] + w * (x - X),
    )


# --- snapshot text format -------------------------------------------------

SNAPSHOT_VERSION = "mhdfsi-snapshot 1"


def write_snapshot(path, grid: Grid, values: np.ndarray, location: str) -> None:
    """Write one array as a text snapshot (header then one row per ``i``)."""
    if location not in LOCATIONS:
        raise ValueError(f"unknown location {location!r}")
    values = _check(values, grid.shape(location), "snapshot")
    header = "\n".join(
        [
            SNAPSHOT_VERSION,
            f"nx {grid.nx}",
            f"ny {grid.ny}",
            f"dx {grid.dx:.17g}",
            f"dy {grid.dy:.17g}",
            f"origin {grid.origin[0]:.17g} {grid.origin[1]:.17g}",
            f"location {location}",
        ]
    )
    np.savetxt(path, values, fmt="%.17g", header=header, comments="# ")


def read_snapshot(path) -> tuple[Grid, np.ndarray, str]:
    """Inverse of :func:`write_snapshot`."""
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            parts = line[1:].split()
            if len(parts) >= 2:
                meta[parts[0]] = parts[1:]
    grid = Grid(
        int(meta["nx"][0]),
        int(meta["ny"][0]),
        float(meta["dx"][0]),
        float(meta["dy"][0]),
        (float(meta["origin"][0]), float(meta["origin"][1])),
    )
    location = meta["location"][0]
    values = np.loadtxt(path, ndmin=2).reshape(grid.shape(location))
    return grid, values, location


def save_field(directory, name: str, field) -> list[Path]:
    """Write a scalar or vector field; vectors produce one file per component."""
    directory = Path(directory)
    if isinstance(field, ScalarField):
        p = directory / f"{name}.txt"
        write_snapshot(p, field.grid, field.values, field.location)
        return [p]
    px, py = directory / f"{name}_x.txt", directory / f"{name}_y.txt"
    write_snapshot(px, field.grid, field.x, XFACE)
    write_snapshot(py, field.grid, field.y, YFACE)
    return [px, py]
