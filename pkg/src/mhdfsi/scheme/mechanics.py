"""Mechanical substep: regularized compressible Navier-Stokes on the MAC grid.

Continuity is solved implicitly with upwind fluxes and the ``eps`` density
diffusion, so the density stays nonnegative and total mass is conserved by
construction.  Momentum uses explicit upwind convection with dual mass fluxes
built from the same primal fluxes, implicit penalized viscosity, the lagged
``eps |u|^2 u`` term and the pressure of the new density.  Both are coupled by
a fixed-point iteration on the transporting velocity.  With these choices the
discrete kinetic plus internal energy obeys the energy inequality under the
convective CFL condition checked here.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from ..fields import CENTER, NODE, Grid, ScalarField, VectorField
from ..geometry import chi_field, penalty_h
from .induction import SolverError
from .params import MechanicalState, SchemeParams


class CFLError(RuntimeError):
    """The convective step restriction is violated."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


def pressure(rho, a: float, gamma: float, alpha: float = 0.0, beta: float = 5.0):
    """``a rho^gamma + alpha rho^beta`` for nonnegative density."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("negative density in pressure law")
    p = a * rho**gamma
    if alpha:
        p = p + alpha * rho**beta
    return p


def pressure_field(rho: ScalarField, a: float, gamma: float) -> ScalarField:
    return rho.with_values(pressure(rho.values, a, gamma))


def variable_viscosity(chi, nu: float, lam: float, m: float):
    """Penalized coefficients ``(nu + m H(chi), lam + m H(chi))``."""
    if m < 0:
        raise ValueError("penalization strength must be nonnegative")
    h = m * penalty_h(np.asarray(chi, dtype=float))
    return nu + h, lam + h


# --- index bookkeeping and strain operators ---------------------------------


@dataclass(frozen=True)
class Layout:
    grid: Grid
    idx1: np.ndarray  # (nx+1, ny), -1 on walls
    idx2: np.ndarray  # (nx, ny+1), -1 on walls
    n1: int
    n: int
    gxx: sp.csr_matrix
    gyy: sp.csr_matrix
    gxy: sp.csr_matrix

    def pack(self, u: VectorField) -> np.ndarray:
        return np.concatenate([u.x[1:-1].ravel(), u.y[:, 1:-1].ravel()])

    def unpack(self, v: np.ndarray) -> VectorField:
        g = self.grid
        x = np.zeros(g.shape("xface"))
        y = np.zeros(g.shape("yface"))
        x[1:-1] = v[: self.n1].reshape(g.nx - 1, g.ny)
        y[:, 1:-1] = v[self.n1 :].reshape(g.nx, g.ny - 1)
        return VectorField(g, x, y)


def _coo(rows, cols, vals, shape):
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    keep = cols >= 0
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=shape)


@lru_cache(maxsize=16)
def layout(grid: Grid) -> Layout:
    nx, ny, dx, dy = grid.nx, grid.ny, grid.dx, grid.dy
    n1 = (nx - 1) * ny
    n = n1 + nx * (ny - 1)
    idx1 = -np.ones((nx + 1, ny), dtype=int)
    idx1[1:-1] = np.arange(n1).reshape(nx - 1, ny)
    idx2 = -np.ones((nx, ny + 1), dtype=int)
    idx2[:, 1:-1] = n1 + np.arange(nx * (ny - 1)).reshape(nx, ny - 1)

    cells = np.arange(nx * ny).reshape(nx, ny)
    c = cells.ravel()
    gxx = _coo(
        [c, c], [idx1[1:].ravel(), idx1[:-1].ravel()],
        [np.full(c.size, 1 / dx), np.full(c.size, -1 / dx)], (nx * ny, n),
    )
    gyy = _coo(
        [c, c], [idx2[:, 1:].ravel(), idx2[:, :-1].ravel()],
        [np.full(c.size, 1 / dy), np.full(c.size, -1 / dy)], (nx * ny, n),
    )

    nodes = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    rows, cols, vals = [], [], []
    # d(u1)/dy at nodes; no-slip ghosts on the bottom and top walls
    rows += [nodes[:, 1:-1].ravel(), nodes[:, 1:-1].ravel()]
    cols += [idx1[:, 1:].ravel(), idx1[:, :-1].ravel()]
    vals += [np.full(idx1[:, 1:].size, 0.5 / dy), np.full(idx1[:, 1:].size, -0.5 / dy)]
    rows += [nodes[:, 0], nodes[:, -1]]
    cols += [idx1[:, 0], idx1[:, -1]]
    vals += [np.full(nx + 1, 1.0 / dy), np.full(nx + 1, -1.0 / dy)]
    # d(u2)/dx at nodes; no-slip ghosts on the left and right walls
    rows += [nodes[1:-1, :].ravel(), nodes[1:-1, :].ravel()]
    cols += [idx2[1:, :].ravel(), idx2[:-1, :].ravel()]
    vals += [np.full(idx2[1:].size, 0.5 / dx), np.full(idx2[1:].size, -0.5 / dx)]
    rows += [nodes[0, :], nodes[-1, :]]
    cols += [idx2[0, :], idx2[-1, :]]
    vals += [np.full(ny + 1, 1.0 / dx), np.full(ny + 1, -1.0 / dx)]
    gxy = _coo(rows, cols, vals, ((nx + 1) * (ny + 1), n))
    return Layout(grid, idx1, idx2, n1, n, gxx, gyy, gxy)


def viscous_matrix(lay: Layout, nu_c, lam_c, nu_n) -> sp.csr_matrix:
    """``G^T W G`` realizing ``int 2 nu |D(u)|^2 + lam |div u|^2``."""
    g = lay.grid
    wc = g.cell_area
    wn = g.weights(NODE).ravel()
    dv = lay.gxx + lay.gyy
    nu_c = np.ravel(nu_c)
    return (
        lay.gxx.T @ sp.diags(2 * nu_c * wc) @ lay.gxx
        + lay.gyy.T @ sp.diags(2 * nu_c * wc) @ lay.gyy
        + dv.T @ sp.diags(np.ravel(lam_c) * wc) @ dv
        + lay.gxy.T @ sp.diags(4 * np.ravel(nu_n) * wn) @ lay.gxy
    ).tocsr()


# --- fluxes -------------------------------------------------------------------


def primal_fluxes(rho: np.ndarray, u: VectorField, eps: float):
    """Integrated mass fluxes ``|face| (rho_upwind u - eps d rho)`` through all faces."""
    g = u.grid
    fx = np.zeros(g.shape("xface"))
    fy = np.zeros(g.shape("yface"))
    v = u.x[1:-1]
    fx[1:-1] = g.dy * (np.where(v > 0, rho[:-1], rho[1:]) * v - eps * (rho[1:] - rho[:-1]) / g.dx)
    v = u.y[:, 1:-1]
    fy[:, 1:-1] = g.dx * (np.where(v > 0, rho[:, :-1], rho[:, 1:]) * v - eps * (rho[:, 1:] - rho[:, :-1]) / g.dy)
    return fx, fy


def continuity_matrix(u: VectorField, eps: float, dt: float) -> sp.csc_matrix:
    g = u.grid
    nx, ny = g.nx, g.ny
    cells = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, vals = [cells.ravel()], [cells.ravel()], [np.full(nx * ny, g.cell_area / dt)]

    def add(k, l, v, face, h):
        vp, vm = np.maximum(v, 0.0) * face, np.minimum(v, 0.0) * face
        d = eps * face / h
        k, l = k.ravel(), l.ravel()
        vp, vm = vp.ravel(), vm.ravel()
        rows.extend([k, k, l, l])
        cols.extend([k, l, k, l])
        vals.extend([vp + d, vm - d, -vp - d, -vm + d])

    add(cells[:-1], cells[1:], u.x[1:-1], g.dy, g.dx)
    add(cells[:, :-1], cells[:, 1:], u.y[:, 1:-1], g.dx, g.dy)
    return sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nx * ny, nx * ny)
    )


def solve_continuity(rho: np.ndarray, u: VectorField, eps: float, dt: float) -> np.ndarray:
    g = u.grid
    m = continuity_matrix(u, eps, dt)
    out = splu(m).solve(rho.ravel() * g.cell_area / dt).reshape(rho.shape)
    return out


@dataclass(frozen=True)
class DualFluxes:
    """Mass fluxes through the four dual faces of each velocity unknown (outward positive)."""

    east: np.ndarray
    west: np.ndarray
    north: np.ndarray
    south: np.ndarray


def dual_fluxes(fx: np.ndarray, fy: np.ndarray):
    """Dual-cell fluxes for the x- and y-velocity unknowns (half sums of primal fluxes)."""
    # x-velocity at face (i, j), i = 1..nx-1: dual cell between cell centers i-1 and i
    cx = 0.5 * (fx[:-1] + fx[1:])  # flux through cell-center lines, per cell (nx, ny)
    ex, wx = cx[1:], -cx[:-1]
    ny_ = 0.5 * (fy[:-1] + fy[1:])  # (nx-1, ny+1): horizontal dual faces for x-unknowns
    nx_, sx = ny_[:, 1:], -ny_[:, :-1]
    xdual = DualFluxes(ex, wx, nx_, sx)
    # y-velocity at face (i, j), j = 1..ny-1
    cy = 0.5 * (fy[:, :-1] + fy[:, 1:])  # (nx, ny)
    ny2, sy2 = cy[:, 1:], -cy[:, :-1]
    vx = 0.5 * (fx[:, :-1] + fx[:, 1:])  # (nx+1, ny-1): vertical dual faces for y-unknowns
    ey2, wy2 = vx[1:], -vx[:-1]
    ydual = DualFluxes(ey2, wy2, ny2, sy2)
    return xdual, ydual


def convection_terms(u: VectorField, xd: DualFluxes, yd: DualFluxes):
    """Return ``(conv_x, conv_y, inflow_x, inflow_y)`` on the unknown blocks."""
    ux = u.x  # (nx+1, ny)
    s = ux[1:-1]
    east = ux[2:]
    west = ux[:-2]
    pad = np.pad(ux, ((0, 0), (1, 1)))  # zero neighbours beyond the walls
    north = pad[1:-1, 2:]
    south = pad[1:-1, :-2]
    conv_x = (
        np.minimum(xd.east, 0) * (east - s)
        + np.minimum(xd.west, 0) * (west - s)
        + np.minimum(xd.north, 0) * (north - s)
        + np.minimum(xd.south, 0) * (south - s)
    )
    in_x = -(np.minimum(xd.east, 0) + np.minimum(xd.west, 0) + np.minimum(xd.north, 0) + np.minimum(xd.south, 0))

    uy = u.y  # (nx, ny+1)
    s = uy[:, 1:-1]
    north = uy[:, 2:]
    south = uy[:, :-2]
    pad = np.pad(uy, ((1, 1), (0, 0)))
    east = pad[2:, 1:-1]
    west = pad[:-2, 1:-1]
    conv_y = (
        np.minimum(yd.east, 0) * (east - s)
        + np.minimum(yd.west, 0) * (west - s)
        + np.minimum(yd.north, 0) * (north - s)
        + np.minimum(yd.south, 0) * (south - s)
    )
    in_y = -(np.minimum(yd.east, 0) + np.minimum(yd.west, 0) + np.minimum(yd.north, 0) + np.minimum(yd.south, 0))
    return conv_x, conv_y, in_x, in_y


def face_masses(rho: np.ndarray, grid: Grid):
    a = grid.cell_area
    return 0.5 * (rho[:-1] + rho[1:]) * a, 0.5 * (rho[:, :-1] + rho[:, 1:]) * a


def kinetic_energy(rho: np.ndarray, u: VectorField) -> float:
    mx, my = face_masses(rho, u.grid)
    return float(0.5 * (np.sum(mx * u.x[1:-1] ** 2) + np.sum(my * u.y[:, 1:-1] ** 2)))


def _potential_derivative(rho, p: SchemeParams):
    out = p.a * p.gamma / (p.gamma - 1) * rho ** (p.gamma - 1)
    if p.alpha:
        out = out + p.alpha * p.beta / (p.beta - 1) * rho ** (p.beta - 1)
    return out


def _sound_speed2(rho, p: SchemeParams):
    out = p.a * p.gamma * rho ** (p.gamma - 1)
    if p.alpha:
        out = out + p.alpha * p.beta * rho ** (p.beta - 1)
    return out


@dataclass(frozen=True)
class MechanicalReport:
    """Time-integrated energy terms of the mechanical update.

    All entries are integrals over the substeps, i.e. ``sum dt_inner * rate``.
    """

    dissipation: float = 0.0
    regularizers: float = 0.0
    gravity_work: float = 0.0
    lorentz_work: float = 0.0
    iterations: int = 0

    def __add__(self, o: "MechanicalReport") -> "MechanicalReport":
        return MechanicalReport(
            self.dissipation + o.dissipation,
            self.regularizers + o.regularizers,
            self.gravity_work + o.gravity_work,
            self.lorentz_work + o.lorentz_work,
            self.iterations + o.iterations,
        )


@dataclass(frozen=True)
class Coefficients:
    """Penalized viscosities and the viscous matrix for a fixed body configuration."""

    nu_c: np.ndarray
    lam_c: np.ndarray
    nu_n: np.ndarray
    A: sp.csr_matrix


def coefficients(state: MechanicalState, params: SchemeParams) -> Coefficients:
    g = state.rho.grid
    chi_c = chi_field(state.bodies, g, CENTER)
    chi_n = chi_field(state.bodies, g, NODE)
    nu_c, lam_c = variable_viscosity(chi_c, params.nu, params.lam, params.m)
    nu_n, _ = variable_viscosity(chi_n, params.nu, params.lam, params.m)
    return Coefficients(nu_c, lam_c, nu_n, viscous_matrix(layout(g), nu_c, lam_c, nu_n))


def _check_cfl(u: VectorField, in_x, in_y, mx, my, dt: float) -> None:
    g = u.grid
    h = min(g.dx, g.dy)
    umax = u.max_abs()
    if umax * dt > 0.5 * h:
        raise CFLError(
            f"CFL violated: |u| dt = {umax * dt:.3e} > 0.5 h = {0.5 * h:.3e}",
            0.5 * h / umax,
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        rx = np.where(in_x > 0, in_x * dt / mx, 0.0)
        ry = np.where(in_y > 0, in_y * dt / my, 0.0)
    worst = max(np.max(rx, initial=0.0), np.max(ry, initial=0.0))
    if worst > 1.0:
        raise CFLError(f"dual mass CFL violated (ratio {worst:.3e} > 1)", dt / worst)


def mechanical_substep(
    state: MechanicalState,
    lorentz: VectorField | None,
    params: SchemeParams,
    dt: float,
    gravity=(0.0, 0.0),
    coef: Coefficients | None = None,
) -> tuple[MechanicalState, MechanicalReport]:
    """One implicit-in-density, semi-implicit-in-velocity mechanical update.

    Args:
        state: Current density, velocity and bodies.
        lorentz: Force density from the lagged magnetic field, or ``None``.
        params: Scheme coefficients.
        dt: Substep length.
        gravity: Constant acceleration vector.
        coef: Precomputed :class:`Coefficients` for the current bodies.

    Raises:
        CFLError: Convective restriction violated.
        SolverError: Fixed-point or linear solve did not converge.
    """
    g = state.rho.grid
    lay = layout(g)
    coef = coef or coefficients(state, params)
    rho0 = state.rho.values
    u0 = state.u
    eps = params.eps
    mx0, my0 = face_masses(rho0, g)
    u0v = lay.pack(u0)
    # lagged |u|^2 at each velocity unknown from the centered neighbours
    uc, vc = u0.at_centers()
    speed2 = uc**2 + vc**2
    s2 = np.concatenate([(0.5 * (speed2[:-1] + speed2[1:])).ravel(), (0.5 * (speed2[:, :-1] + speed2[:, 1:])).ravel()])
    area = g.cell_area
    fl = lay.pack(lorentz) if lorentz is not None else np.zeros(lay.n)
    grav = np.concatenate([np.full(lay.n1, gravity[0]), np.full(lay.n - lay.n1, gravity[1])])

    sound = float(np.sqrt(np.max(_sound_speed2(rho0, params), initial=0.0)))
    u_iter = u0
    x = u0v
    for it in range(1, params.coupling_max + 1):
        rho1 = solve_continuity(rho0, u_iter, eps, dt)
        # the continuity matrix is an M-matrix; only roundoff can go below zero
        rho1 = np.where((rho1 < 0) & (rho1 > -1e-14 * np.max(rho1, initial=0.0)), 0.0, rho1)
        fx, fy = primal_fluxes(rho1, u_iter, eps)
        xd, yd = dual_fluxes(fx, fy)
        cx, cy, inx, iny = convection_terms(u0, xd, yd)
        mx, my = face_masses(rho1, g)
        _check_cfl(u_iter, inx, iny, mx, my, dt)
        m = np.concatenate([mx.ravel(), my.ravel()])
        p = pressure(rho1, params.a, params.gamma, params.alpha, params.beta)
        gp = np.concatenate([((p[1:] - p[:-1]) / g.dx).ravel(), ((p[:, 1:] - p[:, :-1]) / g.dy).ravel()])
        rhs = m * u0v / dt - np.concatenate([cx.ravel(), cy.ravel()]) - area * gp + m * grav + area * fl
        diag_extra = m / dt + eps * area * s2
        A = (coef.A + sp.diags(diag_extra)).tocsr()
        d = A.diagonal()
        pre = sp.diags(1.0 / d)
        xnew, info = cg(A, rhs, x0=x, rtol=params.cg_tol, atol=0.0, maxiter=10 * lay.n, M=pre)
        if info != 0:
            res = np.linalg.norm(A @ xnew - rhs) / max(np.linalg.norm(rhs), 1e-300)
            raise SolverError(f"momentum CG did not converge (relative residual {res:.3e})")
        change = np.max(np.abs(xnew - x), initial=0.0)
        # sound speed bounds the velocity scale from below so resting states converge
        scale = max(np.max(np.abs(xnew), initial=0.0), np.max(np.abs(u0v), initial=0.0), sound)
        x = xnew
        u_iter = lay.unpack(x)
        if change <= params.coupling_tol * scale or scale == 0.0:
            break
    else:
        raise SolverError(
            f"density-velocity fixed point did not converge in {params.coupling_max} iterations "
            f"(last change {change:.3e})"
        )
    if np.min(rho1) < 0:
        raise ValueError(f"negative density {np.min(rho1):.3e}")

    visc = float(x @ (coef.A @ x))
    reg_u = float(eps * area * np.sum(s2 * x**2))
    dpsi = _potential_derivative(rho1, params)
    reg_rho = eps * (
        g.dy / g.dx * float(np.sum((dpsi[1:] - dpsi[:-1]) * (rho1[1:] - rho1[:-1])))
        + g.dx / g.dy * float(np.sum((dpsi[:, 1:] - dpsi[:, :-1]) * (rho1[:, 1:] - rho1[:, :-1])))
    )
    report = MechanicalReport(
        dissipation=dt * visc,
        regularizers=dt * (reg_u + reg_rho),
        gravity_work=dt * float(np.sum(m * grav * x)),
        lorentz_work=dt * float(area * np.sum(fl * x)),
        iterations=it,
    )
    new = MechanicalState(ScalarField(g, rho1, CENTER), u_iter, state.bodies, state.time + dt)
    return new, report
