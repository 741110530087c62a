"""Implicit (Rothe) step of the induction equation in potential form.

With ``B = grad_perp(psi)`` and ``omega = curl B = -L psi`` (``L`` the
Dirichlet node Laplacian, ``psi = 0`` on the boundary), one step solves

    (psi - psi_prev)/dt = -omega/(sigma mu) + eps L omega
                          - (eps/mu^2) w^2 omega - u.grad(psi_prev) + J/sigma

on interior nodes, where ``w`` is the Picard coefficient converging to
``omega``.  Multiplying by ``-L`` gives a symmetric positive definite system
that is diagonalized by the type-I sine transform when ``w = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft
from scipy.sparse.linalg import LinearOperator, cg

from ..fields import NODE, Grid, ScalarField, VectorField
from .params import MagneticState, SchemeParams


class SolverError(RuntimeError):
    """A linear or nonlinear solve failed to converge."""


def interior(a: np.ndarray) -> np.ndarray:
    return a[1:-1, 1:-1]


def embed(a: np.ndarray) -> np.ndarray:
    """Pad an interior-node array with the zero boundary ring."""
    return np.pad(a, 1)


def lap(p: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Dirichlet five-point Laplacian of an interior-node array."""
    q = np.pad(p, 1)
    return (q[2:, 1:-1] - 2 * p + q[:-2, 1:-1]) / dx**2 + (q[1:-1, 2:] - 2 * p + q[1:-1, :-2]) / dy**2


def lap_eigenvalues(grid: Grid) -> np.ndarray:
    """Eigenvalues of :func:`lap` in the sine basis (all negative)."""
    p = np.arange(1, grid.nx)
    q = np.arange(1, grid.ny)
    lx = -4.0 / grid.dx**2 * np.sin(p * np.pi / (2 * grid.nx)) ** 2
    ly = -4.0 / grid.dy**2 * np.sin(q * np.pi / (2 * grid.ny)) ** 2
    return lx[:, None] + ly[None, :]


def dst_solve(r: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Solve ``S x = r`` for an operator diagonal in the sine basis with eigenvalues ``symbol``."""
    return fft.idstn(fft.dstn(r, type=1, norm="ortho") / symbol, type=1, norm="ortho")


def vorticity(psi: np.ndarray, grid: Grid) -> np.ndarray:
    """``omega = -L psi`` on the full node array (zero on the boundary ring)."""
    return embed(-lap(interior(psi), grid.dx, grid.dy))


def transport(u: VectorField, psi: np.ndarray) -> np.ndarray:
    """``u . grad psi`` at interior nodes from node-averaged velocity and gradient."""
    g = u.grid
    u1 = 0.5 * (u.x[1:-1, :-1] + u.x[1:-1, 1:])
    u2 = 0.5 * (u.y[:-1, 1:-1] + u.y[1:, 1:-1])
    gx = (psi[1:] - psi[:-1]) / g.dx
    gy = (psi[:, 1:] - psi[:, :-1]) / g.dy
    g1 = 0.5 * (gx[:-1, 1:-1] + gx[1:, 1:-1])
    g2 = 0.5 * (gy[1:-1, :-1] + gy[1:-1, 1:])
    return u1 * g1 + u2 * g2


def lorentz_force(mag: MagneticState, mu: float) -> VectorField:
    """``(1/mu) curl B x B = (omega/mu) grad psi`` on the velocity faces.

    This is the exact velocity-gradient of ``(1/mu) sum omega (u . grad psi)``,
    so its work on any velocity equals the transport term of the induction step.
    """
    psi = mag.psi.values
    g = mag.psi.grid
    w = vorticity(psi, g)
    gx = (psi[1:] - psi[:-1]) / g.dx
    gy = (psi[:, 1:] - psi[:, :-1]) / g.dy
    q1 = np.zeros_like(psi)
    q2 = np.zeros_like(psi)
    q1[1:-1, 1:-1] = interior(w) * 0.5 * (gx[:-1, 1:-1] + gx[1:, 1:-1])
    q2[1:-1, 1:-1] = interior(w) * 0.5 * (gy[1:-1, :-1] + gy[1:-1, 1:])
    fx = np.zeros(g.shape("xface"))
    fy = np.zeros(g.shape("yface"))
    fx[1:-1] = (q1[1:-1, :-1] + q1[1:-1, 1:]) / (2 * mu)
    fy[:, 1:-1] = (q2[:-1, 1:-1] + q2[1:, 1:-1]) / (2 * mu)
    return VectorField(g, fx, fy)


def magnetic_energy(psi: np.ndarray, grid: Grid, mu: float) -> float:
    gx = (psi[1:] - psi[:-1]) / grid.dx
    gy = (psi[:, 1:] - psi[:, :-1]) / grid.dy
    return float((np.sum(gx**2) + np.sum(gy**2)) * grid.cell_area / (2 * mu))


@dataclass(frozen=True)
class InductionReport:
    """Energy terms of one induction step (rates, i.e. per unit time).

    Attributes:
        dissipation: ``(1/(sigma mu^2)) |omega|^2``.
        regularizers: ``(eps/mu)|grad omega|^2 + (eps/mu^3) w^2 omega^2``.
        source: ``(1/(sigma mu)) J omega``.
        mixed: ``-(1/mu) (u . grad psi_prev) omega``.
        numerical: ``|B - B_prev|^2 / (2 mu dt)``, the implicit-Euler dissipation.
        picard_iterations: Nonlinear iterations used (0 for a linear step).
        picard_converged: False when the lagged fallback was taken.
    """

    dissipation: float
    regularizers: float
    source: float
    mixed: float
    numerical: float
    picard_iterations: int
    picard_converged: bool


def _cg(apply, rhs, precond, x0, tol, n):
    op = LinearOperator((n, n), matvec=apply, dtype=float)
    m = LinearOperator((n, n), matvec=precond, dtype=float)
    x, info = cg(op, rhs, x0=x0, rtol=tol, atol=0.0, maxiter=10 * n, M=m)
    if info != 0:
        res = np.linalg.norm(apply(x) - rhs) / max(np.linalg.norm(rhs), 1e-300)
        raise SolverError(f"induction CG did not converge (relative residual {res:.3e})")
    return x


def induction_step(
    mag: MagneticState,
    u: VectorField,
    J: Optional[ScalarField],
    params: SchemeParams,
    nonlinear: bool = True,
) -> tuple[MagneticState, InductionReport]:
    """Advance the potential by one outer step ``params.dt``.

    Args:
        mag: Previous magnetic state.
        u: End-of-interval velocity used in the transport term.
        J: Imposed out-of-plane current at nodes, or ``None``.
        params: Scheme coefficients.
        nonlinear: Include the ``eps |curl B|^2 curl B`` term.

    Returns:
        The new state and its :class:`InductionReport`.
    """
    g = mag.psi.grid
    dx, dy, dt = g.dx, g.dy, params.dt
    s, mu, eps = params.sigma, params.mu, params.eps
    psi0 = mag.psi.values
    T = transport(u, psi0)
    Jint = np.zeros_like(T) if J is None else interior(J.values)
    rhs_strong = interior(psi0) / dt - T + Jint / s

    lam = lap_eigenvalues(g)
    base = 1.0 / dt - lam / (s * mu) + eps * lam**2
    c4 = eps / mu**2 if nonlinear else 0.0

    psi = dst_solve(rhs_strong, base)
    w_used = np.zeros_like(psi)
    iters, converged = 0, True
    if c4 > 0:
        shape = psi.shape
        rhs = (-lap(rhs_strong, dx, dy)).ravel()

        def precond(r):
            return dst_solve(r.reshape(shape), -lam * base).ravel()

        def solve(w_coef, x0):
            w2 = w_coef**2

            def apply(x):
                lx = lap(x.reshape(shape), dx, dy)
                llx = lap(lx, dx, dy)
                y = -lx / dt + llx / (s * mu) - eps * lap(llx, dx, dy) + c4 * lap(w2 * lx, dx, dy)
                return y.ravel()

            return _cg(apply, rhs, precond, x0.ravel(), params.cg_tol, psi.size).reshape(shape)

        lagged = interior(vorticity(psi0, g))
        w_used = lagged
        converged = False
        for iters in range(1, params.picard_max + 1):
            new = solve(w_used, psi)
            change = np.max(np.abs(new - psi))
            psi = new
            if change <= params.picard_tol * max(np.max(np.abs(psi)), 1e-300):
                converged = True
                break
            w_used = -lap(psi, dx, dy)
        if not converged:
            w_used = lagged
            psi = solve(w_used, psi)
    omega = -lap(psi, dx, dy)
    area = g.cell_area
    gwx = np.diff(embed(omega), axis=0) / dx
    gwy = np.diff(embed(omega), axis=1) / dy
    grad_w2 = float((np.sum(gwx**2) + np.sum(gwy**2)) * area)
    full = embed(psi)
    report = InductionReport(
        dissipation=float(np.sum(omega**2) * area / (s * mu**2)),
        regularizers=eps / mu * grad_w2 + c4 / mu * float(np.sum(w_used**2 * omega**2) * area),
        source=float(np.sum(Jint * omega) * area / (s * mu)),
        mixed=-float(np.sum(T * omega) * area / mu),
        numerical=magnetic_energy(full - psi0, g, mu) / dt,
        picard_iterations=iters,
        picard_converged=converged,
    )
    return MagneticState(ScalarField(g, full, NODE), mag.k + 1), report
