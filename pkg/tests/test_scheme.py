import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mhdfsi.diagnostics import compute_ledger, mass, state_energies
from mhdfsi.fields import CENTER, NODE, Grid, ScalarField, VectorField
from mhdfsi.geometry import Disk, Isometry, RigidBodyState, rigidity_residual
from mhdfsi.scheme import (
    CFLError,
    InvalidParameters,
    MagneticState,
    MechanicalState,
    SchemeParams,
    mechanical_substep,
    pressure,
    step_coupled,
    variable_viscosity,
)
from mhdfsi.scheme.mechanics import coefficients, continuity_matrix, layout, solve_continuity, viscous_matrix


def grid(n=16):
    return Grid(n, n, 1 / n, 1 / n)


def smooth_velocity(g, amp=0.1):
    def fx(x, y):
        return amp * np.sin(np.pi * x) * np.sin(2 * np.pi * y)

    def fy(x, y):
        return -amp * np.sin(2 * np.pi * x) * np.sin(np.pi * y)

    return VectorField.from_function(g, fx, fy).with_zero_walls()


def random_velocity(g, rng, amp=0.1):
    return VectorField(g, amp * rng.normal(size=g.shape("xface")), amp * rng.normal(size=g.shape("yface"))).with_zero_walls()


def magnetic(g, amp=0.1):
    x, y = g.coords(NODE)
    psi = amp * np.sin(np.pi * x) * np.sin(np.pi * y)
    psi[0] = psi[-1] = 0
    psi[:, 0] = psi[:, -1] = 0
    return MagneticState(ScalarField(g, psi, NODE))


def test_pressure_examples():
    assert pressure(2.0, 1.0, 2.0) == pytest.approx(4.0)
    assert pressure(8.0, 1.0, 5 / 3) == pytest.approx(32.0)
    assert pressure(2.0, 1.0, 2.0, alpha=1.0, beta=5.0) == pytest.approx(36.0)
    with pytest.raises(ValueError):
        pressure(-1.0, 1.0, 2.0)


def test_variable_viscosity():
    nu, lam = variable_viscosity(np.array([-0.5, 0.0, 0.1]), 1.0, 0.5, 1000.0)
    np.testing.assert_allclose(nu, [1.0, 1.0, 2.0])
    np.testing.assert_allclose(lam, [0.5, 0.5, 1.5])
    with pytest.raises(ValueError):
        variable_viscosity(0.0, 1.0, 0.0, -1.0)


@pytest.mark.parametrize(
    "kw,msg",
    [
        (dict(gamma=1.4), "gamma > 3/2"),
        (dict(nu=-1.0), "nu > 0"),
        (dict(nu=1.0, lam=-2.0), "nu + lambda >= 0"),
        (dict(gamma=2.0, beta=2.0), "beta > max{4, gamma}"),
    ],
)
def test_params_rejected(kw, msg):
    with pytest.raises(InvalidParameters) as e:
        SchemeParams(**kw)
    assert any(msg in err for err in e.value.errors)


def test_eps_default_rule():
    p = SchemeParams(dt=0.02, eps=None)
    assert p.eps == 0.02
    assert p.metadata["eps_rule"] == "eps = dt"


def viscous_energy_loop(g, u, nu, lam):
    """Interior-supported fields only: ghost conventions do not enter."""
    e = 0.0
    a = g.cell_area
    for i in range(g.nx):
        for j in range(g.ny):
            d11 = (u.x[i + 1, j] - u.x[i, j]) / g.dx
            d22 = (u.y[i, j + 1] - u.y[i, j]) / g.dy
            e += a * (2 * nu * (d11**2 + d22**2) + lam * (d11 + d22) ** 2)
    for i in range(1, g.nx):
        for j in range(1, g.ny):
            d12 = 0.5 * ((u.x[i, j] - u.x[i, j - 1]) / g.dy + (u.y[i, j] - u.y[i - 1, j]) / g.dx)
            e += a * 4 * nu * d12**2
    return e


@pytest.mark.parametrize("seed", range(5))
def test_viscous_matrix_energy_oracle(seed):
    rng = np.random.default_rng(seed)
    g = Grid(8, 6, 0.1, 0.2)
    ux = np.zeros(g.shape("xface"))
    uy = np.zeros(g.shape("yface"))
    ux[2:-2, 1:-1] = rng.normal(size=(g.nx - 3, g.ny - 2))
    uy[1:-1, 2:-2] = rng.normal(size=(g.nx - 2, g.ny - 3))
    u = VectorField(g, ux, uy)
    nu, lam = 0.7, 0.3
    lay = layout(g)
    A = viscous_matrix(lay, np.full(g.shape(CENTER), nu), np.full(g.shape(CENTER), lam), np.full(g.shape(NODE), nu))
    x = lay.pack(u)
    assert x @ (A @ x) == pytest.approx(viscous_energy_loop(g, u, nu, lam), rel=1e-12)


def test_viscous_matrix_symmetric_psd():
    g = Grid(6, 5, 0.2, 0.25)
    rng = np.random.default_rng(0)
    lay = layout(g)
    A = viscous_matrix(lay, rng.uniform(0.1, 2, g.shape(CENTER)), rng.uniform(-0.1, 1, g.shape(CENTER)), rng.uniform(0.1, 2, g.shape(NODE))).toarray()
    np.testing.assert_allclose(A, A.T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(A)) > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.0, 0.05), st.floats(1e-3, 0.05))
def test_continuity_conserves_and_stays_positive(seed, eps, dt):
    rng = np.random.default_rng(seed)
    g = grid(8)
    rho = rng.uniform(0.0, 2.0, g.shape(CENTER))
    rho[rng.uniform(size=rho.shape) < 0.2] = 0.0
    u = random_velocity(g, rng, 1.0)
    new = solve_continuity(rho, u, eps, dt)
    assert abs(new.sum() - rho.sum()) <= 1e-12 * max(rho.sum(), 1.0)
    assert new.min() >= -1e-14 * new.max()


def test_continuity_is_m_matrix():
    rng = np.random.default_rng(3)
    g = grid(6)
    M = continuity_matrix(random_velocity(g, rng, 1.0), 0.01, 0.1).toarray()
    off = M - np.diag(np.diag(M))
    assert np.all(off <= 0)
    np.testing.assert_allclose(M.sum(axis=0), g.cell_area / 0.1, rtol=1e-12)


def test_rest_state_is_fixed_point():
    g = grid()
    st0 = MechanicalState(ScalarField(g, np.full(g.shape(CENTER), 1.3)), VectorField.zeros(g))
    p = SchemeParams(dt=0.01, eps=0.01)
    new, rep = mechanical_substep(st0, None, p, p.dt)
    assert new.u.max_abs() <= 1e-15
    np.testing.assert_allclose(new.rho.values, 1.3, rtol=1e-14)
    assert rep.dissipation <= 1e-28


def test_all_zero_is_fixed_point():
    g = grid()
    mech = MechanicalState(ScalarField(g, np.zeros(g.shape(CENTER))), VectorField.zeros(g))
    mag = MagneticState(ScalarField(g, np.zeros(g.shape(NODE)), NODE))
    p = SchemeParams(dt=0.01, eps=0.01)
    m1, g1, rep = step_coupled(mech, mag, p)
    assert not np.any(m1.rho.values) and m1.u.max_abs() == 0 and not np.any(g1.psi.values)
    ledger = compute_ledger((mech, mag), (m1, g1), p, p.dt, rep)
    assert ledger.slack == 0.0


def test_gravity_accelerates_downward():
    g = grid()
    mech = MechanicalState(ScalarField(g, np.ones(g.shape(CENTER))), VectorField.zeros(g))
    p = SchemeParams(dt=0.001, eps=0.0, nu=0.01)
    new, rep = mechanical_substep(mech, None, p, p.dt, gravity=(0.0, -1.0))
    # far from the walls the fluid is in free fall over the first step
    assert new.u.y[g.nx // 2, g.ny // 2] == pytest.approx(-p.dt, rel=1e-3)
    assert rep.gravity_work > 0


def test_cfl_violation_raises():
    g = grid()
    u = VectorField.from_function(g, lambda x, y: 0 * x + 5.0, lambda x, y: 0 * x).with_zero_walls()
    mech = MechanicalState(ScalarField(g, np.ones(g.shape(CENTER))), u)
    with pytest.raises(CFLError) as e:
        mechanical_substep(mech, None, SchemeParams(dt=0.1), 0.1)
    assert e.value.suggested_dt < 0.1


@pytest.mark.parametrize("eps", [0.0, 0.005])
def test_coupled_energy_inequality_and_mass(eps):
    g = grid()
    x, y = g.coords(CENTER)
    rho = ScalarField(g, 1.0 + 0.3 * np.exp(-((x - 0.4) ** 2 + (y - 0.6) ** 2) / 0.02))
    mech = MechanicalState(rho, smooth_velocity(g))
    mag = magnetic(g, 0.2)
    p = SchemeParams(dt=0.005, eps=eps, nu=0.1, sigma=2.0)
    e0 = state_energies(mech, mag, p).total
    J = ScalarField(g, 0.3 * np.ones(g.shape(NODE)), NODE)
    for _ in range(10):
        m0 = mass(mech)
        new_mech, new_mag, rep = step_coupled(mech, mag, p, (0.0, -1.0), J)
        led = compute_ledger((mech, mag), (new_mech, new_mag), p, p.dt, rep)
        assert led.slack <= 1e-8 * e0
        assert led.dissipation >= 0
        assert abs(mass(new_mech) - m0) <= 1e-10 * m0
        mech, mag = new_mech, new_mag


def test_pinned_velocity_leaves_fluid():
    g = grid()
    u = smooth_velocity(g)
    mech = MechanicalState(ScalarField(g, np.ones(g.shape(CENTER))), u)
    p = SchemeParams(dt=0.01, eps=0.0, pin_velocity=True)
    new, _, rep = step_coupled(mech, magnetic(g), p)
    assert new.u is u and new.time == pytest.approx(0.01)
    assert rep.mechanical.dissipation == 0


def test_coefficients_follow_bodies():
    g = grid()
    body = RigidBodyState(0, Disk(0.25), Isometry.from_angle(0.0, (0.5, 0.5)), (0.0, 0.0), 0.0, 0.2)
    mech = MechanicalState(ScalarField(g, np.ones(g.shape(CENTER))), VectorField.zeros(g), (body,))
    c = coefficients(mech, SchemeParams(m=1e3, nu=1.0))
    assert c.nu_c.max() > 1.0 + 1e3 * 0.2**3
    assert c.nu_c.min() == 1.0


def spin(m, steps=3):
    g = Grid(32, 32, 1 / 32, 1 / 32)
    body = RigidBodyState(0, Disk(0.25), Isometry.from_angle(0.0, (0.5, 0.5)), (0.0, 0.0), 1.0, 0.1)
    xs, ys = g.coords("xface")
    xv, yv = g.coords("yface")
    ux = np.where(body.chi(xs, ys) > 0, -(ys - 0.5), 0.0)
    uy = np.where(body.chi(xv, yv) > 0, xv - 0.5, 0.0)
    mech = MechanicalState(ScalarField(g, np.ones(g.shape(CENTER))), VectorField(g, ux, uy).with_zero_walls(), (body,))
    mag = MagneticState(ScalarField(g, np.zeros(g.shape(NODE)), NODE))
    p = SchemeParams(dt=0.01, eps=0.0, nu=0.05, m=m, delta=0.1)
    for _ in range(steps):
        mech, mag, _ = step_coupled(mech, mag, p)
    return rigidity_residual(mech.u, mech.bodies[0], erosion=0.1)


def test_penalization_improves_rigidity():
    assert spin(1e4) < spin(1e2) < spin(1.0)
