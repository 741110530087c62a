import numpy as np
import pytest
import sympy

from mhdfsi.pillbox import (
    NormalCase,
    Quadrature,
    TangentialCase,
    X,
    Y,
    Z,
    CurvedCylinder,
    CurvedRectangle,
    circulation,
    enclosed_charge,
    enclosed_current,
    flux,
    normal_defect,
    normal_study,
    quadratic_study,
    rate_study,
    scalar_field,
    tangential_defect,
    tangential_study,
    vector_field,
    zero_jump_studies,
    zero_scalar,
)

CURVED = CurvedRectangle(0.8 * X**2 + 0.3 * X**3, 0.2, 0.1)
CURVED_CYL = CurvedCylinder(0.5 * X**2 - 0.2 * X * Z + 0.3 * Z**2, 0.2, 0.1)


def test_geometry_requires_tangent_at_origin():
    with pytest.raises(ValueError):
        CurvedRectangle(X, 0.1, 0.1)
    with pytest.raises(ValueError):
        CurvedCylinder(1 + X**2, 0.1, 0.1)
    with pytest.raises(ValueError):
        CurvedRectangle(X**2, 0.0, 0.1)


def test_constant_field_zero_circulation():
    assert abs(circulation(vector_field(1.3, -0.7, 2.0), CURVED)) <= 1e-12


def test_gradient_field_zero_circulation():
    f = sympy.sin(X) * sympy.exp(Y) + X * Y**2
    H = vector_field(sympy.diff(f, X), sympy.diff(f, Y), 0)
    assert abs(circulation(H, CURVED)) <= 1e-10


def test_rotational_field_flat():
    ds, dl = 0.3, 0.2
    got = circulation(vector_field(-Y, X, 0), CurvedRectangle(0, ds, dl))
    assert got == pytest.approx(2 * (2 * ds) * (2 * dl), rel=1e-10)


def test_stokes_on_curved_rectangle():
    H = vector_field(X * Y**2 + sympy.sin(Y), X**3 - Y, 0)
    assert circulation(H, CURVED) == pytest.approx(enclosed_current(H.curl(), CURVED), rel=1e-10)


def test_constant_field_zero_flux():
    assert abs(flux(vector_field(1.0, 2.0, 3.0), CURVED_CYL)) <= 1e-12


def test_radial_field_flux_is_volume():
    r, dl = 0.3, 0.2
    got = flux(vector_field(X / 3, Y / 3, Z / 3), CurvedCylinder(0, r, dl))
    assert got == pytest.approx(np.pi * r**2 * 2 * dl, rel=1e-8)


def test_tangent_field_zero_flux():
    assert abs(flux(vector_field(-Z, 0, X), CurvedCylinder(0, 0.3, 0.2))) <= 1e-12


def test_divergence_theorem_curved():
    D = vector_field(X**2 * Y, sympy.cos(X) + Y**3, Z * X)
    assert flux(D, CURVED_CYL) == pytest.approx(enclosed_charge(D.divergence(), CURVED_CYL), rel=1e-8)


def test_continuous_tangential_no_current():
    H = vector_field(0.3 + X**2, 0.5 * X, 0)
    assert tangential_defect(H, zero_scalar(), CURVED) <= 1e-10


def test_flat_taylor_oracle():
    H = vector_field(sympy.sin(2 * Y) + X, X * Y, 0)
    for dl in (0.1, 0.05, 0.025):
        rect = CurvedRectangle(0, 0.1, dl)
        got = tangential_defect(H, zero_scalar(), rect)
        exact = abs(-np.sin(2 * dl) + np.sin(-2 * dl))
        assert got == pytest.approx(exact, rel=1e-14)
        assert got == pytest.approx(2 * dl * 2, rel=dl**2 * 2)


def test_continuous_normal_no_charge():
    D = vector_field(0.2 * Z, 1.0 + X**2 - Z**2, 0.4 * X)
    assert normal_defect(D, zero_scalar(), CURVED_CYL) <= 1e-8


def test_linear_normal_taylor_oracle():
    a, b, c = 0.4, 0.7, -0.1
    D = vector_field(a * X, b * Y, c * Z)
    for dl in (0.1, 0.05):
        got = normal_defect(D, scalar_field(a + b + c), CurvedCylinder(0, 0.2, dl))
        assert got == pytest.approx(2 * dl * abs(a + c), rel=1e-10)


def test_jump_captured_by_thin_layers():
    t = TangentialCase(jump=2.0)
    n = NormalCase(jump=3.0)
    assert tangential_defect(t.H(), t.j(), t.rect(0.01)) < 0.05
    assert normal_defect(n.D(), n.rhoc(), n.cyl(0.01)) < 0.05
    # without the sheet the jump itself remains as defect
    assert tangential_defect(t.H(), zero_scalar(), t.rect(0.01)) == pytest.approx(2.0, abs=0.05)


def test_rates_first_order():
    assert tangential_study().slope == pytest.approx(1.0, abs=0.2)
    assert normal_study().slope == pytest.approx(1.0, abs=0.2)


def test_zero_jump_identically_satisfied():
    for r in zero_jump_studies().values():
        assert r.status == "identically satisfied" and r.slope is None


def test_quadratic_harness():
    r = quadratic_study()
    assert r.slope == pytest.approx(2.0, abs=0.2)
    np.testing.assert_allclose(r.defects, 2 * r.sizes**2, rtol=1e-12)


def test_rate_study_validation():
    with pytest.raises(ValueError):
        rate_study(lambda h: h, [1.0, 0.5, 0.25])
    with pytest.raises(ValueError):
        rate_study(lambda h: h, [1.0, 0.5, 0.3, 0.1])
    assert rate_study(lambda h: 3 * h**1.5, [1.0, 0.5, 0.25, 0.125]).slope == pytest.approx(1.5)


def test_quadrature_order_doubling():
    q = Quadrature()
    t, n = TangentialCase(), NormalCase()
    rect, cyl = t.rect(0.02), n.cyl(0.02)
    pairs = [
        (circulation(t.H(), rect, q), circulation(t.H(), rect, q.doubled())),
        (enclosed_current(t.j(), rect, q), enclosed_current(t.j(), rect, q.doubled())),
        (flux(n.D(), cyl, q), flux(n.D(), cyl, q.doubled())),
        (enclosed_charge(n.rhoc(), cyl, q), enclosed_charge(n.rhoc(), cyl, q.doubled())),
    ]
    for a, b in pairs:
        assert abs(a - b) <= 1e-9 * abs(b)


def test_mirror_reverses_orientation():
    H = vector_field(X * Y**2 + Y, X**3 - 2 * Y, 0)
    assert circulation(H.reflected(), CURVED.reflected()) == pytest.approx(-circulation(H, CURVED), rel=1e-12)
    D = vector_field(X**2 * Z, 1 + X + Y**2, Z * X)
    assert flux(D.reflected(), CURVED_CYL.reflected()) == pytest.approx(flux(D, CURVED_CYL), rel=1e-12)


def test_reflection_negates_circulation_of_odd_field():
    # tangential component odd in x, normal component even: the mirror maps H to itself
    H = vector_field(X * Y, X**2 + Y, 0)
    assert sympy.simplify(H.reflected().exprs[0] - H.exprs[0]) == 0
    assert circulation(H, CURVED.reflected()) == pytest.approx(-circulation(H, CURVED), rel=1e-12)


def test_reflection_preserves_flux_of_even_field():
    D = vector_field(X**3 + X * Y, 1 + X**2 + Y, Z)
    assert flux(D, CURVED_CYL.reflected()) == pytest.approx(flux(D, CURVED_CYL), rel=1e-12)
