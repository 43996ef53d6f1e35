import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weakchain.domain import Domain
from weakchain.exterior import Covector, MultiIndex, max_norm
from weakchain.forms import (MEASURABLE, FormField, TestForm, angle_form, bump_test_form, constant_form, d_of_d_residual,
                             d_smooth, fd_gradient, linear_combination, lp_norm, lp_norm_report, polynomial_form,
                             product, radial_power_scalar, scalar_field, wedge_fields)
from weakchain.polynomial import Polynomial
from weakchain.quadrature import QuadratureGrid

CUBE3 = Domain.cube(3)
rng = np.random.default_rng(7)


def x(i, m):
    return Polynomial.variable(m, i)


def poly_one_form_r3():
    return polynomial_form(3, 1, {(0,): x(1, 3) * x(2, 3), (1,): x(0, 3) * x(0, 3) * 2.0,
                                  (2,): x(0, 3) * x(1, 3) * x(2, 3) + 1.0}, CUBE3)


# --- polynomial parsing ------------------------------------------------------

@pytest.mark.parametrize("text,point,value", [
    ("1.5 x1^2 x3 - x2 + 4", (2.0, 1.0, 3.0), 1.5 * 4 * 3 - 1 + 4),
    ("x1 x2", (2.0, 5.0, 0.0), 10.0),
    ("-3", (1.0, 1.0, 1.0), -3.0),
])
def test_polynomial_parse(text, point, value):
    assert Polynomial.parse(text, 3)(np.array([point]))[0] == pytest.approx(value)


@pytest.mark.parametrize("text", ["", "x4", "x1^5", "2 z1", "x1 +"])
def test_polynomial_parse_errors(text):
    with pytest.raises(ValueError):
        Polynomial.parse(text, 3)


def test_polynomial_derivative():
    p = Polynomial.parse("x1^3 x2 + 2 x2", 2)
    assert p.derivative(0)(np.array([[2.0, 3.0]]))[0] == pytest.approx(36.0)
    assert p.derivative(1)(np.array([[2.0, 3.0]]))[0] == pytest.approx(10.0)


# --- d_smooth ----------------------------------------------------------------

def test_d_of_x1_dx2():
    theta = polynomial_form(2, 1, {(1,): x(0, 2)})
    assert d_smooth(theta).at((0.3, -0.7)) == Covector(2, 2, np.array([1.0]))


def test_d_of_constant_is_zero():
    c = constant_form(Covector(1, 3, np.array([1.0, 2.0, 3.0])))
    assert d_smooth(c).at((0.1, 0.2, 0.3)).is_zero()


def test_d_at_top_degree_is_empty():
    theta = polynomial_form(2, 2, {(0, 1): x(0, 2)})
    d = d_smooth(theta)
    assert d.degree == 3 and d.size == 0


def test_analytic_d_matches_finite_differences():
    theta = poly_one_form_r3()
    fd = d_smooth(FormField(1, 3, theta.coeff_eval, domain=CUBE3))
    pts = rng.uniform(-1, 1, (50, 3))
    assert np.max(np.abs(d_smooth(theta)(pts) - fd(pts))) <= 1e-8


def test_angle_form_derivative():
    assert d_smooth(angle_form()).at((0.4, 0.9)) == Covector(2, 2, np.array([1.0]))


def test_measurable_field_refuses_silent_fd():
    f = FormField(1, 2, lambda x: x, smoothness=MEASURABLE)
    with pytest.raises(ValueError):
        d_smooth(f, fd_fallback=False)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_d_is_linear(a, b):
    t1, t2 = poly_one_form_r3(), polynomial_form(3, 1, {(2,): x(0, 3) * x(1, 3)})
    comb = linear_combination([(a, t1), (b, t2)])
    pts = rng.uniform(-1, 1, (20, 3))
    lhs = d_smooth(comb)(pts)
    rhs = a * d_smooth(t1)(pts) + b * d_smooth(t2)(pts)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.max(np.abs(rhs)))


def test_leibniz_derivative_of_product():
    h = scalar_field(Polynomial.parse("x1^2 + x2", 3))
    beta = polynomial_form(3, 1, {(2,): x(1, 3)})
    hb = product(h, beta)
    fd = d_smooth(FormField(1, 3, hb.coeff_eval, domain=CUBE3))
    pts = rng.uniform(-1, 1, (20, 3))
    assert np.max(np.abs(d_smooth(hb)(pts) - fd(pts))) <= 1e-8


def test_wedge_fields_derivative():
    a = polynomial_form(3, 1, {(0,): x(1, 3)})
    b = polynomial_form(3, 1, {(2,): x(0, 3) * x(1, 3)})
    ab = wedge_fields(a, b)
    fd = d_smooth(FormField(2, 3, ab.coeff_eval, domain=CUBE3))
    pts = rng.uniform(-1, 1, (20, 3))
    assert np.max(np.abs(d_smooth(ab)(pts) - fd(pts))) <= 1e-8


# --- d of d ------------------------------------------------------------------

def test_dd_polynomial_form():
    assert d_of_d_residual(poly_one_form_r3(), QuadratureGrid(CUBE3, 8)) <= 1e-10


def test_dd_constant_form_exact():
    c = constant_form(Covector(1, 3, np.array([1.0, 2.0, 3.0])))
    assert d_of_d_residual(c, QuadratureGrid(CUBE3, 6)) == 0.0


def test_dd_bump_with_fd():
    phi = bump_test_form(CUBE3, (0.0, 0.0, 0.0), 0.8, pattern=(0,))
    fd = FormField(1, 3, phi.coeff_eval, domain=CUBE3)
    assert d_of_d_residual(fd, QuadratureGrid(CUBE3, 6), step=1e-5) <= 1e-6


# --- test forms --------------------------------------------------------------

def test_bump_value_at_center_and_outside():
    phi = bump_test_form(CUBE3, (0.1, 0.0, -0.1), 0.5, amplitude=2.5, pattern=(0, 2))
    assert phi.at((0.1, 0.0, -0.1)) == Covector.basis_element(MultiIndex((0, 2), 3), 2.5)
    assert phi.at((0.7, 0.0, -0.1)).is_zero()


def test_bump_support_shell_is_exactly_zero():
    phi = bump_test_form(CUBE3, (0.0, 0.0, 0.0), 0.5, pattern=(1,))
    v = rng.standard_normal((200, 3))
    shell = 0.5 * (1 + 1e-9) * v / np.linalg.norm(v, axis=1, keepdims=True)
    assert np.all(phi(shell) == 0.0)
    assert np.all(d_smooth(phi)(shell) == 0.0)


def test_bump_derivative_matches_fd():
    phi = bump_test_form(CUBE3, (0.0, 0.0, 0.0), 0.6, pattern=(1,))
    pts = rng.standard_normal((30, 3))
    pts = 0.3 * pts / np.linalg.norm(pts, axis=1, keepdims=True)
    fd = d_smooth(FormField(1, 3, phi.coeff_eval, domain=CUBE3))
    assert np.max(np.abs(d_smooth(phi)(pts) - fd(pts))) <= 1e-7


def test_bump_must_fit_inside_domain():
    with pytest.raises(ValueError):
        bump_test_form(CUBE3, (0.8, 0.0, 0.0), 0.25)


def test_testform_is_formfield():
    assert isinstance(bump_test_form(CUBE3, (0, 0, 0), 0.5), (TestForm, FormField))


# --- Lp norms ----------------------------------------------------------------

def test_lp_constant_form():
    unit = Domain((0.0, 0.0), (1.0, 1.0))
    c = constant_form(Covector(1, 2, np.array([-3.0, 0.0])))
    assert lp_norm(c, 2, QuadratureGrid(unit, 32)) == pytest.approx(3.0, rel=1e-12)
    assert lp_norm(c, np.inf, QuadratureGrid(unit, 32)) == 3.0


def _inv_sqrt_r():
    r = radial_power_scalar(2, -0.5)
    return FormField(1, 2, lambda p: np.concatenate([r(p), np.zeros((len(p), 1))], axis=1))


def _closed_form_inv_sqrt_r(half):
    # int over [-h,h]^2 of |x|^(-1/2) = 8 int_0^{pi/4} int_0^{h sec t} r^(1/2) dr dt
    from scipy.integrate import quad

    return 8 * quad(lambda t: (2 / 3) * (half / np.cos(t)) ** 1.5, 0, np.pi / 4)[0]


def test_lp_inverse_sqrt_radius_is_finite():
    dom = Domain((-0.5, -0.5), (0.5, 0.5), (((0.0, 0.0), 0.05),))
    rep = lp_norm_report(_inv_sqrt_r(), 1, dom, 128, 0.05, levels=4)
    assert rep.finite
    assert rep.estimate == pytest.approx(_closed_form_inv_sqrt_r(0.5), rel=0.02)


def test_lp_inverse_sqrt_radius_diverges_at_p4():
    dom = Domain((-0.5, -0.5), (0.5, 0.5), (((0.0, 0.0), 0.05),))
    rep = lp_norm_report(_inv_sqrt_r(), 4, dom, 64, 0.05, levels=4)
    assert rep.classification == "divergent"


def test_lp_monotone():
    grid = QuadratureGrid(CUBE3, 8)
    small = polynomial_form(3, 1, {(0,): x(0, 3) * 0.5})
    big = polynomial_form(3, 1, {(0,): x(0, 3)})
    for p in (1, 2, 3.5):
        assert lp_norm(small, p, grid) <= lp_norm(big, p, grid)


def test_max_norm_of_field_values():
    theta = poly_one_form_r3()
    pts = rng.uniform(-1, 1, (5, 3))
    assert np.all(max_norm(theta(pts)) == np.max(np.abs(theta(pts)), axis=1))
