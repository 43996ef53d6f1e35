import numpy as np
import pytest
from scipy.integrate import quad

from weakchain.domain import Domain
from weakchain.exterior import Covector
from weakchain.forms import (angle_form, bump_test_form, constant_form, d_smooth, linear_combination,
                             polynomial_form, scalar_field)
from weakchain.maps import constant, identity, polynomial, winding
from weakchain.mollify import mollify
from weakchain.polynomial import Polynomial
from weakchain.pullback import pullback_field
from weakchain.quadrature import QuadratureGrid
from weakchain.weakcalc import (FAILS, HOLDS, INCONCLUSIVE, default_battery, leibniz_residual,
                                naturality_decomposed_residual, naturality_residual, pairing, tau_convergence_report,
                                verdict_for, weak_closedness_residual, weak_derivative_residual)

UNIT2 = Domain((0.0, 0.0), (1.0, 1.0))
UNIT3 = Domain((0.0,) * 3, (1.0,) * 3)
SQUARE = Domain.cube(2)


def P(text, m, var="x"):
    return Polynomial.parse(text, m, var)


def smooth3():
    return polynomial([P("x1 + 0.3 x2^2", 3), P("x2 - 0.2 x1 x3", 3), P("x3 + 0.1 x1^2 x2", 3)])


def annulus_oracle(phi, eps):
    """pi times the mean of phi over the circle of radius eps (Stokes on eps < |x|)."""
    val = quad(lambda t: phi.profile(np.array([[eps * np.cos(t), eps * np.sin(t)]]))[0], 0, 2 * np.pi)[0]
    return 0.5 * val


# --- verdict rule ------------------------------------------------------------

@pytest.mark.parametrize("values,expected", [
    ([1e-3, 1e-4, 1e-5, 1e-6], HOLDS),
    ([0.0, 0.0, 0.0], HOLDS),
    ([2.9, 3.09, 3.129, 3.138], FAILS),
    ([1.0, -1.0, 1.0, -1.0], INCONCLUSIVE),
    ([1e-3, 1e-2, 1e-1, 1.0], INCONCLUSIVE),
])
def test_verdict_rule(values, expected):
    assert verdict_for(values)[0] == expected


def test_tolerance_is_ten_error_estimates():
    verdict, tol, err, _ = verdict_for([1e-2, 1e-3, 2e-4])
    assert err == pytest.approx(8e-4) and tol == pytest.approx(8e-3)


# --- pairing -----------------------------------------------------------------

def test_pairing_basis_forms():
    dx1 = polynomial_form(2, 1, {(0,): 1.0})
    dx2 = polynomial_form(2, 1, {(1,): 1.0})
    grid = QuadratureGrid(UNIT2, 16)
    assert pairing(dx1, dx2, grid) == pytest.approx(1.0, rel=1e-14)
    assert pairing(dx2, dx1, grid) == pytest.approx(-1.0, rel=1e-14)


def test_pairing_refinement():
    theta = polynomial_form(2, 1, {(0,): P("x1^2 x2", 2), (1,): P("1 + x2", 2)})
    phi = bump_test_form(UNIT2, (0.5, 0.5), 0.45, pattern=(1,))
    a = pairing(theta, phi, QuadratureGrid(UNIT2, 128))
    b = pairing(theta, phi, QuadratureGrid(UNIT2, 512))
    assert abs(a - b) <= 1e-6


def test_pairing_degree_mismatch():
    dx1 = polynomial_form(2, 1, {(0,): 1.0})
    with pytest.raises(ValueError):
        pairing(dx1, scalar_field(Polynomial.constant(2, 1.0)), QuadratureGrid(UNIT2, 4))


@pytest.mark.parametrize("m,k", [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2)])
def test_pairing_graded_antisymmetry(m, k):
    rng = np.random.default_rng(m * 10 + k)
    from weakchain.exterior import basis

    def rand(deg):
        return polynomial_form(m, deg, {I: Polynomial(m, {(0,) * m: rng.standard_normal(),
                                                            (1,) + (0,) * (m - 1): rng.standard_normal()})
                                        for I in basis(m, deg)})
    th, om = rand(k), rand(m - k)
    grid = QuadratureGrid(Domain.cube(m), 6)
    lhs, rhs = pairing(th, om, grid), (-1) ** (k * (m - k)) * pairing(om, th, grid)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


# --- weak derivative ---------------------------------------------------------

def test_smooth_weak_derivative_holds():
    theta = polynomial_form(2, 1, {(0,): P("x1 x2^2", 2), (1,): P("x1^3", 2)})
    phi = bump_test_form(UNIT2, (0.5, 0.5), 0.45)
    rep = weak_derivative_residual(theta, d_smooth(theta), phi, QuadratureGrid(UNIT2, 16))
    assert rep.verdict == HOLDS and abs(rep.residual) <= 1e-6


def test_closed_constant_form():
    c = constant_form(Covector(1, 2, np.array([1.0, -2.0])))
    phi = bump_test_form(UNIT2, (0.5, 0.5), 0.45)
    rep = weak_closedness_residual(c, phi, QuadratureGrid(UNIT2, 16))
    assert rep.verdict == HOLDS and abs(rep.residual) <= 1e-6


def test_wrong_derivative_fails_with_explicit_value():
    theta = scalar_field(P("x1^2 + x2", 2))
    extra = constant_form(Covector(1, 2, np.array([1.0, 0.0])))
    psi = linear_combination([(1.0, d_smooth(theta)), (1.0, extra)])
    phi = bump_test_form(UNIT2, (0.5, 0.5), 0.45, pattern=(1,))
    grid = QuadratureGrid(UNIT2, 16)
    rep = weak_derivative_residual(theta, psi, phi, grid)
    k = 0
    expected = -((-1) ** (k + 1)) * pairing(extra, phi, grid.refined(3))
    assert rep.verdict == FAILS
    assert rep.residual == pytest.approx(expected, rel=1e-6)


def test_test_form_required():
    theta = scalar_field(P("x1", 2))
    not_bump = polynomial_form(2, 1, {(0,): 1.0})
    with pytest.raises(TypeError):
        weak_derivative_residual(theta, d_smooth(theta), not_bump, QuadratureGrid(UNIT2, 8))


def test_degree_check():
    theta = scalar_field(P("x1", 2))
    with pytest.raises(ValueError):
        weak_derivative_residual(theta, d_smooth(theta), bump_test_form(UNIT2, (0.5, 0.5), 0.4),
                                 QuadratureGrid(UNIT2, 8))


def test_dd_consistency():
    theta = polynomial_form(3, 1, {(0,): P("x2 x3", 3), (2,): P("x1^2", 3)})
    phi = bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.45, pattern=(0,))
    rep = weak_derivative_residual(theta, d_smooth(theta), phi, QuadratureGrid(UNIT3, 8))
    assert rep.verdict == HOLDS


# --- weak closedness ---------------------------------------------------------

def test_pullback_of_closed_form_by_smooth_map():
    f = smooth3()
    gamma = polynomial_form(3, 1, {(0,): P("y2", 3, "y"), (1,): P("y1", 3, "y")})  # d(y1 y2)
    phi = bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.45, pattern=(2,))
    rep = weak_closedness_residual(pullback_field(f, gamma), phi, QuadratureGrid(UNIT3, 8))
    assert rep.verdict == HOLDS and abs(rep.residual) <= 1e-6


def test_exact_form_is_weakly_closed():
    dx1 = polynomial_form(2, 1, {(0,): 1.0})
    rep = weak_closedness_residual(dx1, bump_test_form(UNIT2, (0.5, 0.5), 0.45), QuadratureGrid(UNIT2, 16))
    assert rep.verdict == HOLDS and abs(rep.residual) < 1e-12


def test_winding_pullback_is_not_weakly_closed():
    phi = bump_test_form(SQUARE, (0.0, 0.0), 0.5)
    grid = QuadratureGrid(SQUARE.with_excluded([(0.0, 0.0)], 0.125), 64, 0.125)
    rep = weak_closedness_residual(pullback_field(winding(), angle_form()), phi, grid)
    assert rep.verdict == FAILS
    assert rep.residual == pytest.approx(annulus_oracle(phi, rep.epsilons[-1]), rel=0.02)


# --- naturality --------------------------------------------------------------

def test_smooth_naturality_holds():
    alpha = polynomial_form(3, 1, {(0,): P("y2 y3", 3, "y"), (1,): P("0.5 y1^2", 3, "y"), (2,): 1.0})
    for phi in default_battery(UNIT3, 1):
        rep = naturality_residual(smooth3(), alpha, phi, QuadratureGrid(UNIT3, 8))
        assert rep.verdict == HOLDS and abs(rep.residual) <= 1e-6


def test_winding_naturality_fails_at_origin():
    phi = bump_test_form(SQUARE, (0.0, 0.0), 0.5, label="center")
    rep = naturality_residual(winding(), angle_form(), phi, QuadratureGrid(SQUARE, 64, 0.125))
    assert rep.verdict == FAILS
    last = np.array(rep.values[-3:])
    assert (last.max() - last.min()) / abs(last).max() <= 0.05
    assert rep.residual == pytest.approx(annulus_oracle(phi, rep.epsilons[-1]), rel=0.02)
    assert rep.residual == pytest.approx(np.pi * phi.amplitude, rel=0.02)


@pytest.mark.parametrize("amp", [0.5, 2.0])
def test_winding_plateau_proportional_to_center_value(amp):
    phi = bump_test_form(SQUARE, (0.0, 0.0), 0.5, amplitude=amp)
    rep = naturality_residual(winding(), angle_form(), phi, QuadratureGrid(SQUARE, 64, 0.125))
    assert rep.residual / amp == pytest.approx(3.1384, rel=1e-3)


@pytest.mark.parametrize("center", [(0.5, 0.45), (-0.45, 0.4), (0.3, -0.6)])
def test_winding_off_origin_holds(center):
    phi = bump_test_form(SQUARE, center, 0.3)
    rep = naturality_residual(winding(), angle_form(), phi, QuadratureGrid(SQUARE, 64, 0.125))
    assert rep.verdict == HOLDS


def test_constant_map_residual_is_zero():
    phi = bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.4, pattern=(0,))
    alpha = polynomial_form(3, 1, {(0,): P("y2 y3", 3, "y")})
    rep = naturality_residual(constant([0.2, 0.3, 0.4], 3), alpha, phi, QuadratureGrid(UNIT3, 4), levels=3)
    assert rep.values == (0.0, 0.0, 0.0) and rep.verdict == HOLDS


def test_naturality_linear_in_alpha():
    f = smooth3()
    a = polynomial_form(3, 1, {(0,): P("y2 y3", 3, "y")})
    b = polynomial_form(3, 1, {(2,): P("y1^2", 3, "y")})
    phi = bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.45, pattern=(1,))
    grid = QuadratureGrid(UNIT3, 8)
    ra = naturality_residual(f, a, phi, grid, levels=2).values
    rb = naturality_residual(f, b, phi, grid, levels=2).values
    rab = naturality_residual(f, linear_combination([(1.0, a), (1.0, b)]), phi, grid, levels=2).values
    assert np.max(np.abs(np.array(rab) - np.array(ra) - np.array(rb))) <= 1e-10


def test_degree_mismatch_in_naturality():
    phi = bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.4, pattern=(0,))
    with pytest.raises(ValueError):
        naturality_residual(identity(3), polynomial_form(3, 2, {(0, 1): 1.0}), phi, QuadratureGrid(UNIT3, 4))


# --- decomposed route --------------------------------------------------------

def test_decomposed_route_smooth():
    a = scalar_field(P("y1", 3, "y"))
    gamma = polynomial_form(3, 1, {(1,): 1.0})
    phi = bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.45, pattern=(0,))
    rep = naturality_decomposed_residual(smooth3(), a, gamma, phi, QuadratureGrid(UNIT3, 8))
    assert rep.metadata["route_gap"] <= 1e-8
    assert rep.verdict == HOLDS


def test_decomposed_with_unit_coefficient_is_closedness():
    f = smooth3()
    gamma = polynomial_form(3, 1, {(1,): 1.0})
    phi = bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.45, pattern=(0,))
    grid = QuadratureGrid(UNIT3, 8)
    rep = naturality_decomposed_residual(f, scalar_field(Polynomial.constant(3, 1.0)), gamma, phi, grid)
    closed = weak_closedness_residual(pullback_field(f, gamma), phi, grid)
    np.testing.assert_allclose(rep.values, closed.values, rtol=0, atol=1e-14)


def test_decomposed_route_winding():
    phi = bump_test_form(SQUARE, (0.0, 0.0), 0.5)
    grid = QuadratureGrid(SQUARE, 64, 0.125)
    a = scalar_field(P("0.5 y1", 2, "y"))
    gamma = polynomial_form(2, 1, {(1,): 1.0})
    rep = naturality_decomposed_residual(winding(), a, gamma, phi, grid)
    assert rep.metadata["route_gap"] <= 1e-8
    assert rep.verdict == FAILS


def test_decomposed_requires_closed_gamma():
    phi = bump_test_form(SQUARE, (0.0, 0.0), 0.5)
    with pytest.raises(ValueError, match="closed"):
        naturality_decomposed_residual(winding(), scalar_field(P("1", 2, "y")), angle_form(), phi,
                                       QuadratureGrid(SQUARE, 16, 0.25))


# --- Leibniz -----------------------------------------------------------------

def test_leibniz_constant_h():
    beta = polynomial_form(2, 1, {(0,): P("x2^2", 2)})
    phi = bump_test_form(UNIT2, (0.5, 0.5), 0.45)
    rep = leibniz_residual(scalar_field(Polynomial.constant(2, 3.0)), beta, phi, QuadratureGrid(UNIT2, 32))
    assert rep.verdict == HOLDS


def test_leibniz_polynomial():
    h = scalar_field(P("x1^2", 3))
    beta = polynomial_form(3, 1, {(2,): P("x2", 3)})
    phi = bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.45, pattern=(0,))
    rep = leibniz_residual(h, beta, phi, QuadratureGrid(UNIT3, 8))
    assert abs(rep.residual) <= 1e-6 and rep.verdict == HOLDS


def test_leibniz_bump_h():
    h = bump_test_form(UNIT2, (0.4, 0.6), 0.3)
    beta = polynomial_form(2, 1, {(0,): P("x1 x2", 2), (1,): P("x2^3", 2)})
    phi = bump_test_form(UNIT2, (0.5, 0.5), 0.45)
    rep = leibniz_residual(h, beta, phi, QuadratureGrid(UNIT2, 32))
    assert abs(rep.residual) <= 1e-6 and rep.verdict == HOLDS


# --- battery -----------------------------------------------------------------

def test_default_battery_layout():
    bat = default_battery(SQUARE, 1, singular_points=[(0.0, 0.0)])
    labels = [b.label for b in bat]
    assert labels == ["center:dx1", "center:dx2", "generic:dx1", "generic:dx2"]
    for b in bat:
        assert SQUARE.contains_ball(b.center, b.radius)
    gen = [b for b in bat if b.label.startswith("generic")][0]
    assert np.linalg.norm(gen.center) > gen.radius


def test_singular_point_off_center_gets_own_bump():
    bat = default_battery(UNIT2, 0, singular_points=[(0.3, 0.6)])
    assert [b.label.split(":")[0] for b in bat] == ["center", "singular1", "generic"]


def test_explicit_empty_battery_rejected():
    with pytest.raises(ValueError):
        default_battery(UNIT2, 1, centers=[])


# --- tau convergence ---------------------------------------------------------

def test_tau_constant_sequence():
    f = smooth3()
    alphas = [polynomial_form(3, 1, {(0,): P("y2", 3, "y")})]
    omegas = [bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.4, pattern=(1, 2))]
    rep = tau_convergence_report([f, f], f, alphas, omegas, QuadratureGrid(UNIT3, 8))
    assert np.all(rep.deltas == 0) and np.all(rep.w11 == 0)


def test_tau_perturbed_sequence_rate():
    f = smooth3()
    seq = []
    for j in (1, 2, 4, 8):
        seq.append(polynomial([P(f"x1 + 0.3 x2^2 + {1 / j} x2 x3", 3), P(f"x2 - 0.2 x1 x3 + {1 / j} x1^2", 3),
                               P(f"x3 + 0.1 x1^2 x2 + {1 / j} x1 + {1 / j} x3", 3)]))
    alphas = [polynomial_form(3, 1, {(0,): 1.0}), polynomial_form(3, 1, {(2,): 1.0})]
    omegas = [bump_test_form(UNIT3, (0.5, 0.5, 0.5), 0.4, pattern=(1, 2))]
    rep = tau_convergence_report(seq, f, alphas, omegas, QuadratureGrid(UNIT3, 8))
    d = rep.deltas.max(axis=(0, 1))
    assert np.all(np.diff(d) < 0)
    # constant coefficients: lambda is linear in Df, so deltas scale exactly like 1/j
    np.testing.assert_allclose(d[1:] / d[:-1], 0.5, rtol=1e-8)
    assert np.all(np.diff(rep.w11) < 0)


def test_tau_mollified_winding_does_not_converge():
    f = winding()
    # each eps needs several cells per mollifier radius; 0.05 would need 512 nodes
    seq = [mollify(f, e, SQUARE) for e in (0.2, 0.1)]
    inner = Domain.cube(2, 0.75)
    alphas = [polynomial_form(2, 2, {(0, 1): 1.0})]
    omegas = [bump_test_form(inner, (0.0, 0.0), 0.7)]
    rep = tau_convergence_report(seq, f, alphas, omegas, QuadratureGrid(inner, 256))
    assert np.all(np.abs(rep.limit) < 1e-12)
    assert np.all(rep.deltas > 2.5)


def test_tau_batteries_nonempty():
    with pytest.raises(ValueError):
        tau_convergence_report([identity(2)], identity(2), [], [bump_test_form(SQUARE, (0, 0), 0.5)],
                               QuadratureGrid(SQUARE, 4))
