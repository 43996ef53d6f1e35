"""The chain rule d f^*alpha = f^*d alpha for a smooth map, tested weakly.

Each residual is int f^*alpha ^ d phi - (-1)^(k+1) int f^*(d alpha) ^ phi
for a bump test form phi, evaluated on a doubling sequence of grids.

Run:  python3 demos/03_smooth_chain_rule.py
"""
from weakchain.domain import Domain
from weakchain.forms import polynomial_form
from weakchain.maps import polynomial
from weakchain.polynomial import Polynomial
from weakchain.quadrature import QuadratureGrid
from weakchain.weakcalc import default_battery, naturality_residual

cube = Domain((0.0,) * 3, (1.0,) * 3)
f = polynomial([Polynomial.parse(t, 3) for t in
                ("x1 + 0.3 x2^2 - 0.1 x3", "x2 + 0.2 x1 x3", "x3 - 0.25 x1^2 x2 + 0.1 x2")])
alpha = polynomial_form(3, 1, {(0,): Polynomial.parse("y2 y3", 3, "y"),
                               (1,): Polynomial.parse("0.5 y1^2", 3, "y"),
                               (2,): Polynomial.parse("1 + y1 y2", 3, "y")})

# The default battery puts bumps at the center and at one generic point,
# in every basis pattern of degree m - k - 1 = 1.
for phi in default_battery(cube, 1):
    rep = naturality_residual(f, alpha, phi, QuadratureGrid(cube, 8), levels=4)
    values = " ".join(f"{v:+.2e}" for v in rep.values)
    print(f"{phi.label:<12} {values}  slope={rep.slope:.1f}  -> {rep.verdict}")

# Bumps are smooth with compact support, so the midpoint rule converges
# faster than its nominal second order: the slopes are well below -2.
