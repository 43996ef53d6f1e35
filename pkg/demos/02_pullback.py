"""Pulling forms back through maps by Jacobian minors.

Run:  python3 demos/02_pullback.py
"""
import numpy as np

from weakchain.exterior import Covector, MultiIndex
from weakchain.forms import polynomial_form
from weakchain.maps import linear, minor_matrix, polynomial, winding
from weakchain.polynomial import Polynomial
from weakchain.pullback import norm_inequality_check, pullback_field, pullback_point

# A diagonal stretch pulls the area form back to det times the area form.
area = Covector.basis_element(MultiIndex((0, 1), 2))
print("diag(2,3)^* dy1^dy2 =", pullback_point(linear(np.diag([2.0, 3.0])), area, (0.0, 0.0)).coeffs)

# x/|x| maps the plane onto the unit circle, so its Jacobian has rank one
# and the area form pulls back to zero away from the origin.
for x in [(0.3, 0.4), (-0.7, 0.1)]:
    print("winding^* dy1^dy2 at", x, "=", pullback_point(winding(), area, x).coeffs)

# Fields: a polynomial map of R^3 and a polynomial 2-form.
f = polynomial([Polynomial.parse(t, 3) for t in ("x1 + 0.3 x2^2", "x2 - 0.2 x1 x3", "x3 + 0.1 x1^2 x2")])
alpha = polynomial_form(3, 2, {(0, 1): Polynomial.parse("1 + y3^2", 3, "y")})
pts = np.array([[0.2, 0.5, 0.8], [0.9, 0.1, 0.4]])
print("f^*alpha at two points:\n", pullback_field(f, alpha)(pts))
print("second compound of Df at the first point:\n", minor_matrix(f, pts[0], 2).entries)

# |f^*alpha| <= C(n,k) |Lambda^k Df| |alpha| in the max norm.
chk = norm_inequality_check(f, Covector(2, 3, np.array([1.0, -2.0, 0.5])), pts[0])
print(f"norm inequality: |f^*a|={chk.lhs:.4f} <= {chk.factor} * {chk.rhs:.4f}: {chk.holds}")
