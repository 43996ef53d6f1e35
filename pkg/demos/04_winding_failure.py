"""Where the chain rule fails: x/|x| and the angle form.

The pullback of the angle form by x/|x| is closed away from 0, but its
weak derivative carries a point mass at the origin.  The residual against
a bump at 0 settles at pi * phi(0); bumps away from 0 see nothing.

Run:  python3 demos/04_winding_failure.py
"""
import numpy as np

from weakchain.domain import Domain
from weakchain.forms import angle_form, bump_test_form
from weakchain.maps import sobolev_report, winding
from weakchain.quadrature import QuadratureGrid
from weakchain.weakcalc import naturality_residual

square = Domain.cube(2)
grid = QuadratureGrid(square, 64, epsilon=0.125)  # excision radius halves per level

for amp in (1.0, 2.0):
    phi = bump_test_form(square, (0.0, 0.0), 0.5, amplitude=amp)
    rep = naturality_residual(winding(), angle_form(), phi, grid)
    print(f"phi(0)={amp}: values", " ".join(f"{v:.4f}" for v in rep.values), "->", rep.verdict,
          f"(pi*phi(0) = {np.pi * amp:.4f})")

phi = bump_test_form(square, (0.5, 0.45), 0.3)
print("bump at (0.5, 0.45):", naturality_residual(winding(), angle_form(), phi, grid).verdict)

# The map is in W^{1,p} only for p < 2, which is exactly what breaks the chain rule here.
for p in (1.5, 2.0):
    print(f"W^1,{p}:", sobolev_report(winding(), p, square).classification)
