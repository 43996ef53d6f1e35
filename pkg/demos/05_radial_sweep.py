"""x |x|^(s-1) for s in (0, 1]: in W^{1,2}, and the chain rule holds.

The residual at the origin bump decays like eps^(2s), slowly for small s.
At s = 0.2 the finest residual is still about 0.45: the verdict "holds"
comes from the tolerance 10 x (last refinement change) together with the
steady decay, not from a small residual.  Treat it as weak evidence.

Run:  python3 demos/05_radial_sweep.py
"""
from weakchain.domain import Domain
from weakchain.forms import angle_form, bump_test_form
from weakchain.maps import radial_power, sobolev_report
from weakchain.quadrature import QuadratureGrid
from weakchain.weakcalc import naturality_residual

square = Domain.cube(2)
phi = bump_test_form(square, (0.0, 0.0), 0.5)
for s in (0.2, 0.4, 0.6, 0.8, 1.0):
    f = radial_power(s)
    rep = naturality_residual(f, angle_form(), phi, QuadratureGrid(square, 64, 0.0625), levels=4)
    w12 = sobolev_report(f, 2.0, square).classification
    print(f"s={s}: W^1,2 {w12:<9} residuals", " ".join(f"{v:+.2e}" for v in rep.values), "->", rep.verdict)
