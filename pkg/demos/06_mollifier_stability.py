"""Smoothing x/|x| by mollification and watching its Jacobian concentrate.

Each mollified map covers the unit disc once, so int det(Df_eps) stays near
pi.  The mass squeezes into an eps-ball, so the envelope sup_eps |det Df_eps|
is not integrable: the approximating sequence is not equi-integrable.

Run:  python3 demos/06_mollifier_stability.py
"""
import numpy as np

from weakchain.domain import Domain
from weakchain.maps import identity, winding
from weakchain.mollify import kdagger_diagnostic, mollify, stability_diagnostic

square = Domain.cube(2)
schedule = [0.2, 0.1, 0.05, 0.025]

fe = mollify(winding(), 0.1, square)
x = np.array([[0.5, 0.0]])
print("f_eps(0.5, 0) =", fe(x)[0], " f(0.5, 0) =", winding()(x)[0])

rep = stability_diagnostic(winding(), 2, schedule, square, grid=256)
for e, per, env in zip(rep.epsilons, rep.per_eps, rep.envelope):
    print(f"eps={e:<6} int|det Df_eps|={per:.4f}  envelope={env:.4f}")
print("winding, degree 2:", rep.verdict)
print("identity, degree 2:", stability_diagnostic(identity(2), 2, schedule, square, grid=64).verdict)
print("winding, joint degrees 1 and 2:", kdagger_diagnostic(winding(), 1, schedule, square, grid=256).verdict)
