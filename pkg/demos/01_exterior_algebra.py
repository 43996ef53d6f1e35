"""Covectors, the wedge product and compound matrices.

Run:  python3 demos/01_exterior_algebra.py
"""
from math import comb

import numpy as np

from weakchain.exterior import Covector, MultiIndex, basis, wedge
from weakchain.maps import compound

# The basis of Lambda^2 R^4 is ordered lexicographically: dx1^dx2, dx1^dx3, ...
print("basis of Lambda^2 R^4:", basis(4, 2))

dx1 = Covector.basis_element(MultiIndex((0,), 4))
dx3 = Covector.basis_element(MultiIndex((2,), 4))
print("dx1 ^ dx3 =", wedge(dx1, dx3).coeffs)
print("dx3 ^ dx1 =", wedge(dx3, dx1).coeffs, "(sign flips)")
print("dx1 ^ dx1 is zero:", wedge(dx1, dx1).is_zero())

# Graded anticommutativity on random covectors: a ^ b = (-1)^(kl) b ^ a
rng = np.random.default_rng(0)
a = Covector(2, 5, rng.standard_normal(comb(5, 2)))
b = Covector(1, 5, rng.standard_normal(5))
gap = np.max(np.abs(wedge(a, b).coeffs - wedge(b, a).coeffs))
print(f"|a^b - b^a| for degrees 2 and 1: {gap:.1e}")

# The k-th compound of a matrix collects its k x k minors.  Cauchy-Binet
# says compounds multiply like the matrices themselves.
A, B = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
for k in (1, 2, 3, 4):
    err = np.max(np.abs(compound(A @ B, k) - compound(A, k) @ compound(B, k)))
    print(f"k={k}: |C_k(AB) - C_k(A) C_k(B)| = {err:.1e}")
print("C_4(A) is det(A):", compound(A, 4)[0, 0], np.linalg.det(A))
