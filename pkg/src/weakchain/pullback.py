"""Pullback of forms through the compound matrix of the Jacobian.

For ``alpha = sum_I a_I dy_I`` the pulled-back coefficient on ``dx_J`` is
``sum_I a_I(f(x)) * minor_{I,J}(Df(x))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .domain import Domain
from .exterior import Covector, max_norm
from .forms import MEASURABLE, FormField
from .maps import MapModel, compound, jacobian, lambda_norm


def pullback_coeffs(f: MapModel, alpha_at_fx: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    """Batched pullback of coefficients ``(N, C(n,k))`` sampled at f(x) to ``(N, C(m,k))``."""
    m, n = f.source_dim, f.target_dim
    if k > min(m, n):
        return np.zeros((x.shape[0], comb(m, k)))
    if k == 0:
        return np.array(alpha_at_fx, dtype=float).reshape(x.shape[0], 1)
    minors = compound(f.jac(x), k)
    return np.einsum("ni,nij->nj", alpha_at_fx, minors)


def pullback_point(f: MapModel, alpha: Covector | FormField, x, domain: Domain | None = None) -> Covector:
    """``(f^* alpha)(x)``.  A FormField is sampled at ``f(x)``; a Covector is taken as constant."""
    x = np.asarray(x, dtype=float).reshape(1, f.source_dim)
    if isinstance(alpha, FormField):
        if alpha.dim != f.target_dim:
            raise ValueError("form lives on the wrong space")
        k = alpha.degree
        a = alpha(f(x))
    else:
        if alpha.ambient_dim != f.target_dim:
            raise ValueError("covector lives on the wrong space")
        k = alpha.degree
        a = alpha.coeffs[None, :]
    m, n = f.source_dim, f.target_dim
    if k > min(m, n):
        return Covector.zero(m, k)
    if k == 0:
        return Covector(0, m, a[0])
    J = jacobian(f, x[0], domain)
    return Covector(k, m, a[0] @ compound(J, k))


def pullback_field(f: MapModel, alpha: FormField, domain: Domain | None = None) -> FormField:
    """``f^* alpha`` as a measurable field on the source.

    No derivative is attached: whether it has the expected weak derivative is
    the question the residuals in :mod:`weakchain.weakcalc` answer.
    """
    if alpha.dim != f.target_dim:
        raise ValueError(f"form on R^{alpha.dim} cannot be pulled back by a map into R^{f.target_dim}")
    k = alpha.degree

    def coeff(x):
        return pullback_coeffs(f, alpha(f(x)), x, k)

    return FormField(k, f.source_dim, coeff, None, MEASURABLE, domain,
                     name=f"{f.family}^*({alpha.name})")


@dataclass(frozen=True)
class NormCheck:
    lhs: float
    rhs: float
    factor: int
    ratio: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.factor * self.rhs * (1 + 1e-12) + 1e-300


def norm_inequality_check(f: MapModel, alpha: Covector | FormField, x) -> NormCheck:
    """Compare ``|f^* alpha|`` with ``|Lambda^k f| * |alpha(f(x))|`` (max-norms).

    With max-norms on both sides the bound needs the factor C(n, k): each
    pulled-back coefficient sums C(n, k) products.  ``ratio`` is the factor
    actually needed at this point.
    """
    x = np.asarray(x, dtype=float).reshape(f.source_dim)
    pb = pullback_point(f, alpha, x)
    k = pb.degree
    a = alpha.at(f(x[None, :])[0]) if isinstance(alpha, FormField) else alpha
    lhs = max_norm(pb)
    if k == 0:
        lam = 1.0
    elif k > min(f.source_dim, f.target_dim):
        lam = 0.0
    else:
        lam = lambda_norm(f, x, k)
    rhs = lam * max_norm(a)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)
    return NormCheck(lhs, rhs, comb(f.target_dim, k), float(ratio))
