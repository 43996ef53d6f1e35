"""Maps U -> R^n, their Jacobians and compound (minor) matrices.

The k-th compound of the Jacobian has rows indexed by increasing k-tuples of
target axes and columns by increasing k-tuples of source axes, both in
lexicographic order; entry (I, J) is the k x k minor with rows I, columns J.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np

from .domain import Domain
from .exterior import basis
from .forms import FD_RELATIVE_STEP, MembershipReport, membership_report
from .polynomial import Polynomial
from .quadrature import quadrature_sum


class MapModel:
    """A map from R^m to R^n with a vectorised evaluator.

    ``eval`` maps ``(N, m) -> (N, n)`` and the optional ``jac`` maps
    ``(N, m) -> (N, n, m)``; without it the Jacobian is taken by central
    differences.  ``singular_points`` lists where the map fails to be smooth.
    """

    def __init__(self, source_dim: int, target_dim: int, eval: Callable, jac: Callable | None = None,
                 singular_points=(), family: str = "custom", params: dict | None = None):
        self.source_dim = source_dim
        self.target_dim = target_dim
        self._eval = eval
        self._jac = jac
        self.singular_points = tuple(tuple(float(v) for v in p) for p in singular_points)
        self.family = family
        self.params = dict(params or {})

    @property
    def has_analytic_jacobian(self) -> bool:
        return self._jac is not None

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self._eval(x), dtype=float).reshape(x.shape[0], self.target_dim)

    def jac(self, x, step: float | None = None) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self._jac is not None and step is None:
            return np.asarray(self._jac(x), dtype=float).reshape(
                x.shape[0], self.target_dim, self.source_dim)
        return self.fd_jac(x, FD_RELATIVE_STEP if step is None else step)

    def fd_jac(self, x, step: float) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        cols = []
        for j in range(self.source_dim):
            e = np.zeros(self.source_dim)
            e[j] = step
            cols.append((self(x + e) - self(x - e)) / (2 * step))
        return np.stack(cols, axis=-1)

    def __repr__(self):
        params = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"MapModel({self.family}: R^{self.source_dim} -> R^{self.target_dim}{', ' if params else ''}{params})"


def jacobian(f: MapModel, x, domain: Domain | None = None) -> np.ndarray:
    """n x m Jacobian at a single point; finite differences use step 1e-5 * diameter."""
    x = np.asarray(x, dtype=float).reshape(1, f.source_dim)
    if domain is not None and domain.in_excision(x)[0]:
        raise ValueError(f"point {x[0].tolist()} lies in an excision ball")
    for p in f.singular_points:
        if np.array_equal(x[0], np.array(p)):
            raise ValueError(f"point {x[0].tolist()} is a singular point of the map")
    if f.has_analytic_jacobian:
        return f.jac(x)[0]
    step = FD_RELATIVE_STEP * (domain.diameter if domain is not None else 1.0)
    return f.fd_jac(x, step)[0]


def _det(sub: np.ndarray, k: int) -> np.ndarray:
    if k == 2:
        return sub[..., 0, 0] * sub[..., 1, 1] - sub[..., 0, 1] * sub[..., 1, 0]
    if k == 3:
        a = sub
        return (a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
                - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
                + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]))
    # LAPACK getrf: LU with partial pivoting
    return np.linalg.det(sub)


def compound(a: np.ndarray, k: int) -> np.ndarray:
    """k-th compound of a stack of ``n x m`` matrices, shape ``(..., C(n,k), C(m,k))``.

    Cofactor formulas for k <= 3, LU factorisation beyond.  Degrees above
    ``min(n, m)`` give an empty array.
    """
    a = np.asarray(a, dtype=float)
    n, m = a.shape[-2:]
    lead = a.shape[:-2]
    if k < 0:
        raise ValueError("negative degree")
    if k == 0:
        return np.ones(lead + (1, 1))
    if k == 1:
        return a.copy()
    if k > min(n, m):
        return np.zeros(lead + (comb(n, k), comb(m, k)))
    rows = np.array(basis(n, k))
    cols = np.array(basis(m, k))
    sub = a[..., rows[:, None, :, None], cols[None, :, None, :]]
    return _det(sub, k)


@dataclass(frozen=True)
class MinorMatrix:
    k: int
    rows: tuple[tuple[int, ...], ...]
    cols: tuple[tuple[int, ...], ...]
    entries: np.ndarray = field(repr=False)


def minor_matrix(f: MapModel, x, k: int, domain: Domain | None = None) -> MinorMatrix:
    if not 1 <= k <= min(f.source_dim, f.target_dim):
        raise ValueError(f"k={k} outside [1, {min(f.source_dim, f.target_dim)}]")
    J = jacobian(f, x, domain)
    return MinorMatrix(k, basis(f.target_dim, k), basis(f.source_dim, k), compound(J, k))


def lambda_norm(f: MapModel, x, k: int, domain: Domain | None = None) -> float:
    """Largest absolute k x k minor of the Jacobian at x."""
    return float(np.max(np.abs(minor_matrix(f, x, k, domain).entries)))


def lambda_norm_values(f: MapModel, x: np.ndarray, k: int) -> np.ndarray:
    """Vectorised ``|Lambda^k f|`` at the rows of ``x`` (k = 0 gives 1)."""
    c = compound(f.jac(x), k)
    if c.shape[-1] == 0 or c.shape[-2] == 0:
        return np.zeros(c.shape[0])
    return np.max(np.abs(c), axis=(-2, -1))


def sobolev_report(f: MapModel, p: float, domain: Domain, resolution=64, epsilon0: float | None = None,
                   levels: int = 3, degree: int = 1) -> MembershipReport:
    """Finite/divergent classification of ``int |Lambda^degree f|^p`` over the domain.

    With ``degree=1`` the integrand is ``|Df|^p`` (max-entry norm), the W^{1,p}
    gradient part; higher degrees probe the minors for F^k and L^q
    conditions.  The map's singular points are excised with radii
    ``epsilon0 / 2^l`` while the resolution doubles.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    dom = domain
    if epsilon0 is None:
        res = np.broadcast_to(np.asarray(resolution), (domain.dim,))
        epsilon0 = 2.0 * float(np.min(domain.widths / res))
    if f.singular_points:
        dom = domain.with_excluded(f.singular_points, epsilon0)
    return membership_report(lambda x: lambda_norm_values(f, x, degree) ** p, dom, resolution,
                             epsilon0, levels)


# --- families ---------------------------------------------------------------

def linear(a, b=None) -> MapModel:
    """Affine map ``x -> A x + b``."""
    a = np.array(a, dtype=float)
    n, m = a.shape
    b = np.zeros(n) if b is None else np.array(b, dtype=float)
    return MapModel(m, n, lambda x: np.einsum("ij,nj->ni", a, x) + b,
                    lambda x: np.broadcast_to(a, (x.shape[0], n, m)).copy(),
                    family="linear", params={"A": a.tolist(), "b": b.tolist()})


def identity(m: int) -> MapModel:
    f = linear(np.eye(m))
    f.family = "identity"
    return f


def constant(c, m: int) -> MapModel:
    """The map R^m -> R^n sending everything to ``c``."""
    c = np.array(c, dtype=float).reshape(-1)
    n = c.size
    return MapModel(m, n, lambda x: np.broadcast_to(c, (x.shape[0], n)).copy(),
                    lambda x: np.zeros((x.shape[0], n, m)), family="constant",
                    params={"c": c.tolist()})


def polynomial(components: list[Polynomial]) -> MapModel:
    m = components[0].dim
    if any(p.dim != m for p in components):
        raise ValueError("all components must share the source dimension")
    n = len(components)
    grads = [[p.derivative(j) for j in range(m)] for p in components]

    def ev(x):
        return np.stack([p(x) for p in components], axis=-1)

    def jac(x):
        return np.stack([np.stack([g(x) for g in row], axis=-1) for row in grads], axis=1)

    return MapModel(m, n, ev, jac, family="polynomial",
                    params={"components": [p.terms for p in components]})


def radial_power(s: float, m: int = 2) -> MapModel:
    """``f_s(x) = |x|^(s-1) x``.  s = 1 is the identity, s = 0 the winding map.

    Df = |x|^(s-1) (I + (s-1) xhat xhat^T); singular at the origin for s != 1.
    The value at the origin itself is set to 0.
    """
    s = float(s)
    eye = np.eye(m)

    def ev(x):
        r = np.sqrt(np.sum(x * x, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > 0, r ** (s - 1.0), 0.0)
        return scale[:, None] * x

    def jac(x):
        r = np.sqrt(np.sum(x * x, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > 0, r ** (s - 1.0), 0.0)
            xh = np.where(r[:, None] > 0, x / r[:, None], 0.0)
        return scale[:, None, None] * (eye + (s - 1.0) * xh[:, :, None] * xh[:, None, :])

    sing = () if s == 1.0 else ((0.0,) * m,)
    return MapModel(m, m, ev, jac, sing, family="radial_power", params={"s": s})


def winding(m: int = 2) -> MapModel:
    """``x / |x|``, the degree-one map onto the unit sphere."""
    f = radial_power(0.0, m)
    f.family = "winding"
    return f


def composition(g: MapModel, f: MapModel) -> MapModel:
    """``g o f``; Jacobian by the chain rule."""
    if g.source_dim != f.target_dim:
        raise ValueError(f"cannot compose: g takes R^{g.source_dim}, f lands in R^{f.target_dim}")

    def ev(x):
        return g(f(x))

    def jac(x):
        return np.einsum("nij,njk->nik", g.jac(f(x)), f.jac(x))

    return MapModel(f.source_dim, g.target_dim, ev, jac, f.singular_points,
                    family="composition", params={"g": g.family, "f": f.family})


def w11_distance(g: MapModel, f: MapModel, grid) -> float:
    """``int |g - f| + int |Dg - Df|`` on the grid nodes (max-entry norms)."""
    def integrand(x):
        dv = np.max(np.abs(g(x) - f(x)), axis=1)
        dj = np.max(np.abs(g.jac(x) - f.jac(x)), axis=(1, 2))
        return dv + dj

    return quadrature_sum(integrand, grid)
