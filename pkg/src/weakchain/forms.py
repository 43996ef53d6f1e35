"""Differential form fields on box domains.

A :class:`FormField` of degree k on R^m is a vectorised evaluator mapping an
``(N, m)`` array of points to ``(N, C(m, k))`` coefficients.  Fields built
from closed-form expressions carry an analytic exterior derivative; anything
else falls back to central finite differences in :func:`d_smooth`.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable

import numpy as np

from .domain import Domain
from .exterior import Covector, MultiIndex, basis, max_norm, rank, wedge_coeffs
from .polynomial import Polynomial
from .quadrature import (QuadratureGrid, classify_growth, map_nodes, node_values,
                         quadrature_sum)

ANALYTIC = "analytic-C1"
MEASURABLE = "sampled-measurable"

FD_RELATIVE_STEP = 1e-5

Evaluator = Callable[[np.ndarray], np.ndarray]


class FormField:
    """Degree-k form field on R^m.

    Parameters
    ----------
    degree, dim : int
        Form degree k and ambient dimension m.
    coeff_eval : callable
        ``(N, m) -> (N, C(m, k))``.
    d_eval : callable, optional
        Analytic exterior derivative, ``(N, m) -> (N, C(m, k+1))``.
    smoothness : str
        ``"analytic-C1"`` or ``"sampled-measurable"``.
    domain : Domain, optional
        Sets the finite-difference step and the excision check in :meth:`at`.
    d_field : callable, optional
        Zero-argument factory for the derivative as a full FormField, used by
        fields whose derivative is again closed-form (polynomial forms).
    """

    def __init__(self, degree: int, dim: int, coeff_eval: Evaluator, d_eval: Evaluator | None = None,
                 smoothness: str = ANALYTIC, domain: Domain | None = None,
                 d_field: Callable[[], "FormField"] | None = None, name: str = ""):
        if smoothness not in (ANALYTIC, MEASURABLE):
            raise ValueError(f"unknown smoothness tag {smoothness!r}")
        if domain is not None and domain.dim != dim:
            raise ValueError("domain dimension differs from the form's ambient dimension")
        self.degree = degree
        self.dim = dim
        self.coeff_eval = coeff_eval
        self.d_eval = d_eval
        self.smoothness = smoothness
        self.domain = domain
        self.d_field = d_field
        self.name = name

    @property
    def size(self) -> int:
        return comb(self.dim, self.degree)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.asarray(self.coeff_eval(x), dtype=float)
        return out.reshape(x.shape[0], self.size)

    def at(self, x) -> Covector:
        x = np.asarray(x, dtype=float).reshape(1, self.dim)
        if self.domain is not None and self.domain.in_excision(x)[0]:
            raise ValueError(f"point {x[0].tolist()} lies in an excision ball")
        return Covector(self.degree, self.dim, self(x)[0])

    def with_domain(self, domain: Domain) -> "FormField":
        return FormField(self.degree, self.dim, self.coeff_eval, self.d_eval, self.smoothness,
                         domain, self.d_field, self.name)

    def __repr__(self):
        return f"FormField({self.name or 'anonymous'}, k={self.degree}, m={self.dim}, {self.smoothness})"


def d_from_gradient(grad: np.ndarray, m: int, k: int) -> np.ndarray:
    """Exterior derivative from coefficient gradients.

    ``grad[..., I, j]`` is the derivative of coefficient ``I`` along ``x_j``;
    the coefficient of ``d theta`` on ``J = (j_0 < ... < j_k)`` is
    ``sum_p (-1)^p  d_{j_p} h_{J without j_p}``.
    """
    lead = grad.shape[:-2]
    if k + 1 > m:
        return np.zeros(lead + (0,))
    lookup = {I: r for r, I in enumerate(basis(m, k))}
    targets = basis(m, k + 1)
    out = np.empty(lead + (len(targets),))
    for t, J in enumerate(targets):
        acc = np.zeros(lead)
        for p, j in enumerate(J):
            term = grad[..., lookup[J[:p] + J[p + 1:]], j]
            acc = acc - term if p % 2 else acc + term
        out[..., t] = acc
    return out


def fd_gradient(fn: Evaluator, x: np.ndarray, step: float) -> np.ndarray:
    """Central differences of a vectorised ``fn: (N, m) -> (N, c)``; shape ``(N, c, m)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cols = []
    for j in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[j] = step
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * step))
    return np.stack(cols, axis=-1)


def _fd_step(theta: FormField, step: float | None) -> float:
    if step is not None:
        return step
    diameter = theta.domain.diameter if theta.domain is not None else 1.0
    return FD_RELATIVE_STEP * diameter


def zero_field(dim: int, degree: int, domain: Domain | None = None) -> FormField:
    size = comb(dim, degree)
    nxt = comb(dim, degree + 1)
    return FormField(degree, dim, lambda x: np.zeros((x.shape[0], size)),
                     lambda x: np.zeros((x.shape[0], nxt)), ANALYTIC, domain,
                     lambda: zero_field(dim, degree + 1, domain), name="zero")


def d_smooth(theta: FormField, step: float | None = None, fd_fallback: bool = True) -> FormField:
    """Exterior derivative of a smooth form field.

    Uses the analytic derivative when present; otherwise central differences
    with step ``1e-5 * diameter``.  Degree m yields the empty (m+1)-form.
    """
    k, m = theta.degree, theta.dim
    if k >= m:
        return zero_field(m, k + 1, theta.domain)
    if theta.d_field is not None:
        return theta.d_field()
    if theta.d_eval is not None:
        return FormField(k + 1, m, theta.d_eval, None, ANALYTIC, theta.domain,
                         name=f"d({theta.name})")
    if theta.smoothness != ANALYTIC and not fd_fallback:
        raise ValueError("measurable field has no derivative; request the finite-difference fallback")
    h = _fd_step(theta, step)

    def deval(x):
        return d_from_gradient(fd_gradient(theta, x, h), m, k)

    return FormField(k + 1, m, deval, None, ANALYTIC, theta.domain, name=f"d_fd({theta.name})")


def d_of_d_residual(theta: FormField, grid: QuadratureGrid, step: float | None = None) -> float:
    """Max over grid nodes of the max-norm of d(d theta); zero up to rounding."""
    dd = d_smooth(d_smooth(theta, step), step)
    if dd.size == 0:
        return 0.0
    vals = map_nodes(lambda x: max_norm(dd(x)), grid.nodes)
    return float(np.max(vals)) if vals.size else 0.0


# --- constructors -----------------------------------------------------------

def constant_form(c: Covector, domain: Domain | None = None) -> FormField:
    coeffs = np.array(c.coeffs)
    m, k = c.ambient_dim, c.degree
    nxt = comb(m, k + 1)
    return FormField(k, m, lambda x: np.broadcast_to(coeffs, (x.shape[0], coeffs.size)).copy(),
                     lambda x: np.zeros((x.shape[0], nxt)), ANALYTIC, domain,
                     lambda: zero_field(m, k + 1, domain), name=repr(c))


def polynomial_form(dim: int, degree: int, coefficients: dict, domain: Domain | None = None,
                    name: str = "") -> FormField:
    """Form with polynomial coefficients, ``{index_tuple (0-based): Polynomial}``.

    The exterior derivative is again a polynomial form, so d(d theta) is
    computed symbolically and cancels exactly.
    """
    polys = [Polynomial(dim) for _ in basis(dim, degree)]
    for idx, p in coefficients.items():
        if not isinstance(p, Polynomial):
            p = Polynomial.constant(dim, float(p))
        if p.dim != dim:
            raise ValueError("coefficient polynomial has wrong dimension")
        r = rank(tuple(idx), dim)
        polys[r] = polys[r] + p

    def coeff_eval(x):
        return np.stack([p(x) for p in polys], axis=-1) if polys else np.zeros((x.shape[0], 0))

    cache: list = []

    def derivative() -> FormField:
        if cache:
            return cache[0]
        if degree >= dim:
            return zero_field(dim, degree + 1, domain)
        dcoef: dict = {}
        for I, p in zip(basis(dim, degree), polys):
            for j in range(dim):
                if j in I:
                    continue
                dp = p.derivative(j)
                if dp.is_zero():
                    continue
                J = tuple(sorted(I + (j,)))
                sign = -1.0 if J.index(j) % 2 else 1.0
                dcoef[J] = dcoef.get(J, Polynomial(dim)) + dp * sign
        cache.append(polynomial_form(dim, degree + 1, dcoef, domain, name=f"d({name})"))
        return cache[0]

    def deval(x):
        return derivative()(x)

    field = FormField(degree, dim, coeff_eval, deval, ANALYTIC, domain, derivative, name or "polynomial")
    field.polynomials = tuple(polys)
    return field


def scalar_field(poly: Polynomial, domain: Domain | None = None, name: str = "") -> FormField:
    return polynomial_form(poly.dim, 0, {(): poly}, domain, name or "scalar")


def angle_form(scale: float = 0.5) -> FormField:
    """``scale * (y1 dy2 - y2 dy1)`` on R^2; with scale 1/2 its derivative is dy1^dy2."""
    return polynomial_form(2, 1, {(1,): Polynomial(2, {(1, 0): scale}),
                                  (0,): Polynomial(2, {(0, 1): -scale})}, name=f"angle({scale:g})")


def radial_power_scalar(dim: int, t: float, domain: Domain | None = None) -> FormField:
    """Scalar field ``|y|^t`` with gradient ``t |y|^(t-2) y`` (singular at 0 for t < 1)."""
    def f(x):
        return (np.sum(x * x, axis=1) ** (0.5 * t))[:, None]

    def df(x):
        r2 = np.sum(x * x, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = t * r2 ** (0.5 * t - 1.0)
        g = np.where(r2 > 0, g, 0.0)
        return d_from_gradient((g[:, None] * x)[:, None, :], dim, 0)

    return FormField(0, dim, f, df, ANALYTIC, domain, name=f"|y|^{t:g}")


def product(h: FormField, beta: FormField, step: float | None = None) -> FormField:
    """Pointwise product ``h * beta`` of a scalar field and a form; d by the Leibniz rule."""
    if h.degree != 0:
        raise ValueError("first factor must be a scalar field")
    if h.dim != beta.dim:
        raise ValueError("dimension mismatch")
    m, k = beta.dim, beta.degree

    def coeff(x):
        return h(x) * beta(x)

    dh = d_smooth(h, step)
    dbeta = d_smooth(beta, step)

    def deval(x):
        return wedge_coeffs(dh(x), beta(x), m, 1, k) + h(x) * dbeta(x)

    return FormField(k, m, coeff, deval, ANALYTIC, beta.domain or h.domain,
                     name=f"({h.name})*({beta.name})")


def wedge_fields(a: FormField, b: FormField, step: float | None = None) -> FormField:
    """Pointwise wedge; d by ``d(a^b) = da^b + (-1)^k a^db``."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    m, k, l = a.dim, a.degree, b.degree
    da, db = d_smooth(a, step), d_smooth(b, step)
    sign = -1.0 if k % 2 else 1.0

    def coeff(x):
        return wedge_coeffs(a(x), b(x), m, k, l)

    def deval(x):
        return (wedge_coeffs(da(x), b(x), m, k + 1, l)
                + sign * wedge_coeffs(a(x), db(x), m, k, l + 1))

    return FormField(k + l, m, coeff, deval, ANALYTIC, a.domain or b.domain,
                     name=f"({a.name})^({b.name})")


def linear_combination(terms: list[tuple[float, FormField]]) -> FormField:
    first = terms[0][1]
    k, m = first.degree, first.dim
    if any(f.degree != k or f.dim != m for _, f in terms):
        raise ValueError("all terms must share degree and dimension")
    ds = [(c, d_smooth(f)) for c, f in terms]

    def coeff(x):
        return sum(c * f(x) for c, f in terms)

    def deval(x):
        return sum(c * d(x) for c, d in ds)

    smooth = all(f.smoothness == ANALYTIC for _, f in terms)
    return FormField(k, m, coeff, deval, ANALYTIC if smooth else MEASURABLE, first.domain,
                     name="+".join(f.name for _, f in terms))


# --- compactly supported test forms ----------------------------------------

class TestForm(FormField):
    """Bump-profile form supported in a closed ball strictly inside the domain."""

    __test__ = False  # not a pytest class

    def __init__(self, domain: Domain, center, radius: float, amplitude: float,
                 pattern: MultiIndex, label: str = ""):
        center = np.asarray(center, dtype=float)
        m, l = domain.dim, pattern.degree
        if pattern.ambient_dim != m or center.shape != (m,):
            raise ValueError("test form pattern/center do not match the domain dimension")
        if not radius > 0:
            raise ValueError("support radius must be positive")
        if not domain.contains_ball(center, radius):
            raise ValueError(f"support ball at {center.tolist()} radius {radius} "
                             "is not compactly contained in the domain")
        self.center = center
        self.radius = float(radius)
        self.amplitude = float(amplitude)
        self.pattern = pattern
        self.label = label or f"{np.round(center, 6).tolist()}:{pattern.label()}"
        slot = rank(pattern)
        size, dsize = comb(m, l), comb(m, l + 1)

        def coeff(x):
            out = np.zeros((x.shape[0], size))
            out[:, slot] = self.profile(x)
            return out

        def deval(x):
            grad = np.zeros((x.shape[0], size, m))
            grad[:, slot, :] = self.profile_gradient(x)
            return d_from_gradient(grad, m, l)

        super().__init__(l, m, coeff, deval if l < m else (lambda x: np.zeros((x.shape[0], dsize))),
                         ANALYTIC, domain, name=f"bump[{self.label}]")

    def _u(self, x):
        d = np.atleast_2d(x) - self.center
        return d, np.sum(d * d, axis=1) / self.radius ** 2

    def profile(self, x) -> np.ndarray:
        """``amplitude * exp(1 - 1/(1 - |x-c|^2/r^2))`` inside the ball, 0 outside."""
        _, u = self._u(x)
        inside = u < 1.0
        gap = np.where(inside, 1.0 - u, 1.0)
        return np.where(inside, self.amplitude * np.exp(1.0 - 1.0 / gap), 0.0)

    def profile_gradient(self, x) -> np.ndarray:
        d, u = self._u(x)
        inside = u < 1.0
        gap = np.where(inside, 1.0 - u, 1.0)
        val = np.where(inside, self.amplitude * np.exp(1.0 - 1.0 / gap), 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            fac = np.where(val > 0, -2.0 * val / (gap * gap * self.radius ** 2), 0.0)
        return fac[:, None] * d


def bump_test_form(domain: Domain, center, radius: float, amplitude: float = 1.0,
                   pattern: MultiIndex | tuple = (), label: str = "") -> TestForm:
    if not isinstance(pattern, MultiIndex):
        pattern = MultiIndex(tuple(pattern), domain.dim)
    return TestForm(domain, center, radius, amplitude, pattern, label)


# --- Lp norms ---------------------------------------------------------------

def lp_norm(theta: FormField, p: float, grid: QuadratureGrid) -> float:
    """``(int_U |theta|^p)^(1/p)`` with the pointwise coefficient max-norm; p=inf is the node max."""
    if not (p == np.inf or p >= 1):
        raise ValueError("p must be >= 1 or inf")
    if p == np.inf:
        vals = node_values(lambda x: max_norm(theta(x)), grid)
        return float(np.max(vals)) if vals.size else 0.0
    total = quadrature_sum(lambda x: max_norm(theta(x)) ** p, grid)
    return total ** (1.0 / p)


@dataclass(frozen=True)
class MembershipReport:
    """Finite/divergent classification of an integral under excision refinement."""

    classification: str
    estimate: float
    values: tuple[float, ...]
    epsilons: tuple[float, ...]
    resolutions: tuple[tuple[int, ...], ...]

    @property
    def finite(self) -> bool:
        return self.classification == "finite"


def membership_report(integrand: Evaluator, domain: Domain, resolution, epsilon0: float,
                      levels: int = 3) -> MembershipReport:
    """Integrate a nonnegative integrand at excision radii eps0, eps0/2, ... .

    Resolution doubles with each halving, so cell size and excision radius
    keep a fixed ratio.
    """
    base = QuadratureGrid(domain, resolution, epsilon0)
    grids = base.schedule(levels)
    values = tuple(quadrature_sum(integrand, g) for g in grids)
    return MembershipReport(classify_growth(values), values[-1], values,
                            tuple(g.epsilon for g in grids), tuple(g.resolution for g in grids))


def lp_norm_report(theta: FormField, p: float, domain: Domain, resolution, epsilon0: float,
                   levels: int = 3) -> MembershipReport:
    """Lp membership of a form with singular points; ``estimate`` is the norm, not its p-th power."""
    rep = membership_report(lambda x: max_norm(theta(x)) ** p, domain, resolution, epsilon0, levels)
    return MembershipReport(rep.classification, rep.estimate ** (1.0 / p), rep.values,
                            rep.epsilons, rep.resolutions)
