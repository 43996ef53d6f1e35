"""Pairings, weak-derivative residuals and the naturality residual.

A k-form theta has weak derivative psi when, for every compactly supported
test form phi of degree m-k-1,

    int theta ^ d phi  =  (-1)^(k+1) int psi ^ phi.

Every functional here evaluates the left side minus the right side on a
sequence of grids (resolution doubling, excision radius halving) and turns
the sequence into a :class:`ResidualReport` with a verdict.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import Domain
from .exterior import basis, max_norm, wedge_coeffs
from .forms import FormField, TestForm, bump_test_form, d_smooth, product
from .maps import MapModel, w11_distance
from .pullback import pullback_coeffs, pullback_field
from .quadrature import QuadratureGrid, convergence_slope, map_nodes, quadrature_sum

DEFAULT_TOL = 1e-6
STABILITY = 0.05
DEFAULT_LEVELS = 4

HOLDS, FAILS, INCONCLUSIVE = "holds", "fails", "inconclusive"


@dataclass(frozen=True)
class ResidualReport:
    """Residual of a weak identity across refinement levels.

    ``residual`` is the finest-level value and ``error_estimate`` the change
    from the previous level.  ``verdict`` is ``holds`` when the finest
    residual is within ``tol = max(tol_abs, 10 * error_estimate)`` and the
    sequence decays; ``fails`` when the last three levels agree within 5% on
    a nonzero value; otherwise ``inconclusive``.
    """

    residual: float
    values: tuple[float, ...]
    error_estimate: float
    slope: float | None
    verdict: str
    tol: float
    resolutions: tuple[tuple[int, ...], ...]
    epsilons: tuple[float | None, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def level_errors(self) -> tuple[float | None, ...]:
        v = self.values
        return (None,) + tuple(abs(v[i] - v[i - 1]) for i in range(1, len(v)))


def verdict_for(values: Sequence[float], tol_abs: float = DEFAULT_TOL) -> tuple[str, float, float, float | None]:
    """Return ``(verdict, tol, error_estimate, slope)`` for a residual sequence."""
    v = np.asarray(values, dtype=float)
    r = np.abs(v)
    err = float(abs(v[-1] - v[-2])) if v.size > 1 else float("inf")
    tol = max(tol_abs, 10.0 * err)
    slope = convergence_slope(v) if v.size > 2 else None
    decaying = slope is None or slope < 0 or bool(np.all(r <= tol_abs))
    if r[-1] <= tol and decaying:
        return HOLDS, tol, err, slope
    if v.size >= 3:
        last = v[-3:]
        same_sign = np.all(last > 0) or np.all(last < 0)
        spread = (last.max() - last.min()) / np.max(np.abs(last))
        if same_sign and np.all(np.abs(last) > tol_abs) and spread <= STABILITY and r[-1] > tol:
            return FAILS, tol, err, slope
    return INCONCLUSIVE, tol, err, slope


def _report(values, grids, tol_abs, **metadata) -> ResidualReport:
    verdict, tol, err, slope = verdict_for(values, tol_abs)
    return ResidualReport(float(values[-1]), tuple(float(v) for v in values), err, slope, verdict, tol,
                          tuple(g.resolution for g in grids), tuple(g.epsilon for g in grids),
                          dict(metadata))


def _top(theta_c: np.ndarray, omega_c: np.ndarray, m: int, k: int) -> np.ndarray:
    return wedge_coeffs(theta_c, omega_c, m, k, m - k)[:, 0]


def pairing(theta: FormField, omega: FormField, grid: QuadratureGrid) -> float:
    """``int_U theta ^ omega`` for degrees summing to the dimension."""
    m = grid.domain.dim
    if theta.dim != m or omega.dim != m:
        raise ValueError("forms and grid live in different dimensions")
    if theta.degree + omega.degree != m:
        raise ValueError(f"degrees {theta.degree} + {omega.degree} do not sum to {m}")
    k = theta.degree
    return quadrature_sum(lambda x: _top(theta(x), omega(x), m, k), grid)


def _require_test_form(phi) -> None:
    if not isinstance(phi, TestForm):
        raise TypeError("the test form must be a compactly supported TestForm")


def with_singularities(grid: QuadratureGrid, points) -> QuadratureGrid:
    """Grid whose domain also excises ``points`` (radius: grid epsilon or two cells)."""
    points = [p for p in points if tuple(p) not in {q for q, _ in grid.domain.excluded}]
    if not points:
        return grid
    radius = grid.epsilon or 2.0 * float(np.min(grid.spacing))
    return QuadratureGrid(grid.domain.with_excluded(points, radius), grid.resolution, grid.epsilon)


def _weak_residual_integrand(theta_fn, psi_fn, phi: TestForm, k: int, m: int):
    dphi = d_smooth(phi)
    sign = 1.0 if (k + 1) % 2 == 0 else -1.0

    def g(x):
        lhs = _top(theta_fn(x), dphi(x), m, k)
        rhs = _top(psi_fn(x), phi(x), m, k + 1)
        return lhs - sign * rhs

    return g


def _levels(grid: QuadratureGrid, levels: int) -> list[QuadratureGrid]:
    if levels < 2:
        raise ValueError("need at least two refinement levels")
    return grid.schedule(levels)


def weak_derivative_residual(theta: FormField, psi: FormField, phi: TestForm, grid: QuadratureGrid,
                             levels: int = DEFAULT_LEVELS, tol: float = DEFAULT_TOL) -> ResidualReport:
    """Residual of ``int theta ^ d phi - (-1)^(k+1) int psi ^ phi``."""
    _require_test_form(phi)
    m, k = grid.domain.dim, theta.degree
    if psi.degree != k + 1 or phi.degree != m - k - 1:
        raise ValueError(f"degrees theta={k}, psi={psi.degree}, phi={phi.degree} are inconsistent in R^{m}")
    g = _weak_residual_integrand(theta, psi, phi, k, m)
    grids = _levels(grid, levels)
    values = [quadrature_sum(g, gr) for gr in grids]
    return _report(values, grids, tol, check="weak_derivative", test_form=phi.label, k=k)


def weak_closedness_residual(theta: FormField, phi: TestForm, grid: QuadratureGrid,
                             levels: int = DEFAULT_LEVELS, tol: float = DEFAULT_TOL) -> ResidualReport:
    """``int theta ^ d phi``, which vanishes for every phi iff theta is weakly closed."""
    m, k = grid.domain.dim, theta.degree
    zero = FormField(k + 1, m, lambda x: np.zeros((x.shape[0], len(basis(m, k + 1)))))
    rep = weak_derivative_residual(theta, zero, phi, grid, levels, tol)
    rep.metadata["check"] = "weak_closedness"
    return rep


def naturality_residual(f: MapModel, alpha: FormField, phi: TestForm, grid: QuadratureGrid,
                        levels: int = DEFAULT_LEVELS, tol: float = DEFAULT_TOL) -> ResidualReport:
    """Residual of the chain rule ``d f^*alpha = f^* d alpha`` tested against ``phi``.

    Computes ``int f^*alpha ^ d phi - (-1)^(k+1) int f^*(d alpha) ^ phi`` on
    each level; the map's singular points are excised.
    """
    _require_test_form(phi)
    m, n, k = f.source_dim, f.target_dim, alpha.degree
    if alpha.dim != n or grid.domain.dim != m:
        raise ValueError("dimensions of map, form and grid do not match")
    if phi.degree != m - k - 1:
        raise ValueError(f"test form must have degree {m - k - 1}, got {phi.degree}")
    theta = pullback_field(f, alpha)
    psi = pullback_field(f, d_smooth(alpha))
    g = _weak_residual_integrand(theta, psi, phi, k, m)
    grids = _levels(with_singularities(grid, f.singular_points), levels)
    values = [quadrature_sum(g, gr) for gr in grids]
    return _report(values, grids, tol, check="naturality", test_form=phi.label, k=k,
                   map=f.family, form=alpha.name)


def _assert_closed(gamma: FormField, grid: QuadratureGrid, tol: float = 1e-10) -> None:
    dg = d_smooth(gamma)
    if dg.size == 0:
        return
    vals = map_nodes(lambda x: max_norm(dg(x)), grid.nodes)
    scale = 1.0 + float(np.max(map_nodes(lambda x: max_norm(gamma(x)), grid.nodes)))
    if vals.size and float(np.max(vals)) > tol * scale:
        raise ValueError(f"gamma is not closed: |d gamma| reaches {float(np.max(vals)):.3g}")


def naturality_decomposed_residual(f: MapModel, a: FormField, gamma: FormField, phi: TestForm,
                                   grid: QuadratureGrid, levels: int = DEFAULT_LEVELS,
                                   tol: float = DEFAULT_TOL) -> ResidualReport:
    """Chain-rule residual for ``alpha = a * gamma`` with ``gamma`` closed, by the product route.

    The weak derivative of ``(a o f) * f^*gamma`` is compared with
    ``f^*(da) ^ f^*gamma``.  The same residual is also computed directly by
    :func:`naturality_residual` on ``a * gamma``; the largest per-level gap
    between the two routes is stored in ``metadata["route_gap"]``.
    """
    _require_test_form(phi)
    if a.degree != 0:
        raise ValueError("a must be a scalar field")
    m, n, k = f.source_dim, f.target_dim, gamma.degree
    _assert_closed(gamma, QuadratureGrid(Domain.cube(n, 1.0), 8))
    da = d_smooth(a)

    def theta(x):
        y = f(x)
        return pullback_coeffs(f, a(y), x, 0) * pullback_coeffs(f, gamma(y), x, k)

    def psi(x):
        y = f(x)
        return wedge_coeffs(pullback_coeffs(f, da(y), x, 1), pullback_coeffs(f, gamma(y), x, k), m, 1, k)

    g = _weak_residual_integrand(theta, psi, phi, k, m)
    grids = _levels(with_singularities(grid, f.singular_points), levels)
    values = [quadrature_sum(g, gr) for gr in grids]
    direct = naturality_residual(f, product(a, gamma), phi, grid, levels, tol)
    gap = float(np.max(np.abs(np.array(values) - np.array(direct.values))))
    return _report(values, grids, tol, check="naturality_decomposed", test_form=phi.label, k=k,
                   map=f.family, route_gap=gap, direct_values=direct.values)


def leibniz_residual(h: FormField, beta: FormField, phi: TestForm, grid: QuadratureGrid,
                     levels: int = DEFAULT_LEVELS, tol: float = DEFAULT_TOL) -> ResidualReport:
    """Weak-derivative residual of ``h * beta`` against ``dh ^ beta + h * d beta``."""
    if h.degree != 0:
        raise ValueError("h must be a scalar field")
    m, k = beta.dim, beta.degree
    dh, dbeta = d_smooth(h), d_smooth(beta)
    theta = FormField(k, m, lambda x: h(x) * beta(x))
    psi = FormField(k + 1, m, lambda x: wedge_coeffs(dh(x), beta(x), m, 1, k) + h(x) * dbeta(x))
    rep = weak_derivative_residual(theta, psi, phi, grid, levels, tol)
    rep.metadata["check"] = "leibniz"
    return rep


def default_battery(domain: Domain, degree: int, singular_points=(), radius: float | None = None,
                    amplitude: float = 1.0, centers=None) -> list[TestForm]:
    """Bumps at the domain center, at each singular point and at one generic point.

    Every basis pattern of the requested degree is used at each location.
    With ``half`` the smallest half-width of the box, the center bump has
    radius ``0.9 * half`` (or ``radius``), singular-point bumps the same
    radius shrunk to fit, and the generic bump sits at ``0.2 * half`` off
    center with radius at most ``0.75 * half`` and clear of every singular
    point.  Coincident locations are merged.  ``centers`` replaces the
    automatic locations by explicit ``(label, center, radius)`` triples.
    """
    m = domain.dim
    if not 0 <= degree <= m:
        raise ValueError(f"no test forms of degree {degree} in R^{m}")
    lo, hi = np.array(domain.lower), np.array(domain.upper)
    half = 0.5 * float(np.min(domain.widths))
    singular = [np.asarray(p, dtype=float) for p in singular_points]

    def room(c):
        return float(np.min(np.minimum(c - lo, hi - c)))

    if centers is None:
        base = 0.9 * half if radius is None else float(radius)
        direction = np.array([1.0, -0.8, 0.6, -0.4, 0.9, -0.7, 0.5, -0.3, 0.8, -0.6, 0.4, -0.2])[:m]
        generic = domain.center + 0.2 * half * direction
        g_rad = min(0.75 * half if radius is None else float(radius), 0.95 * room(generic))
        for p in singular:
            d = float(np.linalg.norm(generic - p))
            if d > 0:
                g_rad = min(g_rad, 0.9 * d)
        spots = [("center", domain.center, min(base, 0.95 * room(domain.center)))]
        for i, p in enumerate(singular):
            spots.append((f"singular{i + 1}", p, min(base, 0.95 * room(p))))
        spots.append(("generic", generic, g_rad))
    else:
        spots = [(label, np.asarray(c, dtype=float), float(r)) for label, c, r in centers]
        if not spots:
            raise ValueError("empty test-form battery")
    kept = []
    for label, c, r in spots:
        if any(np.linalg.norm(c - c2) < 1e-12 for _, c2, _ in kept):
            continue
        kept.append((label, c, r))
    battery = []
    for label, c, r in kept:
        for pattern in basis(m, degree):
            pat = "".join(f"dx{i + 1}" for i in pattern) or "1"
            battery.append(bump_test_form(domain, c, r, amplitude, pattern, label=f"{label}:{pat}"))
    return battery


@dataclass(frozen=True)
class TauReport:
    """``lambdas[a, w, j]`` = int f_j^* alpha_a ^ omega_w; ``deltas`` against the limit map."""

    lambdas: np.ndarray
    limit: np.ndarray
    deltas: np.ndarray
    w11: np.ndarray


def tau_convergence_report(f_seq: Sequence[MapModel], f: MapModel, alphas: Sequence[FormField],
                           omegas: Sequence[FormField], grid: QuadratureGrid) -> TauReport:
    """Evaluate ``lambda_{alpha,omega}(f_j)`` along a sequence of maps and at the limit."""
    if not alphas or not omegas:
        raise ValueError("batteries must be nonempty")
    grid = with_singularities(grid, f.singular_points)
    lam = np.zeros((len(alphas), len(omegas), len(f_seq)))
    lim = np.zeros((len(alphas), len(omegas)))
    for a, alpha in enumerate(alphas):
        for w, omega in enumerate(omegas):
            lim[a, w] = pairing(pullback_field(f, alpha), omega, grid)
            for j, fj in enumerate(f_seq):
                lam[a, w, j] = pairing(pullback_field(fj, alpha), omega, grid)
    w11 = np.array([w11_distance(fj, f, grid) for fj in f_seq])
    return TauReport(lam, lim, np.abs(lam - lim[:, :, None]), w11)
