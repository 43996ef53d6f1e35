"""Invariant suite run by ``weakchain selftest``.

Each property draws from a fixed-seed generator and returns a
:class:`PropertyResult`.  Setting ``exterior._UNSIGNED_WEDGE`` (the
``--inject-fault sign`` hook) drops shuffle signs from the wedge product,
which the antisymmetry properties must detect.
"""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from math import comb

import numpy as np

from . import exterior
from .domain import Domain
from .exterior import Covector, basis, rank, unrank, wedge
from .forms import bump_test_form, d_of_d_residual, polynomial_form, scalar_field
from .maps import compound, linear, polynomial, winding
from .polynomial import Polynomial
from .pullback import norm_inequality_check
from .quadrature import QuadratureGrid
from .weakcalc import naturality_decomposed_residual, pairing

SEED = 20240611
RELATIVE_TOL = 1e-12


@dataclass(frozen=True)
class PropertyResult:
    name: str
    trials: int
    violations: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


def _random_covector(rng, m, k) -> Covector:
    return Covector(k, m, rng.standard_normal(comb(m, k)))


def _tally(name, errors, tol) -> PropertyResult:
    errors = np.asarray(errors, dtype=float)
    return PropertyResult(name, int(errors.size), int(np.count_nonzero(~(errors <= tol))),
                          float(errors.max(initial=0.0)))


def wedge_laws(trials: int = 10_000, max_dim: int = 6, seed: int = SEED) -> list[PropertyResult]:
    """Anticommutativity, associativity and bilinearity on random covectors."""
    rng = np.random.default_rng(seed)
    anti, assoc, bilin = [], [], []
    for _ in range(trials):
        m = int(rng.integers(1, max_dim + 1))
        k, l = (int(v) for v in rng.integers(0, m + 1, size=2))
        j = int(rng.integers(0, m + 1))
        a, b = _random_covector(rng, m, k), _random_covector(rng, m, l)
        c = _random_covector(rng, m, j)
        ab, ba = wedge(a, b), wedge(b, a)
        anti.append(_rel(ab.coeffs, (-1) ** (k * l) * ba.coeffs))
        assoc.append(_rel(wedge(ab, c).coeffs, wedge(a, wedge(b, c)).coeffs))
        a2 = _random_covector(rng, m, k)
        s, t = rng.standard_normal(2)
        lhs = wedge(a * s + a2 * t, b).coeffs
        rhs = s * ab.coeffs + t * wedge(a2, b).coeffs
        bilin.append(_rel(lhs, rhs))
    return [_tally("wedge_anticommutativity", anti, RELATIVE_TOL),
            _tally("wedge_associativity", assoc, RELATIVE_TOL),
            _tally("wedge_bilinearity", bilin, RELATIVE_TOL)]


def rank_bijection(max_dim: int = 8) -> PropertyResult:
    errs = []
    for m in range(1, max_dim + 1):
        for k in range(m + 1):
            for r, idx in enumerate(basis(m, k)):
                mi = unrank(r, m, k)
                errs.append(0.0 if (mi.entries == idx and rank(mi) == r) else 1.0)
    return _tally("rank_unrank_bijection", errs, 0.0)


def cauchy_binet(trials: int = 1000, max_dim: int = 6, seed: int = SEED) -> PropertyResult:
    """``compound(A B) = compound(A) compound(B)`` for every k."""
    rng = np.random.default_rng(seed + 1)
    errs = []
    for _ in range(trials):
        n, p, m = (int(v) for v in rng.integers(1, max_dim + 1, size=3))
        a, b = rng.standard_normal((n, p)), rng.standard_normal((p, m))
        ab = a @ b
        for k in range(1, min(n, p, m) + 1):
            lhs = compound(ab, k)
            rhs = compound(a, k) @ compound(b, k)
            scale = max(1.0, float(np.max(np.abs(compound(a, k)))) * float(np.max(np.abs(compound(b, k)))))
            errs.append(float(np.max(np.abs(lhs - rhs))) / scale)
    return _tally("cauchy_binet", errs, 1e-9)


def compound_first(trials: int = 200, seed: int = SEED) -> PropertyResult:
    rng = np.random.default_rng(seed + 2)
    errs = []
    for _ in range(trials):
        n, m = (int(v) for v in rng.integers(1, 7, size=2))
        a = rng.standard_normal((n, m))
        errs.append(float(np.max(np.abs(compound(a, 1) - a))))
    return _tally("compound_k1_is_jacobian", errs, 0.0)


def dd_zero(seed: int = SEED) -> PropertyResult:
    """d(d theta) = 0 for random polynomial forms (symbolic route)."""
    rng = np.random.default_rng(seed + 3)
    errs = []
    for m in (2, 3, 4):
        dom = Domain.cube(m)
        grid = QuadratureGrid(dom, 4)
        for k in range(m - 1):
            for _ in range(3):
                coeffs = {}
                for idx in basis(m, k):
                    terms = {}
                    for _t in range(3):
                        e = tuple(int(v) for v in rng.integers(0, 3, size=m))
                        if sum(e) <= 4:
                            terms[e] = float(rng.standard_normal())
                    coeffs[idx] = Polynomial(m, terms)
                errs.append(d_of_d_residual(polynomial_form(m, k, coeffs, dom), grid))
    return _tally("dd_zero", errs, 1e-12)


def norm_inequality(trials: int = 300, seed: int = SEED) -> PropertyResult:
    """``|f^* alpha| <= C(n,k) |Lambda^k f| |alpha|`` with max-norms."""
    rng = np.random.default_rng(seed + 4)
    errs = []
    for _ in range(trials):
        m, n = (int(v) for v in rng.integers(1, 6, size=2))
        k = int(rng.integers(1, min(m, n) + 1))
        f = linear(rng.standard_normal((n, m)))
        chk = norm_inequality_check(f, _random_covector(rng, n, k), rng.standard_normal(m))
        errs.append(0.0 if chk.holds else chk.lhs - chk.factor * chk.rhs)
    return _tally("norm_inequality", errs, 0.0)


def route_equivalence(seed: int = SEED) -> PropertyResult:
    """Product-route and direct chain-rule residuals agree on ``a * gamma``."""
    rng = np.random.default_rng(seed + 5)
    dom = Domain.cube(2, 0.5, center=(0.5, 0.5))
    grid = QuadratureGrid(dom, 16)
    x = [Polynomial.variable(2, 0), Polynomial.variable(2, 1)]
    smooth = polynomial([x[0] + x[1] * x[1] * 0.3, x[1] - x[0] * x[0] * 0.2])
    gammas = [polynomial_form(2, 1, {(0,): 1.0}), polynomial_form(2, 1, {(1,): 2.0}),
              polynomial_form(2, 1, {(0,): Polynomial.variable(2, 1), (1,): Polynomial.variable(2, 0)})]
    errs = []
    for _ in range(2):
        c = rng.standard_normal(3)
        a = scalar_field(Polynomial(2, {(0, 0): c[0], (1, 0): c[1], (1, 1): c[2]}))
        for g in gammas:
            phi = bump_test_form(dom, dom.center, 0.45)
            rep = naturality_decomposed_residual(smooth, a, g, phi, grid, levels=2)
            errs.append(rep.metadata["route_gap"])
    wgrid = QuadratureGrid(Domain.cube(2), 16, 0.25)
    phi = bump_test_form(wgrid.domain, (0.0, 0.0), 0.8)
    # the angle form split as (y1/2) dy2 + (-y2/2) dy1
    for a, g in ((Polynomial.variable(2, 0, 0.25), gammas[1]), (Polynomial.variable(2, 1, -0.5), gammas[0])):
        rep = naturality_decomposed_residual(winding(), scalar_field(a), g, phi, wgrid, levels=2)
        errs.append(rep.metadata["route_gap"])
    return _tally("route_equivalence", errs, 1e-8)


def pairing_antisymmetry(seed: int = SEED) -> PropertyResult:
    """``int theta ^ omega = (-1)^(k(m-k)) int omega ^ theta``."""
    rng = np.random.default_rng(seed + 6)
    errs = []
    for m in (2, 3, 4):
        dom = Domain.cube(m)
        grid = QuadratureGrid(dom, 6)
        for k in range(m + 1):
            def rand_form(deg):
                coeffs = {idx: Polynomial(m, {(0,) * m: float(rng.standard_normal()),
                                               tuple(int(v) for v in rng.integers(0, 2, size=m)):
                                                   float(rng.standard_normal())})
                          for idx in basis(m, deg)}
                return polynomial_form(m, deg, coeffs)
            th, om = rand_form(k), rand_form(m - k)
            lhs = pairing(th, om, grid)
            rhs = (-1) ** (k * (m - k)) * pairing(om, th, grid)
            errs.append(abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    return _tally("pairing_antisymmetry", errs, 1e-10)


@contextmanager
def fault(kind: str | None):
    """Temporarily inject a fault; only ``"sign"`` exists."""
    if kind not in (None, "sign"):
        raise ValueError(f"unknown fault {kind!r}")
    old = exterior._UNSIGNED_WEDGE
    exterior._UNSIGNED_WEDGE = kind == "sign"
    try:
        yield
    finally:
        exterior._UNSIGNED_WEDGE = old


def run_all(inject_fault: str | None = None, trials: int = 10_000) -> list[PropertyResult]:
    with fault(inject_fault):
        results = wedge_laws(trials)
        results += [rank_bijection(), cauchy_binet(), compound_first(), dd_zero(), norm_inequality(),
                    route_equivalence(), pairing_antisymmetry()]
    return results


def rows(results: list[PropertyResult]) -> list[tuple[str, ...]]:
    return [("selftest", r.name, "", "", "", f"trials={r.trials}", repr(r.worst), str(r.violations), "",
             "pass" if r.passed else "fail") for r in results]
