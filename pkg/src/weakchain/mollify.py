"""Mollified approximating sequences and stability diagnostics.

``f_eps = f * rho_eps`` is evaluated by a fixed midpoint rule on the kernel
ball; its Jacobian is the convolution of f with the kernel gradient.  Both
weight sets are renormalised so that constants and affine maps are
reproduced exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .domain import Domain
from .maps import MapModel, lambda_norm_values
from .quadrature import QuadratureGrid, classify_growth, map_nodes

KERNEL_POINTS = 16
_SUBCHUNK = 2048


@lru_cache(maxsize=None)
def _unit_kernel(m: int, points: int):
    h = 2.0 / points
    axis = -1.0 + (np.arange(points) + 0.5) * h
    z = np.stack([g.reshape(-1) for g in np.meshgrid(*([axis] * m), indexing="ij")], axis=1)
    u = np.sum(z * z, axis=1)
    z = z[u < 1.0]
    u = u[u < 1.0]
    rho = np.exp(1.0 - 1.0 / (1.0 - u))
    grad = (-2.0 * rho / (1.0 - u) ** 2)[:, None] * z
    w = rho / np.sum(rho)
    g = grad / np.sum(rho)
    # affine exactness: sum_i z_i g_i^T must equal -I
    moment = z.T @ g
    g = g @ np.linalg.inv(-moment).T
    for arr in (z, w, g):
        arr.setflags(write=False)
    return z, w, g


def mollifier_kernel(m: int, eps: float, points: int = KERNEL_POINTS):
    """Nodes, value weights (sum 1) and gradient weights of rho_eps on the ball of radius eps.

    The gradient weights satisfy ``sum_i z_i g_i^T = -I`` exactly, so the
    mollified Jacobian of an affine map is its linear part.
    """
    z, w, g = _unit_kernel(m, points)
    return z * eps, w, g / eps


def mollify(f: MapModel, eps: float, domain: Domain, points: int = KERNEL_POINTS) -> MapModel:
    """``f * rho_eps`` on the shrunken box ``{x : dist(x, boundary) > eps}``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    inner = domain.shrunk(eps)
    lo, hi = np.array(inner.lower), np.array(inner.upper)
    z, w, g = mollifier_kernel(f.source_dim, eps, points)
    m, n = f.source_dim, f.target_dim

    def samples(x):
        if np.any(x < lo) or np.any(x > hi):
            raise ValueError(f"mollified map at eps={eps} is only defined on the shrunken domain")
        y = (x[:, None, :] - z[None, :, :]).reshape(-1, m)
        return f(y).reshape(x.shape[0], z.shape[0], n)

    def ev(x):
        out = np.empty((x.shape[0], n))
        for i in range(0, x.shape[0], _SUBCHUNK):
            out[i:i + _SUBCHUNK] = np.einsum("nka,k->na", samples(x[i:i + _SUBCHUNK]), w)
        return out

    def jac(x):
        out = np.empty((x.shape[0], n, m))
        for i in range(0, x.shape[0], _SUBCHUNK):
            out[i:i + _SUBCHUNK] = np.einsum("nka,kb->nab", samples(x[i:i + _SUBCHUNK]), g)
        return out

    return MapModel(m, n, ev, jac, (), family=f"mollified({f.family})",
                    params={"eps": eps, **f.params})


def default_schedule(domain: Domain, levels: int = 4) -> list[float]:
    """``eps_0 * 2^-l`` with ``eps_0 = 0.1 * diameter``."""
    eps0 = 0.1 * domain.diameter
    return [eps0 * 2.0 ** -l for l in range(levels)]


@dataclass(frozen=True)
class StabilityReport:
    """``per_eps[j] = int |Lambda^k f_eps_j|``; ``envelope[j]`` integrates the max over the first j+1."""

    degree: int
    epsilons: tuple[float, ...]
    per_eps: tuple[float, ...]
    envelope: tuple[float, ...]
    verdict: str

    @property
    def envelope_integral(self) -> float:
        return self.envelope[-1]

    @property
    def bounded(self) -> bool:
        return self.verdict == "bounded"


def stability_diagnostic(f: MapModel, k: int, schedule, domain: Domain, grid=128) -> StabilityReport:
    """Integrability of ``sup_j |Lambda^k f_j|`` along a mollifier sequence.

    The envelope integral is recomputed as each finer ``eps`` joins and the
    sequence is classified with the excision growth rule: ``blow-up`` when
    it keeps growing without contracting increments, else ``bounded``.  A
    bounded verdict is one-sided evidence: only the mollifier sequence is
    examined.  ``grid`` is a resolution on ``domain`` shrunk by the largest
    eps, or a ready grid that must lie inside that shrunken box.
    """
    eps = sorted((float(e) for e in schedule), reverse=True)
    if len(eps) < 3:
        raise ValueError("the schedule needs at least three values")
    inner = domain.shrunk(eps[0])
    if not isinstance(grid, QuadratureGrid):
        grid = QuadratureGrid(inner, grid)
    elif np.any(np.array(grid.domain.lower) < np.array(inner.lower)) or \
            np.any(np.array(grid.domain.upper) > np.array(inner.upper)):
        raise ValueError("grid must lie inside the domain shrunk by the largest eps")
    norms = []
    for e in eps:
        fe = mollify(f, e, domain)
        norms.append(map_nodes(lambda x: lambda_norm_values(fe, x, k), grid.nodes))
    vol = grid.cell_volume
    per_eps = tuple(float(vol * np.sum(v)) for v in norms)
    env = norms[0].copy()
    envelope = [float(vol * np.sum(env))]
    for v in norms[1:]:
        env = np.maximum(env, v)
        envelope.append(float(vol * np.sum(env)))
    verdict = "blow-up" if classify_growth(envelope) == "divergent" else "bounded"
    return StabilityReport(k, tuple(eps), per_eps, tuple(envelope), verdict)


@dataclass(frozen=True)
class KDaggerReport:
    reports: tuple[StabilityReport, ...]
    verdict: str

    @property
    def stable(self) -> bool:
        return self.verdict == "k-dagger-stable"


def kdagger_diagnostic(f: MapModel, k: int, schedule, domain: Domain, grid=128) -> KDaggerReport:
    """Joint stability evidence in degrees k and k+1 (only k when k equals the target dimension)."""
    n = f.target_dim
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    degrees = [k] if k == n else [k, k + 1]
    reports = tuple(stability_diagnostic(f, d, schedule, domain, grid) for d in degrees)
    ok = all(r.bounded for r in reports)
    return KDaggerReport(reports, "k-dagger-stable" if ok else "not-k-dagger")
