"""Tensor midpoint quadrature on boxes with excision of singular points.

Every integral in the package goes through :func:`integrate` or
:func:`quadrature_sum`.  Integrands are evaluated in fixed-size chunks (the
chunk boundaries never depend on the thread count) and reduced with numpy's
pairwise summation over the concatenated node values, so results are
bit-identical for any ``WEAKCHAIN_THREADS`` setting.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .domain import Domain

CHUNK = 1 << 15

# relative growth per halving and minimal increment ratio for "divergent"
GROWTH_THRESHOLD = 0.05
INCREMENT_RATIO_MIN = 0.9


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("WEAKCHAIN_THREADS", "1")))
    except ValueError:
        return 1


def map_nodes(fn: Callable[[np.ndarray], np.ndarray], nodes: np.ndarray) -> np.ndarray:
    """Apply a vectorised ``fn`` to ``nodes`` chunk by chunk, preserving order."""
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.shape[0]
    if n == 0:
        return np.asarray(fn(nodes))
    chunks = [nodes[i:i + CHUNK] for i in range(0, n, CHUNK)]
    threads = thread_count()
    if threads == 1 or len(chunks) == 1:
        parts = [np.asarray(fn(c)) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = [np.asarray(p) for p in pool.map(fn, chunks)]
    return np.concatenate(parts, axis=0)


@dataclass(frozen=True)
class QuadratureGrid:
    """Midpoint grid on a :class:`Domain`.

    ``resolution`` is the number of cells per axis (an int applies to every
    axis).  Nodes within ``epsilon`` of an excluded point are dropped; when
    ``epsilon`` is None each point's own radius from the domain is used.
    """

    domain: Domain
    resolution: tuple[int, ...]
    epsilon: float | None = None

    def __post_init__(self):
        res = self.resolution
        if np.isscalar(res):
            res = (int(res),) * self.domain.dim
        res = tuple(int(r) for r in res)
        if len(res) != self.domain.dim or any(r < 1 for r in res):
            raise ValueError(f"bad resolution {res} for a {self.domain.dim}-dimensional box")
        object.__setattr__(self, "resolution", res)
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("excision radius must be positive")

    @cached_property
    def spacing(self) -> np.ndarray:
        return self.domain.widths / np.array(self.resolution)

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def _all_nodes(self) -> np.ndarray:
        axes = [lo + (np.arange(r) + 0.5) * h
                for lo, r, h in zip(self.domain.lower, self.resolution, self.spacing)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=1)

    @cached_property
    def _keep(self) -> np.ndarray:
        return ~self.domain.in_excision(self._all_nodes, self.epsilon)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self._all_nodes[self._keep]
        x.setflags(write=False)
        return x

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.nodes.shape[0], self.cell_volume)

    @property
    def excised_volume(self) -> float:
        return float(np.count_nonzero(~self._keep)) * self.cell_volume

    def refined(self, levels: int = 1) -> "QuadratureGrid":
        """Resolution doubled and excision radius halved ``levels`` times."""
        f = 2 ** levels
        eps = None if self.epsilon is None else self.epsilon / f
        if eps is None and self.domain.excluded:
            dom = Domain(self.domain.lower, self.domain.upper,
                         tuple((p, r / f) for p, r in self.domain.excluded))
            return QuadratureGrid(dom, tuple(r * f for r in self.resolution))
        return QuadratureGrid(self.domain, tuple(r * f for r in self.resolution), eps)

    def coarsened(self) -> "QuadratureGrid":
        """Half the resolution at the same excision radius."""
        return QuadratureGrid(self.domain, tuple(max(1, r // 2) for r in self.resolution),
                              self.epsilon)

    def schedule(self, levels: int) -> list["QuadratureGrid"]:
        return [self.refined(l) for l in range(levels)]


@dataclass(frozen=True)
class Integral:
    value: float
    error_estimate: float


def node_values(g: Callable[[np.ndarray], np.ndarray], grid: QuadratureGrid) -> np.ndarray:
    vals = map_nodes(lambda x: np.asarray(g(x), dtype=float).reshape(x.shape[0]), grid.nodes)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        node = grid.nodes[np.argmax(bad)]
        raise FloatingPointError(f"integrand not finite at node {tuple(node.tolist())}")
    return vals


def quadrature_sum(g: Callable[[np.ndarray], np.ndarray], grid: QuadratureGrid) -> float:
    """Midpoint sum of a vectorised integrand ``g: (N, m) -> (N,)``."""
    return float(grid.cell_volume * np.sum(node_values(g, grid)))


def integrate(g: Callable[[np.ndarray], np.ndarray], grid: QuadratureGrid) -> Integral:
    """Midpoint value with error estimate ``|I(res) - I(res/2)|``."""
    value = quadrature_sum(g, grid)
    coarse = quadrature_sum(g, grid.coarsened())
    return Integral(value, abs(value - coarse))


def convergence_slope(values) -> float | None:
    """Least-squares slope of ``log2 |v_l - v_{l+1}|`` against the level.

    None when successive values are identical (nothing left to converge) or
    fewer than two nonzero increments exist.
    """
    d = np.abs(np.diff(np.asarray(values, dtype=float)))
    levels = np.arange(d.size)
    pos = d > 0
    if np.count_nonzero(pos) < 2:
        return None
    return float(np.polyfit(levels[pos], np.log2(d[pos]), 1)[0])


def classify_growth(values) -> str:
    """``"divergent"`` or ``"finite"`` for integrals at shrinking excision radii.

    Divergent means every halving grows the value by more than
    ``GROWTH_THRESHOLD`` (relative) and the increments do not shrink faster
    than ``INCREMENT_RATIO_MIN``.  A convergent power-law tail has increments
    that contract geometrically; a logarithmic one keeps them constant, and is
    reported divergent by convention.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        raise ValueError("need at least three excision levels")
    if not np.all(np.isfinite(v)):
        return "divergent"
    inc = np.diff(v)
    base = np.abs(v[:-1])
    if np.any(base == 0) or np.any(inc / base <= GROWTH_THRESHOLD):
        return "finite"
    if np.any(inc[1:] < INCREMENT_RATIO_MIN * inc[:-1]):
        return "finite"
    return "divergent"


@dataclass(frozen=True)
class Refinement:
    values: tuple[float, ...]
    resolutions: tuple[tuple[int, ...], ...]
    epsilons: tuple[float | None, ...]
    slope: float | None
    converged: bool
    extrapolated: float
    classification: str = field(default="finite")


def refine_and_extrapolate(g, grid: QuadratureGrid, levels: int = 3) -> Refinement:
    """Integrate over ``levels`` refinements (resolution x2, excision /2 each).

    The extrapolated value assumes geometric increments with the fitted rate.
    """
    if levels < 3:
        raise ValueError("at least three levels are required")
    grids = grid.schedule(levels)
    values = [quadrature_sum(g, gr) for gr in grids]
    slope = convergence_slope(values)
    converged = slope is None
    if converged:
        extrapolated = values[-1]
    elif slope < 0:
        rho = 2.0 ** slope
        extrapolated = values[-1] + (values[-1] - values[-2]) * rho / (1 - rho)
    else:
        extrapolated = float("nan")
    return Refinement(tuple(values), tuple(gr.resolution for gr in grids),
                      tuple(gr.epsilon for gr in grids), slope, converged,
                      float(extrapolated), classify_growth(values))
