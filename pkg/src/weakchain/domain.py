"""Axis-aligned box domains with excised singular points."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Domain:
    """Box ``[lower, upper]`` in R^m with a finite set of excised points.

    ``excluded`` holds ``(point, radius)`` pairs; every point must lie in the
    open box and every radius must be positive.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    excluded: tuple[tuple[tuple[float, ...], float], ...] = ()

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper corners must have the same positive length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"box {lo} x {hi} has empty interior")
        ex = []
        for point, radius in self.excluded:
            p = tuple(float(v) for v in point)
            if len(p) != len(lo):
                raise ValueError(f"excluded point {p} has wrong dimension")
            if not all(a < v < b for a, v, b in zip(lo, p, hi)):
                raise ValueError(f"excluded point {p} is not inside the box")
            if not radius > 0:
                raise ValueError("excision radius must be positive")
            ex.append((p, float(radius)))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "excluded", tuple(ex))

    @classmethod
    def cube(cls, m: int, half_width: float = 1.0, center=None, excluded=()) -> "Domain":
        c = np.zeros(m) if center is None else np.asarray(center, dtype=float)
        return cls(tuple(c - half_width), tuple(c + half_width), tuple(excluded))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.array(self.lower) + np.array(self.upper))

    @property
    def widths(self) -> np.ndarray:
        return np.array(self.upper) - np.array(self.lower)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def singular_points(self) -> list[np.ndarray]:
        return [np.array(p) for p, _ in self.excluded]

    def with_excluded(self, points, radius: float) -> "Domain":
        """Copy with extra excised points (duplicates are dropped)."""
        ex = list(self.excluded)
        known = {p for p, _ in ex}
        for p in points:
            p = tuple(float(v) for v in p)
            if p not in known:
                ex.append((p, radius))
                known.add(p)
        return Domain(self.lower, self.upper, tuple(ex))

    def shrunk(self, eps: float) -> "Domain":
        """The set of points at distance more than ``eps`` from the boundary."""
        lo = np.array(self.lower) + eps
        hi = np.array(self.upper) - eps
        if np.any(lo >= hi):
            raise ValueError(f"shrinking by {eps} empties the domain")
        keep = tuple((p, r) for p, r in self.excluded
                     if np.all(np.array(p) > lo) and np.all(np.array(p) < hi))
        return Domain(tuple(lo), tuple(hi), keep)

    def contains_ball(self, center, radius: float) -> bool:
        c = np.asarray(center, dtype=float)
        return bool(np.all(c - radius > np.array(self.lower))
                    and np.all(c + radius < np.array(self.upper)))

    def in_excision(self, x, eps: float | None = None) -> np.ndarray:
        """Boolean mask of points within an excision ball (radius override ``eps``)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        mask = np.zeros(x.shape[0], dtype=bool)
        for p, r in self.excluded:
            rad = r if eps is None else eps
            mask |= np.sum((x - np.array(p)) ** 2, axis=1) <= rad * rad
        return mask
