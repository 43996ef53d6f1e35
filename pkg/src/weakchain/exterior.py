"""Exterior algebra of R^m on the lexicographic basis of multi-indices.

A degree-k covector is stored densely as ``C(m, k)`` coefficients, one per
strictly increasing index tuple ``(i_1 < ... < i_k)``, in the order produced
by :func:`itertools.combinations`.  All batched routines act on the last axis
so that whole grids of covectors are handled at once.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

MAX_DIM = 12

# Fault-injection switch used by the self test to prove that the sign
# bookkeeping is actually exercised.  Never set outside ``selftest``.
_UNSIGNED_WEDGE = False


def _check_dim(m: int) -> None:
    if not 0 <= m <= MAX_DIM:
        raise ValueError(f"ambient dimension {m} outside [0, {MAX_DIM}]")


@lru_cache(maxsize=None)
def basis(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All increasing k-tuples of ``range(m)`` in lexicographic order."""
    _check_dim(m)
    if k < 0:
        raise ValueError("negative degree")
    return tuple(itertools.combinations(range(m), k))


@lru_cache(maxsize=None)
def _index_lookup(m: int, k: int) -> dict[tuple[int, ...], int]:
    return {I: r for r, I in enumerate(basis(m, k))}


@dataclass(frozen=True)
class MultiIndex:
    """Strictly increasing tuple of 0-based axis indices in R^m."""

    entries: tuple[int, ...]
    ambient_dim: int

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(i) for i in self.entries))
        _check_dim(self.ambient_dim)
        e = self.entries
        if len(e) > self.ambient_dim:
            raise ValueError(f"degree {len(e)} exceeds dimension {self.ambient_dim}")
        if any(i < 0 or i >= self.ambient_dim for i in e):
            raise ValueError(f"index out of range in {e} for m={self.ambient_dim}")
        if any(a >= b for a, b in zip(e, e[1:])):
            raise ValueError(f"multi-index {e} is not strictly increasing")

    @property
    def degree(self) -> int:
        return len(self.entries)

    def label(self) -> str:
        """1-based rendering, e.g. ``dx1^dx3``; ``1`` for the empty index."""
        if not self.entries:
            return "1"
        return "^".join(f"dx{i + 1}" for i in self.entries)


def rank(index: MultiIndex | tuple[int, ...], m: int | None = None) -> int:
    """Lexicographic position of a multi-index among all k-subsets of range(m).

    Uses the combinatorial number system, so no table is built.
    """
    if not isinstance(index, MultiIndex):
        if m is None:
            raise ValueError("ambient dimension required for a bare tuple")
        index = MultiIndex(tuple(index), m)
    m, e = index.ambient_dim, index.entries
    k = len(e)
    r = 0
    prev = -1
    for t, i in enumerate(e):
        for j in range(prev + 1, i):
            r += comb(m - 1 - j, k - 1 - t)
        prev = i
    return r


def unrank(r: int, m: int, k: int) -> MultiIndex:
    """Inverse of :func:`rank`."""
    _check_dim(m)
    total = comb(m, k)
    if not 0 <= r < total:
        raise ValueError(f"rank {r} outside [0, {total}) for m={m}, k={k}")
    entries = []
    j = 0
    for t in range(k):
        while True:
            block = comb(m - 1 - j, k - 1 - t)
            if r < block:
                break
            r -= block
            j += 1
        entries.append(j)
        j += 1
    return MultiIndex(tuple(entries), m)


def _merge_sign(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    # parity of the shuffle sorting a+b, both already increasing and disjoint
    inversions = sum(1 for i in a for j in b if i > j)
    return -1 if inversions % 2 else 1


def wedge_table(m: int, k: int, l: int):
    """Nonzero structure constants of ``Lambda^k x Lambda^l -> Lambda^(k+l)``.

    Returns a tuple with one entry per target basis element; each entry is a
    tuple of ``(index_in_a, index_in_b, sign)`` triples.  Empty when k+l > m.
    """
    return _wedge_table(m, k, l, _UNSIGNED_WEDGE)


@lru_cache(maxsize=None)
def _wedge_table(m: int, k: int, l: int, unsigned: bool):
    lookup_a = _index_lookup(m, k)
    lookup_b = _index_lookup(m, l)
    table = []
    for target in basis(m, k + l) if k + l <= m else ():
        terms = []
        for pos in itertools.combinations(range(k + l), k):
            a = tuple(target[p] for p in pos)
            b = tuple(target[p] for p in range(k + l) if p not in pos)
            sign = 1 if unsigned else _merge_sign(a, b)
            terms.append((lookup_a[a], lookup_b[b], sign))
        table.append(tuple(terms))
    return tuple(table)


def wedge_coeffs(a: np.ndarray, b: np.ndarray, m: int, k: int, l: int) -> np.ndarray:
    """Batched wedge product on coefficient arrays.

    ``a`` has shape ``(..., C(m,k))`` and ``b`` shape ``(..., C(m,l))``; the
    leading axes broadcast.  Summation order is fixed by the table, so the
    result is bit-reproducible.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != comb(m, k) or b.shape[-1] != comb(m, l):
        raise ValueError("coefficient length does not match C(m, degree)")
    lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    if k + l > m:
        return np.zeros(lead + (0,))
    table = wedge_table(m, k, l)
    out = np.empty(lead + (len(table),))
    for t, terms in enumerate(table):
        acc = np.zeros(lead)
        for ia, ib, sign in terms:
            if sign > 0:
                acc = acc + a[..., ia] * b[..., ib]
            else:
                acc = acc - a[..., ia] * b[..., ib]
        out[..., t] = acc
    return out


@dataclass(frozen=True, eq=False)
class Covector:
    """Element of Lambda^k(R^m) with coefficients on the lexicographic basis."""

    degree: int
    ambient_dim: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_dim(self.ambient_dim)
        if self.degree < 0:
            raise ValueError("negative degree")
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        expected = comb(self.ambient_dim, self.degree)
        if c.size != expected:
            raise ValueError(
                f"degree-{self.degree} covector in R^{self.ambient_dim} needs "
                f"{expected} coefficients, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, m: int, k: int) -> "Covector":
        return cls(k, m, np.zeros(comb(m, k)))

    @classmethod
    def basis_element(cls, index: MultiIndex, amplitude: float = 1.0) -> "Covector":
        c = np.zeros(comb(index.ambient_dim, index.degree))
        c[rank(index)] = amplitude
        return cls(index.degree, index.ambient_dim, c)

    @classmethod
    def from_dict(cls, m: int, k: int, terms: dict) -> "Covector":
        """Build from ``{index_tuple: coefficient}`` with 0-based indices."""
        c = np.zeros(comb(m, k))
        for idx, v in terms.items():
            c[rank(tuple(idx), m)] += v
        return cls(k, m, c)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def _same_space(self, other: "Covector") -> None:
        if (self.degree, self.ambient_dim) != (other.degree, other.ambient_dim):
            raise ValueError("covectors live in different spaces")

    def __add__(self, other: "Covector") -> "Covector":
        self._same_space(other)
        return Covector(self.degree, self.ambient_dim, self.coeffs + other.coeffs)

    def __sub__(self, other: "Covector") -> "Covector":
        self._same_space(other)
        return Covector(self.degree, self.ambient_dim, self.coeffs - other.coeffs)

    def __neg__(self) -> "Covector":
        return Covector(self.degree, self.ambient_dim, -self.coeffs)

    def __mul__(self, scalar: float) -> "Covector":
        return Covector(self.degree, self.ambient_dim, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __xor__(self, other: "Covector") -> "Covector":
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Covector):
            return NotImplemented
        return (self.degree == other.degree and self.ambient_dim == other.ambient_dim
                and np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.degree, self.ambient_dim, self.coeffs.tobytes()))

    def __repr__(self):
        terms = [f"{v:+g}*{MultiIndex(I, self.ambient_dim).label()}"
                 for I, v in zip(basis(self.ambient_dim, self.degree), self.coeffs) if v]
        return f"Covector(k={self.degree}, m={self.ambient_dim}: {' '.join(terms) or '0'})"


def wedge(a: Covector, b: Covector) -> Covector:
    """Wedge product; a degree above the ambient dimension gives an empty, zero covector."""
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(f"ambient dimension mismatch: {a.ambient_dim} vs {b.ambient_dim}")
    m = a.ambient_dim
    c = wedge_coeffs(a.coeffs, b.coeffs, m, a.degree, b.degree)
    return Covector(a.degree + b.degree, m, c)


def max_norm(a: Covector | np.ndarray) -> float | np.ndarray:
    """Largest absolute coefficient.  Arrays are reduced over the last axis."""
    if isinstance(a, Covector):
        return float(np.max(np.abs(a.coeffs))) if a.coeffs.size else 0.0
    a = np.asarray(a, dtype=float)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1])
    return np.max(np.abs(a), axis=-1)
