"""Multivariate polynomials as ``{exponent_tuple: coefficient}`` with exact derivatives.

Also parses the small textual grammar used in scenario files::

    1.5 x1^2 x3 - x2 + 4

Terms are separated by ``+``/``-``; each term is an optional numeric factor
followed by variables ``<var><i>`` or ``<var><i>^<p>`` (1-based, p <= 4).
"""
from __future__ import annotations

import re

import numpy as np

MAX_MONOMIAL_DEGREE = 4

_TERM = re.compile(r"\s*([+-])?\s*([^+-]+)")
_FACTOR = re.compile(r"^([a-z])(\d+)(?:\^(\d+))?$")


class Polynomial:
    def __init__(self, dim: int, terms: dict | None = None):
        self.dim = dim
        self.terms = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != dim or any(e < 0 for e in exp):
                raise ValueError(f"exponent {exp} invalid in dimension {dim}")
            if c:
                self.terms[exp] = self.terms.get(exp, 0.0) + float(c)

    @classmethod
    def constant(cls, dim: int, c: float) -> "Polynomial":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def variable(cls, dim: int, i: int, c: float = 1.0) -> "Polynomial":
        e = [0] * dim
        e[i] = 1
        return cls(dim, {tuple(e): c})

    @classmethod
    def parse(cls, text: str, dim: int, var: str = "x") -> "Polynomial":
        text = text.strip()
        if not text:
            raise ValueError("empty polynomial")
        terms: dict = {}
        pos = 0
        for match in _TERM.finditer(text):
            if match.start() != pos:
                raise ValueError(f"cannot parse polynomial {text!r}")
            pos = match.end()
            sign = -1.0 if match.group(1) == "-" else 1.0
            coef = sign
            exp = [0] * dim
            for tok in match.group(2).replace("*", " ").split():
                f = _FACTOR.match(tok)
                if f:
                    if f.group(1) != var:
                        raise ValueError(f"unknown variable {tok!r}, expected {var}<i>")
                    i = int(f.group(2)) - 1
                    if not 0 <= i < dim:
                        raise ValueError(f"variable {tok!r} out of range for dimension {dim}")
                    exp[i] += int(f.group(3) or 1)
                else:
                    try:
                        coef *= float(tok)
                    except ValueError:
                        raise ValueError(f"bad factor {tok!r} in {text!r}") from None
            if sum(exp) > MAX_MONOMIAL_DEGREE:
                raise ValueError(f"monomial degree above {MAX_MONOMIAL_DEGREE} in {text!r}")
            key = tuple(exp)
            terms[key] = terms.get(key, 0.0) + coef
        if pos != len(text):
            raise ValueError(f"cannot parse polynomial {text!r}")
        return cls(dim, terms)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[0])
        for exp, c in self.terms.items():
            t = np.full(x.shape[0], c)
            for i, e in enumerate(exp):
                if e:
                    t = t * x[:, i] ** e
            out = out + t
        return out

    def derivative(self, j: int) -> "Polynomial":
        terms = {}
        for exp, c in self.terms.items():
            if exp[j]:
                e = list(exp)
                e[j] -= 1
                terms[tuple(e)] = terms.get(tuple(e), 0.0) + c * exp[j]
        return Polynomial(self.dim, terms)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Array of shape ``(N, dim)``."""
        return np.stack([self.derivative(j)(x) for j in range(self.dim)], axis=-1)

    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.dim, float(other))
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return Polynomial(self.dim, terms)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            terms: dict = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    terms[e] = terms.get(e, 0.0) + c1 * c2
            return Polynomial(self.dim, terms)
        return Polynomial(self.dim, {e: c * float(other) for e, c in self.terms.items()})

    __rmul__ = __mul__

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __repr__(self):
        return f"Polynomial({self.dim}, {self.terms})"
