"""Sparse multivariate polynomials in the base coordinates q^1..q^n.

Terms are stored as a mapping from exponent multi-indices (tuples of
non-negative ints, one slot per coordinate) to nonzero GaussianRational
coefficients.  The representation is canonical: equal polynomials have
identical term mappings, and zero coefficients are never stored.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from .rationals import GaussianRational, ZERO, ONE, _coerce, format_scalar, parse_scalar


class DimensionMismatch(ValueError):
    """Operands live over different coordinate spaces."""


class QPolynomial:
    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[tuple, GaussianRational] | None = None):
        if n < 1:
            raise ValueError("dimension must be positive")
        clean = {}
        if terms:
            for exp, c in terms.items():
                if len(exp) != n:
                    raise DimensionMismatch(f"exponent {exp} has wrong length for n={n}")
                if c:
                    clean[tuple(exp)] = c if isinstance(c, GaussianRational) else _coerce(c)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("QPolynomial is immutable")

    # ---- constructors ----

    @classmethod
    def zero(cls, n: int) -> "QPolynomial":
        return cls(n)

    @classmethod
    def constant(cls, n: int, c) -> "QPolynomial":
        return cls(n, {(0,) * n: _coerce(c)})

    @classmethod
    def coordinate(cls, n: int, k: int) -> "QPolynomial":
        """The polynomial q^{k+1} (0-based k)."""
        if not 0 <= k < n:
            raise IndexError(f"coordinate index {k} out of range for n={n}")
        exp = tuple(1 if i == k else 0 for i in range(n))
        return cls(n, {exp: ONE})

    @classmethod
    def monomial(cls, n: int, exp: Iterable[int], c=1) -> "QPolynomial":
        return cls(n, {tuple(exp): _coerce(c)})

    # ---- ring operations ----

    def _check(self, other: "QPolynomial"):
        if self.n != other.n:
            raise DimensionMismatch(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other: "QPolynomial") -> "QPolynomial":
        self._check(other)
        out = dict(self.terms)
        for exp, c in other.terms.items():
            s = out.get(exp)
            s = c if s is None else s + c
            if s:
                out[exp] = s
            else:
                out.pop(exp, None)
        return QPolynomial(self.n, out)

    def __sub__(self, other: "QPolynomial") -> "QPolynomial":
        return self + (-other)

    def __neg__(self) -> "QPolynomial":
        return QPolynomial(self.n, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other) -> "QPolynomial":
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        self._check(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                c = c1 * c2
                s = out.get(exp)
                s = c if s is None else s + c
                if s:
                    out[exp] = s
                else:
                    out.pop(exp, None)
        return QPolynomial(self.n, out)

    def __rmul__(self, other):
        return self.__mul__(other)

    def scale(self, c) -> "QPolynomial":
        c = _coerce(c)
        if not c:
            return QPolynomial(self.n)
        return QPolynomial(self.n, {e: v * c for e, v in self.terms.items()})

    # ---- calculus and structure ----

    def diff(self, k: int) -> "QPolynomial":
        """Formal partial derivative with respect to q^{k+1}."""
        out = {}
        for exp, c in self.terms.items():
            if exp[k]:
                e = list(exp)
                e[k] -= 1
                out[tuple(e)] = c * exp[k]
        return QPolynomial(self.n, out)

    def conjugate(self) -> "QPolynomial":
        return QPolynomial(self.n, {e: c.conjugate() for e, c in self.terms.items()})

    def evaluate(self, point) -> GaussianRational:
        """Substitute exact rational (or Gaussian rational) coordinates."""
        if len(point) != self.n:
            raise DimensionMismatch("evaluation point has wrong dimension")
        pt = [_coerce(x) if not isinstance(x, GaussianRational) else x for x in point]
        total = ZERO
        for exp, c in self.terms.items():
            v = c
            for x, e in zip(pt, exp):
                if e:
                    v = v * (x ** e)
            total = total + v
        return total

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self) -> bool:
        return all(c.is_real() for c in self.terms.values())

    def coefficient(self, exp) -> GaussianRational:
        return self.terms.get(tuple(exp), ZERO)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, QPolynomial):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self):
        return f"QPolynomial({self.n}, {self.terms!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exp in sorted(self.terms):
            c = self.terms[exp]
            mono = "*".join(
                f"q{i+1}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(exp) if e
            )
            cs = format_scalar(c)
            if mono:
                parts.append(f"({cs})*{mono}")
            else:
                parts.append(f"({cs})")
        return " + ".join(parts)

    # ---- canonical JSON ----

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                [list(exp), format_scalar(self.terms[exp])]
                for exp in sorted(self.terms)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "QPolynomial":
        terms = {tuple(exp): parse_scalar(cs) for exp, cs in data["terms"]}
        return cls(data["n"], terms)
