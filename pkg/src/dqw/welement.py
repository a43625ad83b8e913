"""Truncated elements of the formal algebra C[q][[p, lam]] and lam-series.

A WElement stores, per pair (lam-power a, p-exponent multi-index I), a
polynomial coefficient in q.  Elements are graded by the combined degree
deg = a + |I| (the eigenvalue of the grading operator
sum_i p_i d/dp_i + lam d/dlam), and every element carries a truncation
order K: only terms with a + |I| <= K are tracked.  The q-degree is never
truncated.

Also provided here:

* LambdaPoly, a polynomial lam-series over the base coordinates only,
  i.e. an element of C[q][[lam]] truncated at lam^K;
* RealLambdaSeries with the leading-coefficient sign classification of
  the ordered ring R[[lam]].
"""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Mapping

from .qpoly import DimensionMismatch, QPolynomial
from .rationals import GaussianRational, ZERO, _coerce


def _zeros(n: int) -> tuple:
    return (0,) * n


def _add_idx(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


class WElement:
    __slots__ = ("n", "K", "terms")

    def __init__(self, n: int, K: int, terms: Mapping | None = None):
        if n < 1:
            raise ValueError("dimension must be positive")
        if K < 0:
            raise ValueError("truncation order must be non-negative")
        clean = {}
        if terms:
            for (a, idx), poly in terms.items():
                idx = tuple(idx)
                if len(idx) != n:
                    raise DimensionMismatch("p-exponent has wrong length")
                if a < 0:
                    raise ValueError("negative lam-power")
                if a + sum(idx) > K:
                    continue
                if poly:
                    clean[(a, idx)] = poly
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("WElement is immutable")

    # ---- constructors ----

    @classmethod
    def zero(cls, n: int, K: int) -> "WElement":
        return cls(n, K)

    @classmethod
    def from_poly(cls, poly: QPolynomial, K: int) -> "WElement":
        return cls(poly.n, K, {(0, _zeros(poly.n)): poly})

    @classmethod
    def constant(cls, n: int, K: int, c) -> "WElement":
        return cls.from_poly(QPolynomial.constant(n, c), K)

    @classmethod
    def coordinate_q(cls, n: int, K: int, k: int) -> "WElement":
        return cls.from_poly(QPolynomial.coordinate(n, k), K)

    @classmethod
    def coordinate_p(cls, n: int, K: int, k: int) -> "WElement":
        if not 0 <= k < n:
            raise IndexError(f"momentum index {k} out of range for n={n}")
        idx = tuple(1 if i == k else 0 for i in range(n))
        return cls(n, K, {(0, idx): QPolynomial.constant(n, 1)})

    @classmethod
    def lam(cls, n: int, K: int, power: int = 1) -> "WElement":
        return cls(n, K, {(power, _zeros(n)): QPolynomial.constant(n, 1)})

    @classmethod
    def monomial(cls, n: int, K: int, a: int, p_exp, q_exp, c=1) -> "WElement":
        poly = QPolynomial.monomial(n, q_exp, c)
        return cls(n, K, {(a, tuple(p_exp)): poly})

    # ---- basic algebra (commutative product) ----

    def _check(self, other: "WElement"):
        if self.n != other.n:
            raise DimensionMismatch(f"dimension mismatch: {self.n} vs {other.n}")
        if self.K != other.K:
            raise DimensionMismatch(f"truncation mismatch: {self.K} vs {other.K}")

    def __add__(self, other: "WElement") -> "WElement":
        self._check(other)
        out = dict(self.terms)
        for key, poly in other.terms.items():
            s = out.get(key)
            s = poly if s is None else s + poly
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return WElement(self.n, self.K, out)

    def __sub__(self, other: "WElement") -> "WElement":
        return self + (-other)

    def __neg__(self) -> "WElement":
        return WElement(self.n, self.K, {k: -p for k, p in self.terms.items()})

    def __mul__(self, other) -> "WElement":
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        self._check(other)
        out: dict = {}
        K = self.K
        for (a1, i1), f1 in self.terms.items():
            d1 = a1 + sum(i1)
            for (a2, i2), f2 in other.terms.items():
                if d1 + a2 + sum(i2) > K:
                    continue
                key = (a1 + a2, _add_idx(i1, i2))
                prod = f1 * f2
                s = out.get(key)
                s = prod if s is None else s + prod
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return WElement(self.n, self.K, out)

    __rmul__ = __mul__

    def scale(self, c) -> "WElement":
        c = _coerce(c)
        if not c:
            return WElement(self.n, self.K)
        return WElement(self.n, self.K, {k: p.scale(c) for k, p in self.terms.items()})

    # ---- derivations and grading ----

    def diff_q(self, k: int) -> "WElement":
        if not 0 <= k < self.n:
            raise IndexError(f"coordinate index {k} out of range")
        out = {}
        for key, poly in self.terms.items():
            d = poly.diff(k)
            if d:
                out[key] = d
        return WElement(self.n, self.K, out)

    def diff_p(self, k: int) -> "WElement":
        if not 0 <= k < self.n:
            raise IndexError(f"momentum index {k} out of range")
        out: dict = {}
        for (a, idx), poly in self.terms.items():
            if idx[k]:
                e = list(idx)
                e[k] -= 1
                key = (a, tuple(e))
                p = poly.scale(idx[k])
                s = out.get(key)
                out[key] = p if s is None else s + p
        return WElement(self.n, self.K, out)

    def degree_image(self) -> "WElement":
        """Apply the grading operator sum_i p_i d/dp_i + lam d/dlam."""
        out = {}
        for (a, idx), poly in self.terms.items():
            d = a + sum(idx)
            if d:
                out[(a, idx)] = poly.scale(d)
        return WElement(self.n, self.K, out)

    def component(self, d: int) -> "WElement":
        """The homogeneous part of combined degree d."""
        out = {k: p for k, p in self.terms.items() if k[0] + sum(k[1]) == d}
        return WElement(self.n, self.K, out)

    def max_degree(self) -> int:
        if not self.terms:
            return -1
        return max(a + sum(i) for a, i in self.terms)

    def conjugate(self) -> "WElement":
        """Complex conjugation; q, p and lam are treated as real."""
        return WElement(self.n, self.K, {k: p.conjugate() for k, p in self.terms.items()})

    def lift(self, K: int) -> "WElement":
        """Re-truncate to a (usually larger) order K."""
        return WElement(self.n, K, self.terms)

    def evaluate(self, q_point, p_point) -> tuple:
        """Substitute numeric q and p, leaving lam formal.

        Returns the tuple of lam-coefficients (length K + 1).
        """
        if len(q_point) != self.n or len(p_point) != self.n:
            raise DimensionMismatch("evaluation point has wrong dimension")
        ppt = [Fraction(x) for x in p_point]
        coeffs = [ZERO] * (self.K + 1)
        for (a, idx), poly in self.terms.items():
            v = poly.evaluate(q_point)
            for x, e in zip(ppt, idx):
                if e:
                    v = v * (x ** e)
            coeffs[a] = coeffs[a] + v
        return tuple(coeffs)

    # ---- structure ----

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self) -> bool:
        return all(p.is_real() for p in self.terms.values())

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, WElement):
            return NotImplemented
        return self.n == other.n and self.K == other.K and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, self.K, frozenset(self.terms.items())))

    def __repr__(self):
        return f"WElement(n={self.n}, K={self.K}, {len(self.terms)} terms)"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (a, idx) in sorted(self.terms):
            poly = self.terms[(a, idx)]
            factors = []
            if a:
                factors.append("lam" + (f"^{a}" if a > 1 else ""))
            for i, e in enumerate(idx):
                if e:
                    factors.append(f"p{i+1}" + (f"^{e}" if e > 1 else ""))
            head = "*".join(factors)
            body = f"[{poly}]"
            parts.append(f"{head}*{body}" if head else body)
        return " + ".join(parts)

    # ---- flat term iteration (shared by the product kernels) ----

    def flat_terms(self):
        """Yield (a, p_exp, q_exp, coeff) across all monomials."""
        for (a, idx), poly in self.terms.items():
            for exp, c in poly.terms.items():
                yield (a, idx, exp, c)

    @classmethod
    def from_flat(cls, n: int, K: int, flat: Mapping) -> "WElement":
        """Assemble from a mapping (a, p_exp, q_exp) -> coeff."""
        grouped: dict = {}
        for (a, idx, exp), c in flat.items():
            if not c or a + sum(idx) > K:
                continue
            grouped.setdefault((a, idx), {})[exp] = c
        return cls(n, K, {k: QPolynomial(n, t) for k, t in grouped.items()})

    # ---- canonical JSON ----

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "max_degree": self.K,
            "terms": [
                {
                    "lam": a,
                    "p": list(idx),
                    "poly": self.terms[(a, idx)].to_json()["terms"],
                }
                for (a, idx) in sorted(self.terms)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "WElement":
        n = data["n"]
        terms = {}
        for entry in data["terms"]:
            poly = QPolynomial.from_json({"n": n, "terms": entry["poly"]})
            terms[(entry["lam"], tuple(entry["p"]))] = poly
        return cls(n, data["max_degree"], terms)


class LambdaPoly:
    """A polynomial lam-series over the base coordinates, truncated at lam^K."""

    __slots__ = ("n", "K", "coeffs")

    def __init__(self, n: int, K: int, coeffs: Mapping[int, QPolynomial] | None = None):
        clean = {}
        if coeffs:
            for r, poly in coeffs.items():
                if r < 0:
                    raise ValueError("negative lam-power")
                if r > K:
                    continue
                if poly:
                    if poly.n != n:
                        raise DimensionMismatch("coefficient dimension mismatch")
                    clean[r] = poly
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):
        raise AttributeError("LambdaPoly is immutable")

    @classmethod
    def zero(cls, n: int, K: int) -> "LambdaPoly":
        return cls(n, K)

    @classmethod
    def from_poly(cls, poly: QPolynomial, K: int) -> "LambdaPoly":
        return cls(poly.n, K, {0: poly})

    @classmethod
    def constant(cls, n: int, K: int, c) -> "LambdaPoly":
        return cls.from_poly(QPolynomial.constant(n, c), K)

    def _check(self, other: "LambdaPoly"):
        if self.n != other.n or self.K != other.K:
            raise DimensionMismatch("LambdaPoly mismatch")

    def __add__(self, other: "LambdaPoly") -> "LambdaPoly":
        self._check(other)
        out = dict(self.coeffs)
        for r, poly in other.coeffs.items():
            s = out.get(r)
            s = poly if s is None else s + poly
            if s:
                out[r] = s
            else:
                out.pop(r, None)
        return LambdaPoly(self.n, self.K, out)

    def __sub__(self, other: "LambdaPoly") -> "LambdaPoly":
        return self + (-other)

    def __neg__(self) -> "LambdaPoly":
        return LambdaPoly(self.n, self.K, {r: -p for r, p in self.coeffs.items()})

    def __mul__(self, other) -> "LambdaPoly":
        """Pointwise (undeformed) product, truncated at lam^K."""
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        self._check(other)
        out: dict = {}
        for r1, f1 in self.coeffs.items():
            for r2, f2 in other.coeffs.items():
                if r1 + r2 > self.K:
                    continue
                prod = f1 * f2
                s = out.get(r1 + r2)
                s = prod if s is None else s + prod
                if s:
                    out[r1 + r2] = s
                else:
                    out.pop(r1 + r2, None)
        return LambdaPoly(self.n, self.K, out)

    __rmul__ = __mul__

    def scale(self, c) -> "LambdaPoly":
        c = _coerce(c)
        if not c:
            return LambdaPoly(self.n, self.K)
        return LambdaPoly(self.n, self.K, {r: p.scale(c) for r, p in self.coeffs.items()})

    def shift_lam(self, r: int) -> "LambdaPoly":
        return LambdaPoly(self.n, self.K, {s + r: p for s, p in self.coeffs.items()})

    def conjugate(self) -> "LambdaPoly":
        return LambdaPoly(self.n, self.K, {r: p.conjugate() for r, p in self.coeffs.items()})

    def coefficient(self, r: int) -> QPolynomial:
        return self.coeffs.get(r, QPolynomial.zero(self.n))

    def evaluate(self, point) -> tuple:
        """Evaluate every lam-coefficient at a base point."""
        return tuple(
            self.coeffs[r].evaluate(point) if r in self.coeffs else ZERO
            for r in range(self.K + 1)
        )

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, LambdaPoly):
            return NotImplemented
        return self.n == other.n and self.K == other.K and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, self.K, frozenset(self.coeffs.items())))

    def __repr__(self):
        return f"LambdaPoly(n={self.n}, K={self.K}, {len(self.coeffs)} orders)"

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for r in sorted(self.coeffs):
            head = "" if r == 0 else ("lam" if r == 1 else f"lam^{r}") + "*"
            parts.append(f"{head}({self.coeffs[r]})")
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "max_order": self.K,
            "coeffs": [
                {"lam": r, "poly": self.coeffs[r].to_json()["terms"]}
                for r in sorted(self.coeffs)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "LambdaPoly":
        n = data["n"]
        coeffs = {
            entry["lam"]: QPolynomial.from_json({"n": n, "terms": entry["poly"]})
            for entry in data["coeffs"]
        }
        return cls(n, data["max_order"], coeffs)


def deg_operator(a: WElement) -> WElement:
    """The grading derivation sum_i p_i d/dp_i + lam d/dlam."""
    return a.degree_image()


class SeriesSign(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ZERO_UP_TO_K = "zero_up_to_K"


class RealLambdaSeries:
    """A truncated real lam-series with the leading-coefficient order."""

    __slots__ = ("K", "coeffs")

    def __init__(self, coeffs):
        cs = tuple(Fraction(c) for c in coeffs)
        if not cs:
            raise ValueError("series needs at least the constant coefficient")
        object.__setattr__(self, "K", len(cs) - 1)
        object.__setattr__(self, "coeffs", cs)

    def __setattr__(self, name, value):
        raise AttributeError("RealLambdaSeries is immutable")

    def sign(self) -> SeriesSign:
        for c in self.coeffs:
            if c > 0:
                return SeriesSign.POSITIVE
            if c < 0:
                return SeriesSign.NEGATIVE
        return SeriesSign.ZERO_UP_TO_K

    def __mul__(self, other: "RealLambdaSeries") -> "RealLambdaSeries":
        K = min(self.K, other.K)
        out = [Fraction(0)] * (K + 1)
        for i, a in enumerate(self.coeffs[: K + 1]):
            if not a:
                continue
            for j, b in enumerate(other.coeffs[: K + 1 - i]):
                out[i + j] += a * b
        return RealLambdaSeries(out)

    def __add__(self, other: "RealLambdaSeries") -> "RealLambdaSeries":
        K = min(self.K, other.K)
        return RealLambdaSeries(
            [self.coeffs[i] + other.coeffs[i] for i in range(K + 1)]
        )

    def __eq__(self, other):
        if not isinstance(other, RealLambdaSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"RealLambdaSeries({[str(c) for c in self.coeffs]})"

    def trimmed_strings(self) -> list:
        """Coefficient strings with trailing zeros removed (at least one kept)."""
        out = [str(c) for c in self.coeffs]
        while len(out) > 1 and out[-1] == "0":
            out.pop()
        return out


def series_sign(s: RealLambdaSeries) -> SeriesSign:
    return s.sign()


def real_series_from_complex(coeffs, context: str = "series") -> RealLambdaSeries:
    """Convert a tuple of GaussianRational lam-coefficients, requiring reality."""
    for r, c in enumerate(coeffs):
        if c.im:
            raise NonRealSeries(
                f"{context}: lam^{r} coefficient has nonzero imaginary part {c.im}"
            )
    return RealLambdaSeries([c.re for c in coeffs])


class NonRealSeries(ValueError):
    """A series that should be real carries an imaginary part."""
