"""Multidifferential cochains with values in the formal phase-space algebra.

An arity-k cochain acts on k base polynomials f_1..f_k as

    phi(f_1,..,f_k) = sum  c(q) * lam^a * p^I * D^{J_1}f_1 ... D^{J_k}f_k,

stored in the canonical normal form mapping (a, I, (J_1..J_k)) to the
polynomial coefficient c(q).  Two cochains are equal exactly when their
normal forms coincide.  The combined degree a + |I| grades cochains the
same way it grades algebra elements, and values are truncated at the
element order K.

Coboundary conventions.  The base algebra acts on values either through
the undeformed pointwise product (classical mode) or through the deformed
q/p-pairing product composed with the p-independent embedding (deformed
mode).  With k-ary phi the coboundary is

    (d phi)(f_0,..,f_k) = f_0 . phi(f_1,..,f_k)
                          + sum_{i=1..k} (-1)^i phi(.., f_{i-1} f_i, ..)
                          + (-1)^{k+1} phi(f_0,..,f_{k-1}) . f_k,

where the dot is the chosen bimodule action.  In deformed mode the left
action expands to sum_J (i/2)^{|J|} binom(I, J) lam^{|J|} p^{I-J} D^J f_0
on a normal-form term, the right action likewise with (-i/2)^{|J|}; the
classical action keeps only J = 0.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Mapping, Sequence

from .qpoly import DimensionMismatch, QPolynomial
from .rationals import GaussianRational, I, ONE, _coerce
from .welement import WElement, _add_idx, _zeros


def _binom_multi(upper: tuple, lower: tuple) -> int:
    out = 1
    for u, l in zip(upper, lower):
        out *= _binom(u, l)
    return out


def _binom(nn: int, kk: int) -> int:
    if kk < 0 or kk > nn:
        return 0
    r = 1
    for i in range(kk):
        r = r * (nn - i) // (i + 1)
    return r


def _sub_indices(upper: tuple):
    """All multi-indices J <= upper componentwise."""
    ranges = [range(u + 1) for u in upper]
    return itertools.product(*ranges)


def _sub_idx(a: tuple, b: tuple) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


class MultiDiffCochain:
    __slots__ = ("n", "K", "arity", "terms")

    def __init__(self, n: int, K: int, arity: int,
                 terms: Mapping | None = None):
        if arity < 0:
            raise ValueError("arity must be non-negative")
        clean = {}
        if terms:
            for (a, idx, jvec), poly in terms.items():
                jvec = tuple(tuple(j) for j in jvec)
                if len(jvec) != arity:
                    raise ValueError("derivative tuple has wrong arity")
                if len(idx) != n or any(len(j) != n for j in jvec):
                    raise DimensionMismatch("index length mismatch")
                if a + sum(idx) > K:
                    continue
                if poly:
                    clean[(a, tuple(idx), jvec)] = poly
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "arity", arity)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("MultiDiffCochain is immutable")

    # ---- constructors ----

    @classmethod
    def zero(cls, n: int, K: int, arity: int) -> "MultiDiffCochain":
        return cls(n, K, arity)

    @classmethod
    def from_flat(cls, n: int, K: int, arity: int, flat: Mapping) -> "MultiDiffCochain":
        grouped: dict = {}
        for (a, idx, jvec, exp), c in flat.items():
            if not c or a + sum(idx) > K:
                continue
            grouped.setdefault((a, idx, jvec), {})[exp] = c
        return cls(n, K, arity,
                   {k: QPolynomial(n, t) for k, t in grouped.items()})

    def flat_terms(self):
        for (a, idx, jvec), poly in self.terms.items():
            for exp, c in poly.terms.items():
                yield (a, idx, jvec, exp, c)

    # ---- linear structure ----

    def _check(self, other: "MultiDiffCochain"):
        if (self.n, self.K, self.arity) != (other.n, other.K, other.arity):
            raise DimensionMismatch("cochain shape mismatch")

    def __add__(self, other: "MultiDiffCochain") -> "MultiDiffCochain":
        self._check(other)
        out = dict(self.terms)
        for key, poly in other.terms.items():
            s = out.get(key)
            s = poly if s is None else s + poly
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return MultiDiffCochain(self.n, self.K, self.arity, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return MultiDiffCochain(self.n, self.K, self.arity,
                                {k: -p for k, p in self.terms.items()})

    def scale(self, c) -> "MultiDiffCochain":
        c = _coerce(c)
        if not c:
            return MultiDiffCochain(self.n, self.K, self.arity)
        return MultiDiffCochain(self.n, self.K, self.arity,
                                {k: p.scale(c) for k, p in self.terms.items()})

    def scale_lambda(self, r: int) -> "MultiDiffCochain":
        """Multiply by lam^r (drops terms beyond the truncation)."""
        return MultiDiffCochain(
            self.n, self.K, self.arity,
            {(a + r, idx, jvec): p for (a, idx, jvec), p in self.terms.items()},
        )

    def retruncate(self, K: int) -> "MultiDiffCochain":
        return MultiDiffCochain(self.n, K, self.arity, self.terms)

    # ---- grading, conjugation, restriction ----

    def component(self, d: int) -> "MultiDiffCochain":
        out = {k: p for k, p in self.terms.items() if k[0] + sum(k[1]) == d}
        return MultiDiffCochain(self.n, self.K, self.arity, out)

    def degrees(self) -> set:
        return {a + sum(idx) for (a, idx, _j) in self.terms}

    def is_homogeneous(self, d: int) -> bool:
        return all(a + sum(idx) == d for (a, idx, _j) in self.terms)

    def classical_limit(self) -> "MultiDiffCochain":
        """Keep only the lam-power-zero part."""
        out = {k: p for k, p in self.terms.items() if k[0] == 0}
        return MultiDiffCochain(self.n, self.K, self.arity, out)

    def involution(self) -> "MultiDiffCochain":
        """phi*(f_1,..,f_k) = conj(phi(conj f_k,..,conj f_1))."""
        out = {}
        for (a, idx, jvec), poly in self.terms.items():
            out[(a, idx, tuple(reversed(jvec)))] = poly.conjugate()
        return MultiDiffCochain(self.n, self.K, self.arity, out)

    def hermitian_part(self) -> "MultiDiffCochain":
        return (self + self.involution()).scale(Fraction(1, 2))

    def max_deriv_order(self) -> int:
        out = 0
        for (_a, _i, jvec) in self.terms:
            for j in jvec:
                out = max(out, sum(j))
        return out

    def max_coeff_degree(self) -> int:
        out = 0
        for poly in self.terms.values():
            out = max(out, max((sum(e) for e in poly.terms), default=0))
        return out

    def coefficient_monomials(self) -> set:
        out = set()
        for poly in self.terms.values():
            out.update(poly.terms)
        return out

    # ---- evaluation ----

    def evaluate(self, args: Sequence[QPolynomial]) -> WElement:
        if len(args) != self.arity:
            raise ValueError(f"expected {self.arity} arguments")
        for f in args:
            if f.n != self.n:
                raise DimensionMismatch("argument dimension mismatch")
        out: dict = {}
        deriv_cache: dict = {}

        def deriv(si, j):
            key = (si, j)
            got = deriv_cache.get(key)
            if got is None:
                got = args[si]
                for k, e in enumerate(j):
                    for _ in range(e):
                        got = got.diff(k)
                deriv_cache[key] = got
            return got

        for (a, idx, jvec), poly in self.terms.items():
            val = poly
            ok = True
            for si, j in enumerate(jvec):
                d = deriv(si, j)
                if d.is_zero():
                    ok = False
                    break
                val = val * d
            if not ok or val.is_zero():
                continue
            key = (a, idx)
            s = out.get(key)
            out[key] = val if s is None else s + val
        return WElement(self.n, self.K, out)

    # ---- structure ----

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, MultiDiffCochain):
            return NotImplemented
        return (self.n, self.K, self.arity) == (other.n, other.K, other.arity) \
            and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, self.K, self.arity, frozenset(self.terms.items())))

    def __repr__(self):
        return (f"MultiDiffCochain(n={self.n}, K={self.K}, arity={self.arity}, "
                f"{len(self.terms)} terms)")

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (a, idx, jvec) in sorted(self.terms):
            poly = self.terms[(a, idx, jvec)]
            factors = []
            if a:
                factors.append("lam" + (f"^{a}" if a > 1 else ""))
            for i, e in enumerate(idx):
                if e:
                    factors.append(f"p{i+1}" + (f"^{e}" if e > 1 else ""))
            for s, j in enumerate(jvec):
                ds = "".join(f"d{d+1}" * e for d, e in enumerate(j))
                factors.append(f"{ds or 'id'}[f{s+1}]")
            parts.append(f"({poly})*" + "*".join(factors))
        return " + ".join(parts)

    # ---- canonical JSON ----

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "max_degree": self.K,
            "arity": self.arity,
            "terms": [
                {
                    "lam": a,
                    "p": list(idx),
                    "derivs": [list(j) for j in jvec],
                    "poly": self.terms[(a, idx, jvec)].to_json()["terms"],
                }
                for (a, idx, jvec) in sorted(self.terms)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "MultiDiffCochain":
        n = data["n"]
        terms = {}
        for entry in data["terms"]:
            key = (entry["lam"], tuple(entry["p"]),
                   tuple(tuple(j) for j in entry["derivs"]))
            terms[key] = QPolynomial.from_json({"n": n, "terms": entry["poly"]})
        return cls(n, data["max_degree"], data["arity"], terms)


# ---------------------------------------------------------------------------
# canonical cochains
# ---------------------------------------------------------------------------

def identity_cochain(n: int, K: int) -> MultiDiffCochain:
    """The arity-1 cochain f -> f (the p-independent embedding)."""
    z = _zeros(n)
    return MultiDiffCochain(n, K, 1, {(0, z, (z,)): QPolynomial.constant(n, 1)})


def mu_cochain(n: int, K: int) -> MultiDiffCochain:
    """The arity-2 cochain (f, g) -> f g."""
    z = _zeros(n)
    return MultiDiffCochain(n, K, 2, {(0, z, (z, z)): QPolynomial.constant(n, 1)})


def biderivation_cochain(n: int, K: int, coeffs) -> MultiDiffCochain:
    """sum_{k,l} coeffs[k][l] * D_k (x) D_l with QPolynomial coefficients."""
    z = _zeros(n)
    terms: dict = {}
    for k in range(n):
        ek = tuple(1 if i == k else 0 for i in range(n))
        for l in range(n):
            c = coeffs[k][l]
            if not c:
                continue
            el = tuple(1 if i == l else 0 for i in range(n))
            key = (0, z, (ek, el))
            s = terms.get(key)
            terms[key] = c if s is None else s + c
    return MultiDiffCochain(n, K, 2, terms)


# ---------------------------------------------------------------------------
# coboundary, antisymmetrization
# ---------------------------------------------------------------------------

def _outer_action_terms(a, idx, exp, c, deformed, left):
    """Expand the bimodule action of a new argument on one flat value term.

    Yields (a', idx', jnew, exp, coeff).  jnew is the derivative landing
    on the new argument.
    """
    if not deformed:
        yield (a, idx, _zeros(len(idx)), exp, c)
        return
    for jnew in _sub_indices(idx):
        w = sum(jnew)
        scalar = (I * Fraction(1, 2) if left else I * Fraction(-1, 2)) ** w
        coeff = c * scalar * _binom_multi(idx, jnew)
        yield (a + w, _sub_idx(idx, jnew), tuple(jnew), exp, coeff)


def coboundary(phi: MultiDiffCochain, deformed: bool = True) -> MultiDiffCochain:
    """The bar-complex coboundary for the chosen bimodule action."""
    n, K, k = phi.n, phi.K, phi.arity
    out: dict = {}

    def acc(key, c):
        s = out.get(key)
        s = c if s is None else s + c
        if s:
            out[key] = s
        else:
            out.pop(key, None)

    for (a, idx, jvec, exp, c) in phi.flat_terms():
        # left outer action: new argument in slot 0
        for (a2, idx2, jnew, exp2, c2) in _outer_action_terms(a, idx, exp, c, deformed, True):
            acc((a2, idx2, (jnew,) + jvec, exp2), c2)
        # inner insertions with alternating signs
        sign = -1
        for i in range(k):
            j = jvec[i]
            for l in _sub_indices(j):
                coeff = c * (sign * _binom_multi(j, l))
                newj = jvec[:i] + (tuple(l), _sub_idx(j, tuple(l))) + jvec[i + 1:]
                acc((a, idx, newj, exp), coeff)
            sign = -sign
        # right outer action: new argument in slot k
        tail_sign = 1 if (k + 1) % 2 == 0 else -1
        for (a2, idx2, jnew, exp2, c2) in _outer_action_terms(a, idx, exp, c, deformed, False):
            acc((a2, idx2, jvec + (jnew,), exp2), c2 * tail_sign)
    return MultiDiffCochain.from_flat(n, K, k + 1, out)


def alt(phi: MultiDiffCochain) -> MultiDiffCochain:
    """Antisymmetrization (1/k!) sum_sigma sign(sigma) phi o sigma."""
    k = phi.arity
    if k <= 1:
        return phi
    out: dict = {}
    norm = Fraction(1)
    for i in range(2, k + 1):
        norm /= i
    for perm in itertools.permutations(range(k)):
        sign = _perm_sign(perm)
        for (a, idx, jvec), poly in phi.terms.items():
            newj = tuple(jvec[perm[i]] for i in range(k))
            key = (a, idx, newj)
            p = poly.scale(GaussianRational(sign * norm))
            s = out.get(key)
            s = p if s is None else s + p
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return MultiDiffCochain(phi.n, phi.K, k, out)


def _perm_sign(perm) -> int:
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def classical_limit(phi: MultiDiffCochain) -> MultiDiffCochain:
    return phi.classical_limit()


def involution(phi: MultiDiffCochain) -> MultiDiffCochain:
    return phi.involution()


# ---------------------------------------------------------------------------
# cochain-valued deformed product and composition
# ---------------------------------------------------------------------------

def cochain_weyl_product(phi: MultiDiffCochain, psi: MultiDiffCochain) -> MultiDiffCochain:
    """The q/p-pairing product of cochain values, joining argument slots.

    The result has arity arity(phi) + arity(psi) and satisfies
    (phi . psi)(f.., g..) = phi(f..) . psi(g..) for the deformed product
    of the values.
    """
    if phi.n != psi.n or phi.K != psi.K:
        raise DimensionMismatch("cochain base mismatch")
    n, K = phi.n, phi.K
    state: dict = {}
    for t1 in phi.flat_terms():
        d1 = t1[0] + sum(t1[1])
        for t2 in psi.flat_terms():
            if d1 + t2[0] + sum(t2[1]) > K:
                continue
            key = (t1[:4], t2[:4])
            s = state.get(key)
            s = t1[4] * t2[4] if s is None else s + t1[4] * t2[4]
            if s:
                state[key] = s
            else:
                state.pop(key, None)
    out: dict = {}
    r = 0
    half_i = I * Fraction(1, 2)
    factor = ONE

    def acc_out(key, c):
        s = out.get(key)
        s = c if s is None else s + c
        if s:
            out[key] = s
        else:
            out.pop(key, None)

    def q_branches(a, idx, jvec, exp, k):
        # derivative in q^k of a value term: hits the coefficient monomial
        # or raises one slot's derivative index
        if exp[k]:
            e = list(exp); e[k] -= 1
            yield ((a, idx, jvec, tuple(e)), Fraction(exp[k]))
        ek = tuple(1 if i == k else 0 for i in range(len(idx)))
        for s in range(len(jvec)):
            nj = jvec[:s] + (_add_idx(jvec[s], ek),) + jvec[s + 1:]
            yield ((a, idx, nj, exp), Fraction(1))

    while state:
        for ((a1, i1, j1, e1), (a2, i2, j2, e2)), c in state.items():
            acc_out((a1 + a2 + r, _add_idx(i1, i2), j1 + j2, _add_idx(e1, e2)),
                    c * factor)
        new: dict = {}

        def acc_new(key, c):
            s = new.get(key)
            s = c if s is None else s + c
            if s:
                new[key] = s
            else:
                new.pop(key, None)

        for (t1, t2), c in state.items():
            a1, i1, j1, e1 = t1
            a2, i2, j2, e2 = t2
            for k in range(n):
                # d/dq^k on the left, d/dp_k on the right
                if i2[k]:
                    i2d = list(i2); i2d[k] -= 1
                    right = (a2, tuple(i2d), j2, e2)
                    for lt, lc in q_branches(a1, i1, j1, e1, k):
                        acc_new((lt, right), c * lc * i2[k])
                # minus d/dp_k on the left, d/dq^k on the right
                if i1[k]:
                    i1d = list(i1); i1d[k] -= 1
                    left = (a1, tuple(i1d), j1, e1)
                    for rt, rc in q_branches(a2, i2, j2, e2, k):
                        acc_new((left, rt), -c * rc * i1[k])
        state = new
        r += 1
        factor = factor * half_i * Fraction(1, r)
    return MultiDiffCochain.from_flat(n, K, phi.arity + psi.arity, out)


def _splittings(j: tuple, parts: int):
    """All ways to write the multi-index j as an ordered sum of `parts`
    multi-indices, with the multinomial coefficient."""
    n = len(j)
    per_dim = []
    for d in range(n):
        per_dim.append(list(_compositions(j[d], parts)))
    for combo in itertools.product(*per_dim):
        pieces = [tuple(combo[d][p] for d in range(n)) for p in range(parts)]
        coeff = 1
        for d in range(n):
            coeff *= _multinomial(j[d], combo[d])
        yield pieces, coeff


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multinomial(total: int, parts) -> int:
    import math
    out = math.factorial(total)
    for p in parts:
        out //= math.factorial(p)
    return out


def compose_slot(phi: MultiDiffCochain, slot: int, inner: MultiDiffCochain) -> MultiDiffCochain:
    """Substitute the p- and lam-free cochain `inner` into one argument
    slot of phi, expanding derivatives of products into normal form."""
    if inner.n != phi.n or inner.K != phi.K:
        raise DimensionMismatch("cochain base mismatch")
    for (a, idx, _j) in inner.terms:
        if a or any(idx):
            raise ValueError("inner cochain must have p- and lam-free values")
    if not 0 <= slot < phi.arity:
        raise IndexError("slot out of range")
    n, K = phi.n, phi.K
    m = inner.arity
    out: dict = {}

    def acc(key, c):
        s = out.get(key)
        s = c if s is None else s + c
        if s:
            out[key] = s
        else:
            out.pop(key, None)

    inner_flat = list(inner.flat_terms())
    for (a, idx, jvec, exp, c) in phi.flat_terms():
        j = jvec[slot]
        for (_, _, avec, fexp, ic) in inner_flat:
            for pieces, mult in _splittings(j, m + 1):
                j0 = pieces[0]
                # j0 differentiates the inner coefficient monomial q^fexp
                fall = 1
                ok = True
                for d in range(n):
                    if j0[d] > fexp[d]:
                        ok = False
                        break
                    for t in range(j0[d]):
                        fall *= fexp[d] - t
                if not ok:
                    continue
                new_exp = _add_idx(exp, _sub_idx(fexp, j0))
                new_slots = tuple(_add_idx(avec[s], pieces[s + 1]) for s in range(m))
                newj = jvec[:slot] + new_slots + jvec[slot + 1:]
                acc((a, idx, newj, new_exp), c * ic * (mult * fall))
    return MultiDiffCochain.from_flat(n, K, phi.arity + m - 1, out)


def plug_constant(phi: MultiDiffCochain, slot: int) -> MultiDiffCochain:
    """Evaluate one argument slot at the constant function 1."""
    if not 0 <= slot < phi.arity:
        raise IndexError("slot out of range")
    out: dict = {}
    for (a, idx, jvec), poly in phi.terms.items():
        if any(jvec[slot]):
            continue
        key = (a, idx, jvec[:slot] + jvec[slot + 1:])
        s = out.get(key)
        s = poly if s is None else s + poly
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return MultiDiffCochain(phi.n, phi.K, phi.arity - 1, out)


# ---------------------------------------------------------------------------
# witnesses
# ---------------------------------------------------------------------------

def find_witness(phi: MultiDiffCochain):
    """A tuple of monomials on which a nonzero cochain evaluates nonzero.

    Scanning the derivative support works because evaluation at the
    monomials q^{J} for a minimal support element J (componentwise order)
    picks up exactly the terms with that derivative tuple.
    Returns (args, value) or None for the zero cochain.
    """
    if phi.is_zero():
        return None
    supports = sorted(
        {jvec for (_a, _i, jvec) in phi.terms},
        key=lambda jv: (sum(sum(j) for j in jv), jv),
    )
    for jvec in supports:
        args = [QPolynomial.monomial(phi.n, j) for j in jvec]
        val = phi.evaluate(args)
        if not val.is_zero():
            return args, val
    raise AssertionError("witness scan failed on a nonzero cochain")
