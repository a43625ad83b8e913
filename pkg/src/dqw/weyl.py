"""Deformed products on the formal phase-space algebra.

The two products implemented here act on WElement values over n base
coordinates q^1..q^n with conjugate momenta p_1..p_n:

* the exponential-form product pairing d/dq^k with d/dp_k
  antisymmetrically, with r-th order coefficient (i*lam/2)^r / r!;
* the holomorphic/antiholomorphic pairing product in the complex
  combinations z^k = q^k + i p_k, with coefficient (2*lam)^r / r!
  and Wirtinger derivatives d/dz = (d/dq - i d/dp)/2,
  d/dzbar = (d/dq + i d/dp)/2.

Both products are computed exactly: on polynomial data the series
terminate, and truncation only drops terms whose combined degree
exceeds the element's order K.

The operator family E_sigma = exp(sigma * lam * Lap) with
Lap = sum_k d^2/dz^k dzbar^k = (1/4) sum_k (d^2/d(q^k)^2 + d^2/d(p_k)^2)
conjugates one product into the other.  The sign sigma that actually
intertwines them under the conventions above is discovered at runtime by
symbolic verification on a monomial basis (and cached per dimension and
order) rather than hard-coded.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .qpoly import DimensionMismatch
from .rationals import GaussianRational, I, ONE
from .welement import LambdaPoly, WElement, _add_idx, _zeros


class ConsistencyError(RuntimeError):
    """An internal symbolic self-check failed; indicates a genuine bug."""


# ---------------------------------------------------------------------------
# scalar product kernels (flat-term pair propagation)
# ---------------------------------------------------------------------------

def _accumulate(out: dict, key, value):
    s = out.get(key)
    s = value if s is None else s + value
    if s:
        out[key] = s
    else:
        out.pop(key, None)


def _weyl_kernel(a: WElement, b: WElement, K: int) -> WElement:
    """Pair propagation for the antisymmetric q/p pairing product."""
    n = a.n
    # state: ((a1, I1, E1), (a2, I2, E2)) -> coeff, all descendants of a pair
    # keep combined degree a1+a2+r+|I1|+|I2| which is invariant along the
    # propagation, so pairs are pruned once at entry
    state: dict = {}
    for t1 in a.flat_terms():
        d1 = t1[0] + sum(t1[1])
        for t2 in b.flat_terms():
            if d1 + t2[0] + sum(t2[1]) > K:
                continue
            _accumulate(state, (t1[:3], t2[:3]), t1[3] * t2[3])
    out: dict = {}
    r = 0
    half_i = I * Fraction(1, 2)
    factor = ONE  # (i/2)^r / r!
    while state:
        for ((a1, i1, e1), (a2, i2, e2)), c in state.items():
            _accumulate(out, (a1 + a2 + r, _add_idx(i1, i2), _add_idx(e1, e2)), c * factor)
        new: dict = {}
        for ((a1, i1, e1), (a2, i2, e2)), c in state.items():
            for k in range(n):
                # d/dq^k (x) d/dp_k
                if e1[k] and i2[k]:
                    e1d = list(e1); e1d[k] -= 1
                    i2d = list(i2); i2d[k] -= 1
                    _accumulate(
                        new,
                        ((a1, i1, tuple(e1d)), (a2, tuple(i2d), e2)),
                        c * (e1[k] * i2[k]),
                    )
                # - d/dp_k (x) d/dq^k
                if i1[k] and e2[k]:
                    i1d = list(i1); i1d[k] -= 1
                    e2d = list(e2); e2d[k] -= 1
                    _accumulate(
                        new,
                        ((a1, tuple(i1d), e1), (a2, i2, tuple(e2d))),
                        c * (-(i1[k] * e2[k])),
                    )
        state = new
        r += 1
        factor = factor * half_i * Fraction(1, r)
    return WElement.from_flat(n, K, out)


def _wick_kernel(a: WElement, b: WElement, K: int) -> WElement:
    """Pair propagation for the z/zbar pairing product."""
    n = a.n
    state: dict = {}
    for t1 in a.flat_terms():
        for t2 in b.flat_terms():
            _accumulate(state, (t1[:3], t2[:3]), t1[3] * t2[3])
    out: dict = {}
    r = 0
    factor = ONE  # 2^r / r!
    half = GaussianRational(Fraction(1, 2))
    mih = GaussianRational(0, Fraction(-1, 2))  # -i/2
    pih = GaussianRational(0, Fraction(1, 2))   # +i/2
    while state:
        for ((a1, i1, e1), (a2, i2, e2)), c in state.items():
            if a1 + a2 + r + sum(i1) + sum(i2) > K:
                continue
            _accumulate(out, (a1 + a2 + r, _add_idx(i1, i2), _add_idx(e1, e2)), c * factor)
        new: dict = {}
        for ((a1, i1, e1), (a2, i2, e2)), c in state.items():
            if a1 + a2 + r + 1 > K:
                continue  # every descendant carries lam-power > K
            for k in range(n):
                # d/dz^k on the left factor: (dq - i dp)/2
                left = []
                if e1[k]:
                    e1d = list(e1); e1d[k] -= 1
                    left.append(((a1, i1, tuple(e1d)), half * e1[k]))
                if i1[k]:
                    i1d = list(i1); i1d[k] -= 1
                    left.append(((a1, tuple(i1d), e1), mih * i1[k]))
                if not left:
                    continue
                # d/dzbar^k on the right factor: (dq + i dp)/2
                right = []
                if e2[k]:
                    e2d = list(e2); e2d[k] -= 1
                    right.append(((a2, i2, tuple(e2d)), half * e2[k]))
                if i2[k]:
                    i2d = list(i2); i2d[k] -= 1
                    right.append(((a2, tuple(i2d), e2), pih * i2[k]))
                for lt, lc in left:
                    for rt, rc in right:
                        _accumulate(new, (lt, rt), c * lc * rc)
        state = new
        r += 1
        factor = factor * Fraction(2, r)
    return WElement.from_flat(n, K, out)


def _laplace_image(flat: dict, n: int) -> dict:
    """One application of (1/4) sum_k (d^2/d(q^k)^2 + d^2/d(p_k)^2)."""
    out: dict = {}
    quarter = Fraction(1, 4)
    for (a, idx, exp), c in flat.items():
        for k in range(n):
            if exp[k] >= 2:
                e = list(exp); e[k] -= 2
                _accumulate(out, (a, idx, tuple(e)), c * (exp[k] * (exp[k] - 1) * quarter))
            if idx[k] >= 2:
                i = list(idx); i[k] -= 2
                _accumulate(out, (a, tuple(i), exp), c * (idx[k] * (idx[k] - 1) * quarter))
    return out


def _exp_laplace(x: WElement, sign: int, K: int) -> WElement:
    """Apply exp(sign * lam * Lap), exactly on polynomial data."""
    n = x.n
    state = {t[:3]: t[3] for t in x.flat_terms()}
    out: dict = {}
    m = 0
    factor = ONE  # sign^m / m!
    while state:
        for (a, idx, exp), c in state.items():
            if a + m + sum(idx) <= K:
                _accumulate(out, (a + m, idx, exp), c * factor)
        state = _laplace_image(state, n)
        m += 1
        factor = factor * Fraction(sign, m)
    return WElement.from_flat(n, K, out)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

class MatrixWElement:
    """A square matrix with WElement entries; involution is the
    entrywise conjugate transpose."""

    __slots__ = ("N", "n", "K", "entries")

    def __init__(self, entries):
        rows = [list(row) for row in entries]
        N = len(rows)
        if N == 0 or any(len(r) != N for r in rows):
            raise ValueError("matrix must be square and non-empty")
        first = rows[0][0]
        for row in rows:
            for x in row:
                if x.n != first.n or x.K != first.K:
                    raise DimensionMismatch("inconsistent matrix entries")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "n", first.n)
        object.__setattr__(self, "K", first.K)
        object.__setattr__(self, "entries", rows)

    def __setattr__(self, name, value):
        raise AttributeError("MatrixWElement is immutable")

    @classmethod
    def identity(cls, N: int, n: int, K: int) -> "MatrixWElement":
        one = WElement.constant(n, K, 1)
        zero = WElement.zero(n, K)
        return cls([[one if i == j else zero for j in range(N)] for i in range(N)])

    @classmethod
    def scalar(cls, x: WElement) -> "MatrixWElement":
        return cls([[x]])

    def map_entries(self, f) -> "MatrixWElement":
        return MatrixWElement([[f(x) for x in row] for row in self.entries])

    def __add__(self, other: "MatrixWElement") -> "MatrixWElement":
        self._check(other)
        return MatrixWElement(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __sub__(self, other: "MatrixWElement") -> "MatrixWElement":
        self._check(other)
        return MatrixWElement(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def _check(self, other: "MatrixWElement"):
        if self.N != other.N or self.n != other.n or self.K != other.K:
            raise DimensionMismatch("matrix shape or base mismatch")

    def involution(self) -> "MatrixWElement":
        return MatrixWElement(
            [[self.entries[j][i].conjugate() for j in range(self.N)] for i in range(self.N)]
        )

    def is_zero(self) -> bool:
        return all(x.is_zero() for row in self.entries for x in row)

    def __eq__(self, other):
        if not isinstance(other, MatrixWElement):
            return NotImplemented
        return self.entries == other.entries

    def __repr__(self):
        return f"MatrixWElement(N={self.N}, n={self.n}, K={self.K})"


def _matrix_product(a: MatrixWElement, b: MatrixWElement, kernel, K: int) -> MatrixWElement:
    a._check(b)
    N = a.N
    zero = WElement.zero(a.n, K)
    rows = []
    for i in range(N):
        row = []
        for j in range(N):
            acc = zero
            for k in range(N):
                acc = acc + kernel(a.entries[i][k], b.entries[k][j], K)
            row.append(acc)
        rows.append(row)
    return MatrixWElement(rows)


# ---------------------------------------------------------------------------
# public products
# ---------------------------------------------------------------------------

def weyl_product(a, b):
    """The deformed product with antisymmetric q/p derivative pairing.

    Graded inputs of degree j and k multiply to degree j + k, so the
    truncation at order K is exact.
    """
    if isinstance(a, MatrixWElement):
        if not isinstance(b, MatrixWElement):
            raise DimensionMismatch("cannot mix matrix and scalar operands")
        return _matrix_product(a, b, _weyl_kernel, a.K)
    a._check(b)
    return _weyl_kernel(a, b, a.K)


def wick_product(a, b):
    """The deformed product pairing d/dz with d/dzbar, z^k = q^k + i p_k."""
    if isinstance(a, MatrixWElement):
        if not isinstance(b, MatrixWElement):
            raise DimensionMismatch("cannot mix matrix and scalar operands")
        return _matrix_product(a, b, _wick_kernel, a.K)
    a._check(b)
    return _wick_kernel(a, b, a.K)


def commutator_weyl(a, b):
    return weyl_product(a, b) - weyl_product(b, a)


def canonical_bracket(a: WElement, b: WElement) -> WElement:
    """The canonical bracket sum_k (dq^k a * dp_k b - dp_k a * dq^k b)."""
    a._check(b)
    out = WElement.zero(a.n, a.K)
    for k in range(a.n):
        out = out + a.diff_q(k) * b.diff_p(k) - a.diff_p(k) * b.diff_q(k)
    return out


# ---------------------------------------------------------------------------
# chart maps
# ---------------------------------------------------------------------------

def pi_star(f: LambdaPoly, K: int | None = None) -> WElement:
    """Embed a base lam-series as a p-independent element."""
    K = f.K if K is None else K
    n = f.n
    return WElement(n, K, {(r, _zeros(n)): poly for r, poly in f.coeffs.items()})


def iota_star(a: WElement) -> LambdaPoly:
    """Set all momenta to zero, keeping the lam-series of q-polynomials."""
    n = a.n
    zero_idx = _zeros(n)
    coeffs = {r: poly for (r, idx), poly in a.terms.items() if idx == zero_idx}
    return LambdaPoly(n, a.K, coeffs)


# ---------------------------------------------------------------------------
# the exponential equivalence between the two products
# ---------------------------------------------------------------------------

def _monomial_basis(n: int, total_degree: int, q_cap: int | None = None):
    """All monomials lam^a p^I q^E with a + |I| + |E| <= total_degree."""
    out = []
    for d in range(total_degree + 1):
        for a in range(d + 1):
            for ptot in range(d - a + 1):
                qtot = d - a - ptot
                if q_cap is not None and qtot > q_cap:
                    continue
                for pi in _exponents(n, ptot):
                    for qe in _exponents(n, qtot):
                        out.append((a, pi, qe))
    return out


def _exponents(n: int, total: int):
    """Multi-indices of length n summing to exactly total."""
    if n == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _exponents(n - 1, total - first):
            yield (first,) + rest


def _exponents_upto(n: int, total: int):
    for t in range(total + 1):
        yield from _exponents(n, t)


def _exact_order_for_pair(a: WElement, b: WElement) -> int:
    """A truncation order at which all intermediate results of the
    intertwining check are computed without dropping any term."""
    def budget(x):
        m = 0
        for (la, idx), poly in x.terms.items():
            qd = max((sum(e) for e in poly.terms), default=0)
            m = max(m, la + 2 * (sum(idx) + qd))
        return m
    return budget(a) + budget(b) + 2


def _check_sign_on_pair(sign: int, a: WElement, b: WElement) -> bool:
    K = _exact_order_for_pair(a, b)
    a = a.lift(K)
    b = b.lift(K)
    lhs = _exp_laplace(_wick_kernel(a, b, K), sign, K)
    rhs = _weyl_kernel(_exp_laplace(a, sign, K), _exp_laplace(b, sign, K), K)
    return lhs == rhs


_SIGN_CACHE: dict = {}


def resolve_fock_sign(n: int, K: int, q_cap: int = 2) -> dict:
    """Determine the sign sigma with E_sigma = exp(sigma lam Lap) mapping
    the z/zbar product into the q/p product multiplicatively.

    The verification runs over all ordered pairs from the monomial basis
    with combined degree a + |I| <= min(K, 2) and q-degree <= q_cap,
    computed in exact (untruncated) arithmetic, plus compatibility with
    conjugation.  Exactly one sign must pass.  The result is memoized per
    (n, K).
    """
    key = (n, K)
    cached = _SIGN_CACHE.get(key)
    if cached is not None:
        return cached
    deg = min(K, 2) if K >= 1 else 1
    basis = [
        WElement.monomial(n, max(K, deg), a, pi, qe)
        for (a, pi, qe) in _monomial_basis(n, deg + q_cap, q_cap=q_cap)
        if a + sum(pi) <= deg
    ]
    survivors = []
    for sign in (1, -1):
        ok = all(
            _check_sign_on_pair(sign, x, y)
            for x, y in itertools.product(basis, repeat=2)
        )
        ok = ok and all(
            _exp_laplace(x.conjugate(), sign, x.K) == _exp_laplace(x, sign, x.K).conjugate()
            for x in basis
        )
        if ok:
            survivors.append(sign)
    if len(survivors) != 1:
        raise ConsistencyError(
            f"equivalence sign resolution failed for n={n}, K={K}: "
            f"passing signs {survivors}"
        )
    report = {"n": n, "K": K, "sigma": survivors[0], "basis_size": len(basis)}
    _SIGN_CACHE[key] = report
    return report


def fock_equivalence(a, direction: str = "forward", sign: int | None = None):
    """Apply the product-intertwining operator E = exp(sigma lam Lap).

    direction "forward" maps the z/zbar product side into the q/p side;
    "inverse" applies the inverse operator.  Returns (result, sigma).
    """
    if direction not in ("forward", "inverse"):
        raise ValueError(f"unknown direction {direction!r}")
    if isinstance(a, MatrixWElement):
        sigma = resolve_fock_sign(a.n, a.K)["sigma"] if sign is None else sign
        s = sigma if direction == "forward" else -sigma
        return a.map_entries(lambda x: _exp_laplace(x, s, x.K)), sigma
    sigma = resolve_fock_sign(a.n, a.K)["sigma"] if sign is None else sign
    s = sigma if direction == "forward" else -sigma
    return _exp_laplace(a, s, a.K), sigma


def exp_laplace_exact(x: WElement, sign: int) -> WElement:
    """exp(sign lam Lap) at a lifted truncation where nothing is dropped."""
    bound = 0
    for (a, idx), poly in x.terms.items():
        qd = max((sum(e) for e in poly.terms), default=0)
        bound = max(bound, a + sum(idx) + (sum(idx) + qd + 1) // 2 + 1)
    K = max(x.K, bound)
    return _exp_laplace(x.lift(K), sign, K)
