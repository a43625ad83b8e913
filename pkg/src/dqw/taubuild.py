"""Order-by-order construction of the multiplicative embedding into the
formal phase-space algebra.

For a validated star product the builder produces 1-cochains tau_0..tau_K,
with tau_0 the plain embedding f -> f and each tau_k homogeneous of
combined degree k, such that the error cochain

    eps(f, g) = tau(f * g) - tau(f) . tau(g)

vanishes identically in all combined degrees <= K (tau extended
lam-linearly, the dot being the deformed q/p-pairing product).  Stage k
reduces to one cohomological equation d(tau_k) = s * R_k with

    R_k(f,g) = sum_{i<k} lam^{k-i} tau_i(C_{k-i}(f,g))
               - sum_{0<i<k} tau_i(f) . tau_{k-i}(g),

where R_k is checked to be a homogeneous cocycle with symmetric
classical limit before solving.  The stage sign s is not assumed: it is
fixed at the first nontrivial stage by requiring the recomputed error to
vanish, then asserted at every later stage.  For Hermitian star products
each tau_k is replaced by its Hermitian part (which solves the same
stage equation) and the error check is repeated.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .cobsolver import SolverConfig, solve_coboundary
from .cochain import (MultiDiffCochain, alt, coboundary, cochain_weyl_product,
                      compose_slot, find_witness, identity_cochain, mu_cochain,
                      plug_constant)
from .qpoly import DimensionMismatch, QPolynomial
from .starspec import InvalidStarProduct, StarProductSpec, validate_star
from .welement import LambdaPoly, WElement
from .weyl import ConsistencyError


class BuildAborted(RuntimeError):
    """A structural assertion failed during the staged construction."""


@dataclass
class StageReport:
    stage: int
    stage_term: dict | None       # R_k, which is also the degree-k error of
                                  # the previous prefix (no tau_k added yet)
    cl_symmetric: bool
    sign: int | None
    hermitized: bool
    solver: dict | None
    epsilon_checked_to: int

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "stage_term": self.stage_term,
            "cl_symmetric": self.cl_symmetric,
            "sign": self.sign,
            "hermitized": self.hermitized,
            "solver": self.solver,
            "epsilon_checked_to": self.epsilon_checked_to,
        }


@dataclass
class BuildReport:
    n: int
    K: int
    hermitian: bool
    sign: int | None
    spec_digest: str
    solver_config: dict
    stages: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "K": self.K,
            "hermitian": self.hermitian,
            "sign": self.sign,
            "spec_digest": self.spec_digest,
            "solver_config": self.solver_config,
            "stages": [s.to_json() for s in self.stages],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BuildReport":
        rep = cls(n=data["n"], K=data["K"], hermitian=data["hermitian"],
                  sign=data["sign"], spec_digest=data["spec_digest"],
                  solver_config=data["solver_config"])
        rep.stages = [
            StageReport(stage=s["stage"], stage_term=s["stage_term"],
                        cl_symmetric=s["cl_symmetric"], sign=s["sign"],
                        hermitized=s["hermitized"], solver=s["solver"],
                        epsilon_checked_to=s["epsilon_checked_to"])
            for s in data["stages"]
        ]
        return rep


def spec_digest(spec: StarProductSpec) -> str:
    blob = json.dumps(spec.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class TauMap:
    """The built embedding: tau_0..tau_K with build diagnostics."""

    __slots__ = ("n", "K", "components", "hermitian", "report")

    tail_exact = False  # components of degree > K are unknown

    def __init__(self, n, K, components, hermitian, report=None):
        components = tuple(components)
        if len(components) != K + 1:
            raise ValueError("need components for every degree 0..K")
        for k, c in enumerate(components):
            if c.arity != 1 or c.n != n:
                raise DimensionMismatch(f"component {k} has wrong shape")
            if not c.is_zero() and not c.is_homogeneous(k):
                raise ValueError(f"component {k} is not homogeneous of degree {k}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "hermitian", hermitian)
        object.__setattr__(self, "report", report)

    def __setattr__(self, name, value):
        raise AttributeError("TauMap is immutable")

    def total_cochain(self) -> MultiDiffCochain:
        out = MultiDiffCochain.zero(self.n, self.K, 1)
        for c in self.components:
            out = out + c
        return out

    def apply(self, f: LambdaPoly) -> WElement:
        """lam-linear application, truncated at combined degree K."""
        if f.n != self.n:
            raise DimensionMismatch("argument dimension mismatch")
        total = self.total_cochain()
        out = WElement.zero(self.n, self.K)
        for r, poly in f.coeffs.items():
            if r > self.K:
                continue
            val = total.evaluate([poly])
            out = out + _shift_lam(val, r)
        return out

    def classical_part(self) -> MultiDiffCochain:
        out = MultiDiffCochain.zero(self.n, self.K, 1)
        for c in self.components:
            out = out + c.classical_limit()
        return out

    def __eq__(self, other):
        if not isinstance(other, TauMap):
            return NotImplemented
        return (self.n, self.K, self.hermitian) == (other.n, other.K, other.hermitian) \
            and self.components == other.components

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "K": self.K,
            "hermitian": self.hermitian,
            "components": [c.to_json() for c in self.components],
            "report": self.report.to_json() if self.report else None,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TauMap":
        comps = [MultiDiffCochain.from_json(c) for c in data["components"]]
        report = BuildReport.from_json(data["report"]) if data.get("report") else None
        return cls(data["n"], data["K"], comps, data["hermitian"], report)


class ClosedFormTau:
    """The exact substitution embedding for a constant bracket matrix:
    f -> f(q^i - (1/2) sum_j theta^{ij} p_j).

    Complete to all degrees, so downstream lam-series built from it are
    exact through the full truncation order.
    """

    __slots__ = ("n", "theta")

    tail_exact = True
    hermitian = True

    def __init__(self, theta):
        theta = tuple(tuple(Fraction(x) for x in row) for row in theta)
        n = len(theta)
        for k in range(n):
            for l in range(n):
                if theta[k][l] != -theta[l][k]:
                    raise ValueError("theta must be antisymmetric")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "theta", theta)

    def __setattr__(self, name, value):
        raise AttributeError("ClosedFormTau is immutable")

    def substitution_images(self, K: int):
        """The images of the coordinates, as degree <= 1 elements."""
        out = []
        for i in range(self.n):
            img = WElement.coordinate_q(self.n, K, i)
            for j in range(self.n):
                if self.theta[i][j]:
                    img = img - WElement.coordinate_p(self.n, K, j).scale(
                        Fraction(self.theta[i][j], 2))
            out.append(img)
        return out

    def apply(self, f: LambdaPoly, K: int | None = None) -> WElement:
        K = f.K if K is None else K
        images = self.substitution_images(max(K, _needed_degree(f)))
        KK = images[0].K
        powers: dict = {}

        def img_power(i, e):
            got = powers.get((i, e))
            if got is None:
                got = WElement.constant(self.n, KK, 1)
                for _ in range(e):
                    got = got * images[i]
                powers[(i, e)] = got
            return got

        out = WElement.zero(self.n, KK)
        for r, poly in f.coeffs.items():
            acc = WElement.zero(self.n, KK)
            for exp, c in poly.terms.items():
                term = WElement.constant(self.n, KK, c)
                for i, e in enumerate(exp):
                    if e:
                        term = term * img_power(i, e)
                acc = acc + term
            out = out + _shift_lam(acc, r)
        return WElement(self.n, K, out.terms)

    def to_json(self) -> dict:
        return {
            "type": "linear_substitution",
            "theta": [[str(x) for x in row] for row in self.theta],
        }


def _needed_degree(f: LambdaPoly) -> int:
    d = 0
    for r, poly in f.coeffs.items():
        d = max(d, r + max((sum(e) for e in poly.terms), default=0))
    return d


def _shift_lam(w: WElement, r: int) -> WElement:
    if r == 0:
        return w
    return WElement(w.n, w.K, {(a + r, idx): p for (a, idx), p in w.terms.items()})


# ---------------------------------------------------------------------------
# stage machinery
# ---------------------------------------------------------------------------

def compute_Rk(spec: StarProductSpec, taus, k: int) -> MultiDiffCochain:
    """The inhomogeneous term of the stage-k equation, with structural
    assertions (homogeneity, cocycle, symmetric classical limit)."""
    n = spec.n
    K = taus[0].K
    out = MultiDiffCochain.zero(n, K, 2)
    for i in range(0, k):
        c = spec.cochain(k - i).retruncate(K)
        out = out + compose_slot(taus[i], 0, c).scale_lambda(k - i)
    for i in range(1, k):
        out = out - cochain_weyl_product(taus[i], taus[k - i])
    if not out.is_zero():
        if not out.is_homogeneous(k):
            raise BuildAborted(f"stage-{k} term is not homogeneous of degree {k}")
        d = coboundary(out, deformed=True)
        if not d.is_zero():
            args, val = find_witness(d)
            raise BuildAborted(
                f"stage-{k} term is not a cocycle (invalid star product?); "
                f"witness {[str(a) for a in args]} -> {val}"
            )
        obstruction = alt(out.classical_limit())
        if not obstruction.is_zero():
            args, val = find_witness(obstruction)
            raise BuildAborted(
                f"stage-{k} classical limit is not symmetric; "
                f"witness {[str(a) for a in args]} -> {val}"
            )
    return out


def epsilon_cochain(spec: StarProductSpec, taus, upto: int) -> MultiDiffCochain:
    """tau(f*g) - tau(f).tau(g) as an arity-2 cochain, with values
    truncated at combined degree `upto` (exact for all degrees <= upto)."""
    n = spec.n
    total = MultiDiffCochain.zero(n, upto, 1)
    for c in taus:
        total = total + c.retruncate(upto)
    out = compose_slot(total, 0, mu_cochain(n, upto))
    for r in range(1, min(spec.order, upto) + 1):
        out = out + compose_slot(total, 0, spec.cochain(r).retruncate(upto)).scale_lambda(r)
    out = out - cochain_weyl_product(total, total)
    return out


def build_tau(spec: StarProductSpec, K: int, hermitian: bool | None = None,
              solver_config: SolverConfig | None = None,
              validate: bool = True):
    """Construct the embedding through combined degree K.

    Returns (TauMap, BuildReport).  Raises BuildAborted when a structural
    assertion fails, InvalidStarProduct when validation fails, and
    propagates solver errors.
    """
    if K > spec.order:
        raise InvalidStarProduct(
            f"cannot build to degree {K}: star product only supplied to order {spec.order}"
        )
    if validate:
        rep = validate_star(spec, K)
        if not rep.ok:
            raise InvalidStarProduct(f"star product failed validation: {rep.to_json()}")
    if hermitian is None:
        hermitian = spec.hermitian
    if hermitian and not spec.hermitian:
        raise InvalidStarProduct("Hermitian build requires a Hermitian star product")
    config = solver_config or SolverConfig(min_deriv_order=1)
    if config.min_deriv_order < 1:
        # unit preservation tau(1) = 1 needs derivative order >= 1 in
        # every correction stage
        config = SolverConfig(
            deriv_slack=config.deriv_slack,
            max_escalations=config.max_escalations,
            min_deriv_order=1,
            use_preconditioner=config.use_preconditioner,
        )

    n = spec.n
    report = BuildReport(
        n=n, K=K, hermitian=hermitian, sign=None,
        spec_digest=spec_digest(spec),
        solver_config={
            "deriv_slack": config.deriv_slack,
            "max_escalations": config.max_escalations,
            "min_deriv_order": config.min_deriv_order,
            "use_preconditioner": config.use_preconditioner,
        },
    )
    taus = [identity_cochain(n, K)]
    sign = None
    for k in range(1, K + 1):
        rk = compute_Rk(spec, taus, k)
        if rk.is_zero():
            taus.append(MultiDiffCochain.zero(n, K, 1))
            report.stages.append(StageReport(
                stage=k, stage_term=None, cl_symmetric=True, sign=sign,
                hermitized=False, solver=None, epsilon_checked_to=k))
            _check_epsilon(spec, taus, k)
            continue
        if hermitian and rk.involution() != rk:
            raise BuildAborted(f"stage-{k} term is not Hermitian")
        tried = []
        candidates = [sign] if sign is not None else [1, -1]
        solved = None
        for s in candidates:
            psi, solve_rep = solve_coboundary(
                rk.scale(s), config=config, check_preconditions=(s == candidates[0]))
            cand = psi.hermitian_part() if hermitian else psi
            trial = taus + [cand]
            eps = epsilon_cochain(spec, trial, k)
            bad = [d for d in range(k + 1) if not eps.component(d).is_zero()]
            tried.append((s, bad))
            if not bad:
                solved = (s, cand, solve_rep)
                break
        if solved is None:
            raise ConsistencyError(
                f"no stage sign makes the degree-{k} error vanish: {tried}"
            )
        s, cand, solve_rep = solved
        if sign is None:
            sign = s
            report.sign = s
        if not plug_constant(cand, 0).is_zero():
            raise BuildAborted(f"stage-{k} component does not vanish on constants")
        taus.append(cand)
        report.stages.append(StageReport(
            stage=k, stage_term=rk.to_json(), cl_symmetric=True, sign=s,
            hermitized=hermitian, solver=solve_rep.to_json(),
            epsilon_checked_to=k))

    # final exactness check of every degree <= K at once
    eps = epsilon_cochain(spec, taus, K)
    for d in range(K + 1):
        if not eps.component(d).is_zero():
            raise ConsistencyError(f"final error check failed in degree {d}")
    if hermitian:
        for k, c in enumerate(taus):
            if c.involution() != c:
                raise ConsistencyError(f"component {k} is not Hermitian after build")
    tau = TauMap(n, K, taus, hermitian, report)
    return tau, report


def _check_epsilon(spec, taus, k):
    eps = epsilon_cochain(spec, taus, k)
    for d in range(k + 1):
        if not eps.component(d).is_zero():
            raise ConsistencyError(f"error check failed in degree {d} at stage {k}")


def apply_tau(tau, f: LambdaPoly) -> WElement:
    return tau.apply(f)


# ---------------------------------------------------------------------------
# bracket realization check
# ---------------------------------------------------------------------------

@dataclass
class RealizationReport:
    ok: bool
    checked_pairs: int
    violation: str | None = None

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked_pairs": self.checked_pairs,
                "violation": self.violation}


def check_poisson_realization(tau, spec: StarProductSpec, K: int | None = None,
                              max_q_degree: int = 2) -> RealizationReport:
    """Verify that the classical limit intertwines the star product's
    bracket with the canonical q/p bracket on monomial pairs, through
    momentum degree K - 1."""
    from .weyl import canonical_bracket
    from .weyl import _exponents_upto

    n = tau.n
    if K is None:
        K = tau.K if isinstance(tau, TauMap) else spec.order
    cl = tau.classical_part() if isinstance(tau, TauMap) else None
    basis = [tuple(e) for e in _exponents_upto(n, max_q_degree) if any(e)]
    checked = 0
    for e1 in basis:
        f = QPolynomial.monomial(n, e1)
        for e2 in basis:
            g = QPolynomial.monomial(n, e2)
            bracket = spec.poisson_bracket(f, g)
            if cl is not None:
                lhs = cl.evaluate([bracket])
                rhs = canonical_bracket(cl.evaluate([f]), cl.evaluate([g]))
            else:
                # closed-form substitution map: exact on polynomials
                lhs = _classical_image(tau, bracket, K)
                rhs = canonical_bracket(_classical_image(tau, f, K),
                                        _classical_image(tau, g, K))
            diff = lhs - rhs
            bad = {
                key: p for key, p in diff.terms.items()
                if key[0] == 0 and sum(key[1]) <= K - 1
            }
            checked += 1
            if bad:
                key = sorted(bad)[0]
                return RealizationReport(
                    ok=False, checked_pairs=checked,
                    violation=f"pair ({f}, {g}): p-exponent {key[1]} "
                              f"differs by {bad[key]}")
    return RealizationReport(ok=True, checked_pairs=checked)


def _classical_image(tau, poly: QPolynomial, K: int) -> WElement:
    w = tau.apply(LambdaPoly.from_poly(poly, K))
    return WElement(w.n, w.K, {k: p for k, p in w.terms.items() if k[0] == 0})
