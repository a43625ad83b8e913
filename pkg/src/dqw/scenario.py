"""Scenario-driven runs: load a JSON description, execute the requested
pipeline stages, and emit a deterministic report.

A scenario fixes the dimension, truncation order, star product (inline
cochains or a named generator), the classical functional, the embedding
source, a test set (explicit elements and/or seeded random generation),
and the command list.  Replaying a scenario with the same seed
reproduces the report byte for byte; wall-clock data lives in a separate
"timings" section that comparisons are expected to strip.

Exit codes: 0 all pass; 1 a mathematical violation or negative verdict;
2 configuration or parse error; 3 verdict-bearing steps ran but every
one was inconclusive.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .cobsolver import SolverInfeasible, SolverLimitExceeded
from .functionals import (MatrixLambdaPoly, PartitionError, StateFunctional,
                          UndeformedExtension, check_positivity,
                          deform_functional, glue_functionals)
from .qpoly import QPolynomial
from .rationals import GaussianRational, parse_fraction, parse_scalar
from .starspec import (InvalidStarProduct, StarProductSpec,
                       make_constant_theta_star, make_linear_poisson_2d_star,
                       make_zero_star, validate_star)
from .taubuild import (BuildAborted, ClosedFormTau, build_tau,
                       check_poisson_realization)
from .welement import LambdaPoly, NonRealSeries
from .weyl import ConsistencyError


class ConfigurationError(ValueError):
    """Malformed or inconsistent scenario content."""


EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3

DEFAULT_COMMANDS = ("validate", "build-tau", "deform", "check-pos")


@dataclass
class Scenario:
    name: str
    n: int
    K: int
    N: int
    star_product: dict
    functional: dict
    tau_source: str = "solver"
    tests: dict = field(default_factory=dict)
    glue_weights: list | None = None
    commands: list = field(default_factory=lambda: list(DEFAULT_COMMANDS))

    @classmethod
    def from_json(cls, data: dict) -> "Scenario":
        try:
            return cls(
                name=data["name"],
                n=data["n"],
                K=data["K"],
                N=data.get("N", 1),
                star_product=data["star_product"],
                functional=data["functional"],
                tau_source=data.get("tau", {}).get("source", "solver"),
                tests=data.get("tests", {}),
                glue_weights=data.get("glue", {}).get("weights"),
                commands=data.get("commands", list(DEFAULT_COMMANDS)),
            )
        except KeyError as e:
            raise ConfigurationError(f"scenario misses required key {e}")

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "n": self.n,
            "K": self.K,
            "N": self.N,
            "star_product": self.star_product,
            "tau": {"source": self.tau_source},
            "functional": self.functional,
            "tests": self.tests,
            "commands": self.commands,
        }
        if self.glue_weights is not None:
            out["glue"] = {"weights": self.glue_weights}
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigurationError(f"cannot read scenario: {e}")
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"malformed JSON in {path}: line {e.lineno} column {e.colno}: {e.msg}"
        )
    return Scenario.from_json(data)


# ---------------------------------------------------------------------------
# scenario materialization
# ---------------------------------------------------------------------------

def build_star_product(scenario: Scenario) -> StarProductSpec:
    cfg = scenario.star_product
    kind = cfg.get("generator")
    if kind == "constant_theta":
        theta = [[parse_fraction(x) for x in row] for row in cfg["theta"]]
        if len(theta) != scenario.n:
            raise ConfigurationError("theta size differs from scenario dimension")
        return make_constant_theta_star(theta, scenario.K)
    if kind == "zero":
        return make_zero_star(scenario.n, scenario.K)
    if kind == "linear_poisson_2d":
        if scenario.n != 2:
            raise ConfigurationError("linear_poisson_2d requires n = 2")
        return make_linear_poisson_2d_star(scenario.K)
    if "inline" in cfg:
        spec = StarProductSpec.from_json(cfg["inline"])
        if spec.n != scenario.n:
            raise ConfigurationError("inline star product has wrong dimension")
        if spec.order < scenario.K:
            raise ConfigurationError(
                f"inline star product order {spec.order} below scenario K={scenario.K}"
            )
        return spec
    raise ConfigurationError(f"unknown star_product directive: {cfg}")


def build_functional(scenario: Scenario) -> StateFunctional:
    try:
        atoms = [
            ([parse_fraction(x) for x in a["point"]],
             [parse_scalar(v) for v in a["vector"]])
            for a in scenario.functional["atoms"]
        ]
    except (KeyError, ValueError) as e:
        raise ConfigurationError(f"bad functional description: {e}")
    return StateFunctional(scenario.n, scenario.N, atoms)


def build_tau_map(scenario: Scenario, spec: StarProductSpec):
    if scenario.tau_source == "solver":
        tau, report = build_tau(spec, scenario.K, validate=False)
        return tau, report
    if scenario.tau_source == "closed_form":
        if spec.theta is None:
            raise ConfigurationError(
                "closed_form embedding requires a constant bracket matrix"
            )
        return ClosedFormTau(spec.theta), None
    raise ConfigurationError(f"unknown tau source {scenario.tau_source!r}")


def random_lambda_poly(rng: random.Random, n: int, K: int, max_q_degree: int,
                       max_coeff: int, lambda_corrections: bool) -> LambdaPoly:
    coeffs = {}
    orders = [0]
    if lambda_corrections and K >= 1:
        orders += sorted(rng.sample(range(1, K + 1), k=min(2, K)))
    for r in orders:
        terms = {}
        for _ in range(rng.randint(1, 3)):
            exp = [0] * n
            budget = rng.randint(0, max_q_degree)
            for _ in range(budget):
                exp[rng.randrange(n)] += 1
            c = GaussianRational(
                Fraction(rng.randint(-max_coeff, max_coeff), rng.randint(1, max_coeff)),
                Fraction(rng.randint(-max_coeff, max_coeff), rng.randint(1, max_coeff)),
            )
            if c:
                key = tuple(exp)
                terms[key] = terms[key] + c if key in terms else c
        poly = QPolynomial(n, terms)
        if poly:
            coeffs[r] = poly
    return LambdaPoly(n, K, coeffs)


def generate_tests(scenario: Scenario, seed_override: int | None = None):
    """The scenario's test elements, explicit first, then seeded random."""
    n, K, N = scenario.n, scenario.K, scenario.N
    tests = []
    labels = []
    for i, entry in enumerate(scenario.tests.get("explicit", [])):
        if "entries" in entry:
            element = MatrixLambdaPoly.from_json(entry)
        else:
            element = LambdaPoly.from_json(entry)
        if getattr(element, "N", 1) != N:
            raise ConfigurationError(f"explicit test {i} has wrong matrix size")
        tests.append(element)
        labels.append(f"explicit_{i}")
    randcfg = scenario.tests.get("random")
    if randcfg:
        seed = seed_override if seed_override is not None else randcfg["seed"]
        rng = random.Random(seed)
        count = randcfg.get("count", 20)
        max_q = randcfg.get("max_q_degree", 3)
        max_c = randcfg.get("max_coeff", 4)
        lam = randcfg.get("lambda_corrections", True)
        for i in range(count):
            if N == 1:
                tests.append(random_lambda_poly(rng, n, K, max_q, max_c, lam))
            else:
                tests.append(MatrixLambdaPoly(
                    [[random_lambda_poly(rng, n, K, max_q, max_c, lam)
                      for _ in range(N)] for _ in range(N)]
                ))
            labels.append(f"random_{i}")
    return tests, labels


# ---------------------------------------------------------------------------
# the runner
# ---------------------------------------------------------------------------

def _normalize_command(cmd) -> dict:
    if isinstance(cmd, str):
        return {"op": cmd}
    if isinstance(cmd, dict) and "op" in cmd:
        return dict(cmd)
    raise ConfigurationError(f"bad command entry: {cmd!r}")


def run_scenario(scenario: Scenario, seed_override: int | None = None,
                 max_order_override: int | None = None) -> tuple:
    """Execute the scenario.  Returns (report_dict, exit_code)."""
    if max_order_override is not None:
        scenario = Scenario.from_json(
            {**scenario.to_json(), "K": max_order_override}
        )
    t_start = time.perf_counter()
    timings = {}
    commands = [_normalize_command(c) for c in scenario.commands]
    results = []
    verdict_outcomes = []

    spec = None
    tau = None
    tau_report = None
    deformed = None
    state = build_functional(scenario)

    def record(op, outcome, detail, t0):
        results.append({"op": op, "outcome": outcome, "detail": detail})
        timings[f"{len(results) - 1}:{op}"] = round(time.perf_counter() - t0, 6)

    for cmd in commands:
        op = cmd["op"]
        t0 = time.perf_counter()
        if op == "validate":
            spec = spec or build_star_product(scenario)
            report = validate_star(spec, scenario.K)
            record(op, "pass" if report.ok else "fail", report.to_json(), t0)
            if not report.ok:
                break
        elif op == "build-tau":
            spec = spec or build_star_product(scenario)
            try:
                tau, tau_report = build_tau_map(scenario, spec)
            except (SolverInfeasible, SolverLimitExceeded) as e:
                record(op, "inconclusive",
                       {"error": str(e),
                        "bounds_tried": getattr(e, "bounds_tried", None)}, t0)
                verdict_outcomes.append("inconclusive")
                break
            except (BuildAborted, ConsistencyError, InvalidStarProduct) as e:
                record(op, "fail", {"error": str(e)}, t0)
                break
            realization = check_poisson_realization(tau, spec, K=scenario.K)
            detail = {
                "tau": "closed_form" if isinstance(tau, ClosedFormTau) else "solver",
                "report": tau_report.to_json() if tau_report else None,
                "poisson_realization": realization.to_json(),
            }
            record(op, "pass" if realization.ok else "fail", detail, t0)
            if not realization.ok:
                break
        elif op == "deform":
            if tau is None:
                record(op, "fail", {"error": "deform requires a built embedding"}, t0)
                break
            deformed = deform_functional(state, tau, K=scenario.K)
            record(op, "pass", deformed.describe(), t0)
        elif op == "check-pos":
            spec = spec or build_star_product(scenario)
            which = cmd.get("functional", "deformed")
            expect = cmd.get("expect", "nonnegative")
            if which == "undeformed":
                functional = UndeformedExtension(state, scenario.K)
            elif which == "deformed":
                if deformed is None:
                    record(op, "fail",
                           {"error": "check-pos on the deformed functional "
                                     "requires a prior deform step"}, t0)
                    break
                functional = deformed
            elif which == "glued":
                if scenario.glue_weights is None:
                    raise ConfigurationError("glued check needs glue weights")
                base = deformed if deformed is not None \
                    else UndeformedExtension(state, scenario.K)
                parts = [
                    (LambdaPoly.constant(scenario.n, scenario.K, parse_fraction(w)),
                     base)
                    for w in scenario.glue_weights
                ]
                try:
                    functional = glue_functionals(parts, spec)
                except PartitionError as e:
                    record(op, "fail", {"error": str(e)}, t0)
                    break
            else:
                raise ConfigurationError(f"unknown functional variant {which!r}")
            tests, labels = generate_tests(scenario, seed_override)
            try:
                verdict = check_positivity(functional, spec, tests, labels=labels)
            except NonRealSeries as e:
                record(op, "fail", {"error": str(e)}, t0)
                break
            detail = verdict.to_json()
            detail["expect"] = expect
            if expect == "negative":
                outcome = "pass" if verdict.aggregate == "fail" else "fail"
            else:
                outcome = verdict.aggregate
            record(op, outcome, detail, t0)
            verdict_outcomes.append(outcome)
        else:
            raise ConfigurationError(f"unknown command {op!r}")

    outcomes = [r["outcome"] for r in results]
    if any(o == "fail" for o in outcomes):
        exit_code = EXIT_FAIL
        overall = "fail"
    elif verdict_outcomes and all(o == "inconclusive" for o in verdict_outcomes):
        exit_code = EXIT_INCONCLUSIVE
        overall = "inconclusive"
    else:
        exit_code = EXIT_PASS
        overall = "pass"

    timings["total"] = round(time.perf_counter() - t_start, 6)
    report = {
        "scenario": {
            "name": scenario.name,
            "digest": scenario.digest(),
            "n": scenario.n,
            "K": scenario.K,
            "N": scenario.N,
            "seed_override": seed_override,
        },
        "commands": results,
        "overall": {"outcome": overall, "exit_code": exit_code},
        "timings": timings,
    }
    return report, exit_code


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def report_to_json_text(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def strip_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


def report_to_text(report: dict) -> str:
    lines = []
    sc = report["scenario"]
    lines.append(f"scenario {sc['name']} (n={sc['n']}, K={sc['K']}, N={sc['N']})")
    lines.append(f"digest {sc['digest']}")
    for r in report["commands"]:
        lines.append(f"  [{r['outcome'].upper():12s}] {r['op']}")
        detail = r.get("detail") or {}
        if r["op"] == "check-pos" and "tests" in detail:
            for t in detail["tests"]:
                lines.append(
                    f"      {t['label']}: {t['classification']} "
                    f"coefficients {t['coefficients']}"
                )
        if "error" in detail:
            lines.append(f"      error: {detail['error']}")
    ov = report["overall"]
    lines.append(f"overall: {ov['outcome']} (exit {ov['exit_code']})")
    return "\n".join(lines) + "\n"


def emit_report(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return report_to_json_text(report)
    if fmt == "text":
        return report_to_text(report)
    raise ConfigurationError(f"unknown report format {fmt!r}")
