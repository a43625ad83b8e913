import json
from fractions import Fraction

import pytest

from dqw.cochain import MultiDiffCochain
from dqw.qpoly import QPolynomial
from dqw.rationals import gr
from dqw.starspec import (StarProductSpec, make_constant_theta_star,
                          perturb_cochain, star_apply, validate_star)
from dqw.welement import LambdaPoly, _zeros

N = 2


def lp(poly, K=4):
    return LambdaPoly.from_poly(poly, K)


class TestConstantThetaGenerator:
    def test_first_cochain(self, moyal_r2):
        c1 = moyal_r2.cochain(1)
        ih = gr(0, Fraction(1, 2))
        one = QPolynomial.constant(N, 1)
        expect = MultiDiffCochain(N, 4, 2, {
            (0, _zeros(N), ((1, 0), (0, 1))): one.scale(ih),
            (0, _zeros(N), ((0, 1), (1, 0))): one.scale(-ih),
        })
        assert c1 == expect

    def test_zero_matrix_gives_zero_cochains(self):
        spec = make_constant_theta_star([[0, 0], [0, 0]], K=3)
        assert all(spec.cochain(r).is_zero() for r in range(1, 4))

    def test_validates_at_order_six(self, moyal_r2_k6):
        assert validate_star(moyal_r2_k6).ok

    def test_rejects_non_antisymmetric(self):
        with pytest.raises(ValueError):
            make_constant_theta_star([[0, 1], [1, 0]], K=2)


class TestValidator:
    def test_moyal_passes(self, moyal_r2):
        report = validate_star(moyal_r2)
        assert report.ok
        names = {c.name for c in report.checks}
        assert names == {"associativity", "first_order_bracket", "hermitian",
                         "unitality"}

    def test_biderivation_perturbation_fails_at_order_three(self, moyal_r2):
        bump = MultiDiffCochain(N, 4, 2, {
            (0, _zeros(N), ((1, 0), (1, 0))): QPolynomial.constant(N, 1)})
        bad = perturb_cochain(moyal_r2, 2, bump)
        report = validate_star(bad)
        assert not report.ok
        assoc = next(c for c in report.checks if c.name == "associativity")
        # a biderivation is a classical cocycle, so order 2 still holds
        assert assoc.order == 3
        assert assoc.witness

    def test_non_cocycle_perturbation_fails_at_order_two(self, moyal_r2):
        bump = MultiDiffCochain(N, 4, 2, {
            (0, _zeros(N), ((2, 0), (1, 0))): QPolynomial.constant(N, 1)})
        bad = perturb_cochain(moyal_r2, 2, bump)
        report = validate_star(bad)
        assoc = next(c for c in report.checks if c.name == "associativity")
        assert assoc.order == 2

    def test_zero_star_passes(self, zero_star):
        assert validate_star(zero_star).ok

    def test_unitality_violation_detected(self, moyal_r2):
        bump = MultiDiffCochain(N, 4, 2, {
            (0, _zeros(N), ((0, 0), (1, 0))): QPolynomial.constant(N, 1)})
        bad = perturb_cochain(moyal_r2, 2, bump)
        report = validate_star(bad)
        unital = next(c for c in report.checks if c.name == "unitality")
        assert not unital.ok and unital.order == 2

    def test_hermitian_violation_detected(self, moyal_r2):
        bump = MultiDiffCochain(N, 4, 2, {
            (0, _zeros(N), ((1, 0), (1, 0))): QPolynomial.constant(N, gr(0, 1))})
        bad = perturb_cochain(moyal_r2, 2, bump)
        report = validate_star(bad)
        herm = next(c for c in report.checks if c.name == "hermitian")
        assert not herm.ok


class TestStarApply:
    def test_coordinates(self, moyal_r2):
        f = lp(QPolynomial.coordinate(N, 0))
        g = lp(QPolynomial.coordinate(N, 1))
        out = star_apply(moyal_r2, f, g)
        expect = f * g + LambdaPoly(N, 4, {1: QPolynomial.constant(N, gr(0, Fraction(1, 2)))})
        assert out == expect

    def test_unital(self, moyal_r2):
        one = LambdaPoly.constant(N, 4, 1)
        f = lp(QPolynomial.monomial(N, (2, 1)))
        assert star_apply(moyal_r2, one, f) == f
        assert star_apply(moyal_r2, f, one) == f

    def test_zero_poisson_is_pointwise(self, zero_star):
        f = lp(QPolynomial.coordinate(N, 0), K=3)
        g = lp(QPolynomial.monomial(N, (1, 2)), K=3)
        assert star_apply(zero_star, f, g) == f * g

    def test_lambda_bilinear(self, moyal_r2):
        f = lp(QPolynomial.coordinate(N, 0))
        g = lp(QPolynomial.coordinate(N, 1))
        assert star_apply(moyal_r2, f.shift_lam(1), g) == \
            star_apply(moyal_r2, f, g).shift_lam(1)

    def test_hermitian_compatibility(self, moyal_r2):
        f = lp(QPolynomial.coordinate(N, 0) + QPolynomial.coordinate(N, 1).scale(gr(0, 1)))
        g = lp(QPolynomial.monomial(N, (1, 1), gr(1, 1)))
        lhs = star_apply(moyal_r2, f, g).conjugate()
        rhs = star_apply(moyal_r2, g.conjugate(), f.conjugate())
        assert lhs == rhs


class TestLinearPoisson:
    def test_validates(self, linear_2d):
        assert validate_star(linear_2d).ok

    def test_bracket_matrix(self, linear_2d):
        theta = linear_2d.poisson_matrix()
        assert theta[0][1] == QPolynomial.coordinate(N, 0)
        assert theta[1][0] == -QPolynomial.coordinate(N, 0)

    def test_hermitian(self, linear_2d):
        for r in range(1, linear_2d.order + 1):
            assert linear_2d.cochain(r).involution() == linear_2d.cochain(r)

    def test_first_order_commutator(self, linear_2d):
        f = lp(QPolynomial.coordinate(N, 0), K=3)
        g = lp(QPolynomial.coordinate(N, 1), K=3)
        comm = star_apply(linear_2d, f, g) - star_apply(linear_2d, g, f)
        # [x, y] = i lam {x, y} = i lam x
        expect = LambdaPoly(N, 3, {1: QPolynomial.coordinate(N, 0).scale(gr(0, 1))})
        assert comm == expect


class TestJsonSchema:
    def test_roundtrip_constant_theta(self, moyal_r2):
        blob = json.dumps(moyal_r2.to_json(), sort_keys=True)
        again = StarProductSpec.from_json(json.loads(blob))
        assert again.cochains == moyal_r2.cochains
        assert again.theta == moyal_r2.theta
        assert json.dumps(again.to_json(), sort_keys=True) == blob

    def test_roundtrip_linear(self, linear_2d):
        blob = json.dumps(linear_2d.to_json(), sort_keys=True)
        again = StarProductSpec.from_json(json.loads(blob))
        assert again.cochains == linear_2d.cochains
        assert again.theta is None

    def test_schema_shape(self, moyal_r2):
        data = moyal_r2.to_json()
        assert set(data) == {"n", "hermitian", "theta", "cochains"}
        entry = data["cochains"][0]
        assert set(entry) == {"lambda_power", "terms"}
        term = entry["terms"][0]
        assert set(term) == {"coeff_poly", "derivs"}
        assert len(term["derivs"]) == 2


def test_spec_rejects_momentum_content():
    bad = MultiDiffCochain(N, 2, 2, {
        (0, (1, 0), ((1, 0), (0, 1))): QPolynomial.constant(N, 1)})
    with pytest.raises(ValueError):
        StarProductSpec(n=N, order=2, hermitian=True,
                        cochains=(MultiDiffCochain.zero(N, 2, 2), bad))
