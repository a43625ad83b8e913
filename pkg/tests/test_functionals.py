import json
import random
from fractions import Fraction

import pytest

from dqw.functionals import (DeformedFunctional, MatrixLambdaPoly,
                             PartitionError, StateFunctional,
                             UndeformedExtension, check_positivity,
                             deform_functional, glue_functionals,
                             make_point_functional,
                             wick_positivity_certificate)
from dqw.qpoly import QPolynomial
from dqw.rationals import I, gr
from dqw.scenario import random_lambda_poly
from dqw.welement import LambdaPoly, NonRealSeries, SeriesSign, WElement
from dqw.weyl import MatrixWElement

N_DIM, K = 2, 4


def lp(poly, KK=K):
    return LambdaPoly.from_poly(poly, KK)


def counterexample_test():
    return lp(QPolynomial.coordinate(N_DIM, 0) +
              QPolynomial.coordinate(N_DIM, 1).scale(I))


@pytest.fixture(scope="module")
def delta0():
    return make_point_functional(N_DIM, 1, [((0, 0), (1,))])


class TestStateFunctional:
    def test_delta_functional(self, delta0):
        assert delta0.mass() == 1
        f = [[lp(QPolynomial.monomial(N_DIM, (2, 0), 3))]]
        assert str(delta0.eval_matrix_series(f, K)[0]) == "0"

    def test_empty_atom_list_is_zero(self):
        zero = make_point_functional(N_DIM, 1, [])
        assert zero.mass() == 0
        f = [[lp(QPolynomial.constant(N_DIM, 5))]]
        assert all(not c for c in zero.eval_matrix_series(f, K))

    def test_matrix_compression(self):
        st = make_point_functional(N_DIM, 2, [((0, 0), (1, 0))])
        m = MatrixLambdaPoly([
            [lp(QPolynomial.constant(N_DIM, 7)), lp(QPolynomial.constant(N_DIM, 2))],
            [lp(QPolynomial.constant(N_DIM, 3)), lp(QPolynomial.constant(N_DIM, 5))],
        ])
        out = UndeformedExtension(st, K).action(m)
        assert str(out[0]) == "7"

    def test_positive_on_squares_by_construction(self):
        rng = random.Random(31)
        st = make_point_functional(
            N_DIM, 1, [((1, 2), (gr(1, 1),)), ((Fraction(-1, 2), 0), (gr(2),))])
        for _ in range(10):
            f = random_lambda_poly(rng, N_DIM, K, 3, 3, False)
            base = f.coefficient(0)
            val = st.eval_matrix_series([[lp(base.conjugate() * base)]], K)[0]
            assert val.im == 0 and val.re >= 0

    def test_atom_order_canonical(self):
        a = make_point_functional(N_DIM, 1, [((1, 0), (1,)), ((0, 0), (1,))])
        b = make_point_functional(N_DIM, 1, [((0, 0), (1,)), ((1, 0), (1,))])
        assert a == b

    def test_json_roundtrip(self):
        st = make_point_functional(
            N_DIM, 2, [((Fraction(1, 2), -1), (gr(1), gr(0, Fraction(1, 3))))])
        blob = json.dumps(st.to_json(), sort_keys=True)
        assert StateFunctional.from_json(json.loads(blob)) == st


class TestWickCertificate:
    def _z(self, k=0):
        return WElement.coordinate_q(N_DIM, K, k) + \
            WElement.coordinate_p(N_DIM, K, k).scale(I)

    def test_antiholomorphic_coordinate(self, delta0):
        cert = wick_positivity_certificate(
            delta0, MatrixWElement.scalar(self._z().conjugate()))
        assert [str(c) for c in cert.coefficients] == ["0", "2", "0", "0", "0"]
        assert cert.all_nonnegative
        assert any(e["lambda_power"] == 1 for e in cert.entries)

    def test_holomorphic_coordinate_vanishes(self, delta0):
        cert = wick_positivity_certificate(delta0, MatrixWElement.scalar(self._z()))
        assert all(c == 0 for c in cert.coefficients)

    def test_identity_matrix(self, delta0):
        cert = wick_positivity_certificate(
            delta0, MatrixWElement.identity(1, N_DIM, K))
        assert [str(c) for c in cert.coefficients] == ["1", "0", "0", "0", "0"]

    def test_rejects_lambda_content(self, delta0):
        with pytest.raises(ValueError):
            wick_positivity_certificate(
                delta0, MatrixWElement.scalar(WElement.lam(N_DIM, K)))

    def test_seeded_random_matrices_nonnegative(self):
        rng = random.Random(99)
        for trial in range(30):
            NN = rng.choice((1, 2))
            atoms = [
                (tuple(Fraction(rng.randint(-2, 2), rng.randint(1, 2))
                       for _ in range(N_DIM)),
                 tuple(gr(rng.randint(-2, 2), rng.randint(-2, 2))
                       for _ in range(NN)))
                for _ in range(rng.randint(1, 2))
            ]
            state = make_point_functional(N_DIM, NN, atoms)
            entries = []
            for i in range(NN):
                row = []
                for j in range(NN):
                    terms = {}
                    for _ in range(2):
                        pidx = [0] * N_DIM
                        for _ in range(rng.randint(0, 2)):
                            pidx[rng.randrange(N_DIM)] += 1
                        qexp = tuple(rng.randint(0, 1) for _ in range(N_DIM))
                        key = (0, tuple(pidx))
                        poly = QPolynomial.monomial(
                            N_DIM, qexp, gr(rng.randint(-2, 2), rng.randint(-2, 2)))
                        if key in terms:
                            terms[key] = terms[key] + poly
                        else:
                            terms[key] = poly
                    row.append(WElement(N_DIM, K, terms))
                entries.append(row)
            cert = wick_positivity_certificate(state, MatrixWElement(entries))
            assert cert.all_nonnegative


class TestDeformedFunctional:
    def test_unital(self, moyal_r2, fixture_tau_r2, delta0):
        omega = deform_functional(delta0, fixture_tau_r2, K=K)
        out = omega.action(LambdaPoly.constant(N_DIM, K, 1))
        assert str(out[0]) == "1"
        assert all(not c for c in out[1:])

    def test_counterexample_value_closed_form(self, moyal_r2, fixture_tau_r2, delta0):
        from dqw.starspec import star_apply
        omega = deform_functional(delta0, fixture_tau_r2, K=K)
        f = counterexample_test()
        g = star_apply(moyal_r2, f.conjugate(), f)
        out = omega.action(g)
        assert [str(c) for c in out] == ["0", "1/4", "0", "0", "0"]

    def test_classical_limit_property(self, fixture_tau_r2, delta0):
        rng = random.Random(12)
        omega = deform_functional(delta0, fixture_tau_r2, K=K)
        for _ in range(10):
            f = random_lambda_poly(rng, N_DIM, K, 3, 3, True)
            out = omega.action(f)
            assert out[0] == f.coefficient(0).evaluate((0, 0))

    def test_sound_order(self, tau_moyal_r2, fixture_tau_r2, delta0):
        built = deform_functional(delta0, tau_moyal_r2)
        fixt = deform_functional(delta0, fixture_tau_r2, K=K)
        assert built.sound_order == K // 2
        assert fixt.sound_order == K

    def test_requires_order_for_closed_form(self, fixture_tau_r2, delta0):
        with pytest.raises(ValueError):
            deform_functional(delta0, fixture_tau_r2)


class TestCheckPositivity:
    def test_undeformed_counterexample_negative(self, moyal_r2, delta0):
        omega = UndeformedExtension(delta0, K)
        verdict = check_positivity(omega, moyal_r2, [counterexample_test()])
        t = verdict.tests[0]
        assert t.coefficients == ["0", "-1"]
        assert t.classification == SeriesSign.NEGATIVE
        assert verdict.aggregate == "fail"

    def test_deformed_counterexample_positive(self, moyal_r2, fixture_tau_r2, delta0):
        omega = deform_functional(delta0, fixture_tau_r2, K=K)
        verdict = check_positivity(omega, moyal_r2, [counterexample_test()])
        t = verdict.tests[0]
        assert t.coefficients == ["0", "1/4"]
        assert t.classification == SeriesSign.POSITIVE
        assert verdict.aggregate == "pass"

    def test_zero_test_inconclusive(self, moyal_r2, fixture_tau_r2, delta0):
        omega = deform_functional(delta0, fixture_tau_r2, K=K)
        verdict = check_positivity(omega, moyal_r2, [LambdaPoly.zero(N_DIM, K)])
        assert verdict.tests[0].classification == SeriesSign.ZERO_UP_TO_K
        assert verdict.aggregate == "inconclusive"
        assert verdict.inconclusive

    def test_matrix_amplification(self, moyal_r2, fixture_tau_r2):
        state = make_point_functional(N_DIM, 2, [((0, 0), (gr(1), gr(0, 1)))])
        omega = deform_functional(state, fixture_tau_r2, K=K)
        f = counterexample_test()
        m = MatrixLambdaPoly([
            [f, LambdaPoly.constant(N_DIM, K, 1)],
            [LambdaPoly.zero(N_DIM, K), f],
        ])
        verdict = check_positivity(omega, moyal_r2, [m])
        assert verdict.tests[0].classification != SeriesSign.NEGATIVE

    def test_reality_enforced(self, moyal_r2, delta0):
        # a broken "functional" that feeds back a complex series
        class Broken:
            N = 1
            n = N_DIM
            sound_order = K

            def describe(self):
                return {"kind": "broken"}

            def action(self, f):
                return (gr(0, 1),)

        with pytest.raises(NonRealSeries):
            check_positivity(Broken(), moyal_r2, [counterexample_test()])


class TestGlue:
    def test_single_unit_weight_identity(self, moyal_r2, delta0):
        omega = UndeformedExtension(delta0, K)
        glued = glue_functionals(
            [(LambdaPoly.constant(N_DIM, K, 1), omega)], moyal_r2)
        f = lp(QPolynomial.monomial(N_DIM, (1, 1), gr(2, 1)))
        assert glued.action(f) == omega.action(f)[: glued.sound_order + 1]

    def test_convex_combination(self, moyal_r2):
        d1 = UndeformedExtension(
            make_point_functional(N_DIM, 1, [((1, 0), (1,))]), K)
        d2 = UndeformedExtension(
            make_point_functional(N_DIM, 1, [((0, 1), (1,))]), K)
        chi1 = LambdaPoly.constant(N_DIM, K, Fraction(3, 5))
        chi2 = LambdaPoly.constant(N_DIM, K, Fraction(4, 5))
        glued = glue_functionals([(chi1, d1), (chi2, d2)], moyal_r2)
        f = lp(QPolynomial.coordinate(N_DIM, 0))
        out = glued.action(f)
        # (9/25) f(1,0) + (16/25) f(0,1)
        assert str(out[0]) == "9/25"

    def test_partition_identity_enforced(self, moyal_r2, delta0):
        omega = UndeformedExtension(delta0, K)
        with pytest.raises(PartitionError):
            glue_functionals(
                [(LambdaPoly.constant(N_DIM, K, Fraction(1, 2)), omega)], moyal_r2)

    def test_glued_positivity_verdict(self, moyal_r2, fixture_tau_r2, delta0):
        omega = deform_functional(delta0, fixture_tau_r2, K=K)
        chi1 = LambdaPoly.constant(N_DIM, K, Fraction(3, 5))
        chi2 = LambdaPoly.constant(N_DIM, K, Fraction(4, 5))
        glued = glue_functionals([(chi1, omega), (chi2, omega)], moyal_r2)
        verdict = check_positivity(
            glued, moyal_r2, [counterexample_test()])
        t = verdict.tests[0]
        assert t.classification == SeriesSign.POSITIVE
        assert t.coefficients == ["0", "1/4"]
