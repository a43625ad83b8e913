import random
from fractions import Fraction

import pytest

from dqw.koszul import KoszulForm, d_p, euler_contraction, poincare_homotopy
from dqw.qpoly import QPolynomial

N = 3
ONE = QPolynomial.constant(N, 1)


def random_form(rng, degree, n=N, terms=3):
    data = {}
    for _ in range(terms):
        idx = tuple(rng.randint(0, 2) for _ in range(n))
        sel = tuple(sorted(rng.sample(range(n), degree)))
        exp = tuple(rng.randint(0, 1) for _ in range(n))
        c = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        poly = QPolynomial.monomial(n, exp, c)
        data[(idx, sel)] = data[(idx, sel)] + poly if (idx, sel) in data else poly
    return KoszulForm(n, degree, data)


def test_weighted_contraction_on_momentum_monomial():
    w = KoszulForm(N, 1, {((1, 0, 0), (1,)): ONE})
    h = poincare_homotopy(w)
    assert h == KoszulForm(N, 0, {((1, 1, 0), ()): ONE.scale(Fraction(1, 2))})
    assert d_p(h) + poincare_homotopy(d_p(w)) == w


def test_contraction_of_two_form():
    w = KoszulForm(N, 2, {((0, 0, 0), (0, 1)): ONE})
    h = poincare_homotopy(w)
    expect = KoszulForm(N, 1, {((1, 0, 0), (1,)): ONE.scale(Fraction(1, 2)),
                               ((0, 1, 0), (0,)): ONE.scale(Fraction(-1, 2))})
    assert h == expect


def test_weight_one_form():
    w = KoszulForm(N, 1, {((0, 0, 0), (0,)): ONE})
    assert poincare_homotopy(w) == KoszulForm(N, 0, {((1, 0, 0), ()): ONE})


def test_degree_zero_rejected():
    with pytest.raises(ValueError):
        poincare_homotopy(KoszulForm(N, 0, {((1, 0, 0), ()): ONE}))


def test_d_p_squared_zero():
    rng = random.Random(1)
    for degree in range(0, N):
        w = random_form(rng, degree)
        assert d_p(d_p(w)).is_zero()


def test_antisymmetry_is_structural():
    with pytest.raises(ValueError):
        KoszulForm(N, 2, {((0, 0, 0), (1, 0)): ONE})
    with pytest.raises(ValueError):
        KoszulForm(N, 2, {((0, 0, 0), (1, 1)): ONE})


def test_homotopy_identity_on_random_forms():
    rng = random.Random(7)
    for degree in range(1, N + 1):
        for _ in range(8):
            w = random_form(rng, degree)
            lhs = d_p(poincare_homotopy(w))
            dw = d_p(w)
            if dw.degree <= N and not dw.is_zero():
                lhs = lhs + poincare_homotopy(dw)
            assert lhs == w


def test_euler_contraction_squares_to_zero():
    rng = random.Random(9)
    w = random_form(rng, 2)
    assert euler_contraction(euler_contraction(w)).is_zero()
