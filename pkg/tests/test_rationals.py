from fractions import Fraction

import pytest
from hypothesis import given

from dqw.rationals import format_scalar, gr, parse_scalar

from strategies import gaussian_rationals


def test_exact_add_sub():
    a = gr(Fraction(1, 3), Fraction(-2, 7))
    b = gr(Fraction(5, 11), Fraction(1, 2))
    assert (a + b) - b == a


def test_mul_div():
    a = gr(3, 4)
    b = gr(-1, 2)
    assert (a * b) / b == a
    # (3+4i)(-1+2i) = -11+2i
    assert a * b == gr(-11, 2)


def test_conjugate_and_power():
    a = gr(Fraction(1, 2), Fraction(3, 5))
    assert a.conjugate().conjugate() == a
    assert (a * a.conjugate()).im == 0
    assert gr(0, 1) ** 2 == gr(-1)
    assert gr(0, 1) ** 3 == gr(0, -1)


def test_zero_division():
    with pytest.raises(ZeroDivisionError):
        gr(1) / gr(0)


@given(gaussian_rationals(), gaussian_rationals())
def test_distributes(a, b):
    c = gr(Fraction(2, 3), Fraction(-1, 5))
    assert c * (a + b) == c * a + c * b


@pytest.mark.parametrize("value,text", [
    (gr(Fraction(3, 4)), "3/4"),
    (gr(-2), "-2"),
    (gr(0), "0"),
    (gr(0, Fraction(1, 2)), "1/2 i"),
    (gr(0, -1), "-1 i"),
    (gr(Fraction(3, 4), Fraction(1, 2)), "3/4+1/2 i"),
    (gr(Fraction(3, 4), Fraction(-1, 2)), "3/4-1/2 i"),
])
def test_string_forms(value, text):
    assert format_scalar(value) == text
    assert parse_scalar(text) == value


@given(gaussian_rationals())
def test_string_roundtrip(x):
    assert parse_scalar(format_scalar(x)) == x


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_scalar("1 + 2j")
