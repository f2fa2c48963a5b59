import math
from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from wcomp import arith
from wcomp.arith import Polar, Surd

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=30)
squarefree_free = st.integers(min_value=0, max_value=400)


def test_sqrt_of_perfect_square_is_rational():
    assert arith.sqrt_exact(Fraction(25)) == 5
    assert arith.sqrt_exact(Fraction(9, 4)) == Fraction(3, 2)


def test_sqrt_keeps_radicals_exact():
    x = arith.sqrt_exact(8)
    assert isinstance(x, Surd)
    assert arith.fmt(x) == "2*sqrt(2)"
    assert arith.mul(x, x) == 8


@given(squarefree_free, squarefree_free)
def test_surd_comparison_matches_floats(a, b):
    x, y = arith.sqrt_exact(a), arith.sqrt_exact(b)
    assert arith.compare(x, y) == (a > b) - (a < b)


@given(fractions, fractions)
def test_rational_ops_are_exact(a, b):
    assert arith.add(a, b) == a + b
    assert arith.mul(a, b) == a * b
    if b:
        assert arith.div(a, b) == a / b
    assert arith.compare(a, b) == (a > b) - (a < b)


def test_floats_mark_inexact():
    assert not arith.is_exact(arith.add(Fraction(1), 0.5))
    assert arith.is_exact(Fraction(1, 3))


def test_polar_modulus_is_exact():
    p = Polar(Fraction(3, 4), 1.234)
    assert arith.absval(p) == Fraction(3, 4)
    assert arith.absval(arith.mul(Fraction(2), p)) == Fraction(3, 2)


def test_parse_and_format_round_trip():
    for text in ("1/2", "inf", "3*sqrt(2)", "0"):
        assert arith.fmt(arith.parse_number(text)) == text


def test_close_tolerates_rounding_only():
    assert arith.close(Fraction(1, 3), 1 / 3)
    assert not arith.close(Fraction(1, 3), 0.3334)


def test_infinity_compares_above_everything():
    assert arith.compare(arith.INF, Fraction(10**30)) > 0
    assert math.isinf(arith.to_float(arith.INF))
