import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vce.qseries import (
    DomainError,
    NotAUnit,
    Q,
    SeriesError,
    TruncSeries,
    VariableMismatch,
    exp_series,
    first_mismatch,
    log1p_series,
    nested_constant,
    rational,
    rational_from_str,
    rational_to_str,
)


def S(coeffs, lowest=0, order=None, var="q"):
    return TruncSeries(var, lowest, coeffs, order)


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6).map(rational)


@st.composite
def series(draw, var="q", unit=False):
    lowest = draw(st.integers(-2, 2))
    n = draw(st.integers(1, 5))
    coeffs = draw(st.lists(rationals, min_size=n, max_size=n))
    if unit and coeffs[0] == 0:
        coeffs[0] = Q(1)
    return TruncSeries(var, lowest, coeffs)


def power_series_no_constant(order):
    return st.lists(rationals, min_size=order, max_size=order).map(
        lambda cs: TruncSeries("z", 0, [Q(0)] + cs, order))


# -- examples ------------------------------------------------------------------------


def test_add_examples():
    assert S([1, 1]) + S([2, 0, 1]) == S([3, 1])
    assert (S([1, 1], order=2) + S([2, 0, 1])).coeffs == (3, 1, 1)
    s = S([1, 2, 3])
    assert s + TruncSeries.zero("q", 2) == s
    cancel = S([1], -1, 0) + S([-1], -1, 0)
    assert cancel.lowest == -1 and cancel.is_zero()


def test_mul_examples():
    prod = S([1, -1], order=3) * S([1, 1, 1, 1])
    assert prod == S([1, 0, 0, 0])
    s = S([1, 2, 3])
    assert s * TruncSeries.one("q", 5) == s
    laurent = S([1, 1], -1, 3) * S([0, 1, -1], 0, 3)
    assert laurent.lowest == -1
    assert [laurent[e] for e in range(0, 3)] == [1, 0, -1]


def test_mul_order_is_pessimistic():
    a = S([1, 1], 0, 5)
    b = S([1], 2, 3)
    assert (a * b).order == 3 + 0
    assert (S([1], -2, 1) * S([1], 0, 4)).order == 1


def test_invert_examples():
    assert S([1, -1], order=3).invert() == S([1, 1, 1, 1])
    assert TruncSeries.one("q", 4).invert() == TruncSeries.one("q", 4)
    inv = S([1, 1], 1, 3).invert()
    assert inv.lowest == -1 and inv.coeffs == (1, -1, 1)
    assert (S([1, 1], 1, 3) * inv).normalized().coeffs[0] == 1


def test_invert_rejects_non_units():
    with pytest.raises(NotAUnit):
        TruncSeries.zero("q", 3).invert()


def test_derivative_examples():
    d = S([1], -1, 3, var="z").differentiate()
    assert d.lowest == -2 and d[-2] == -1 and d.order == 2
    assert S([5], 0, 3).differentiate().is_zero()
    assert S([0, 0, 0, Q(1, 6)], 0, 3, var="z").differentiate()[2] == Q(1, 2)


def test_exp_log_examples():
    z = TruncSeries.monomial("z", 1, 3)
    assert exp_series(z).coeffs == (1, 1, Q(1, 2), Q(1, 6))
    assert exp_series(TruncSeries.zero("z", 3)) == TruncSeries.one("z", 3)
    assert log1p_series(exp_series(z) - 1) == z
    with pytest.raises(DomainError):
        exp_series(S([1, 1], var="z"))


def test_variable_mismatch():
    with pytest.raises(VariableMismatch):
        S([1]) + S([1], var="z")


def test_coefficient_beyond_order_raises():
    with pytest.raises(SeriesError):
        S([1, 2])[5]


def test_truncate_cannot_raise_order():
    with pytest.raises(SeriesError):
        S([1, 2]).truncate(4)
    assert S([1, 2, 3]).truncate(1) == S([1, 2])


def test_rational_helpers():
    assert rational("3/6") == Q(1, 2)
    assert rational(Fraction(2, 4)) == Q(1, 2)
    assert rational_to_str(Q(-4, 6)) == "-2/3"
    assert rational_from_str("-2/3") == Q(-2, 3)


def test_json_round_trip_nested():
    inner = S([1, Q(1, 3)], 0, 1)
    outer = TruncSeries("z", -1, [inner, inner.scale(2)], 0)
    assert TruncSeries.from_json(outer.to_json()) == outer
    assert outer.to_json()["coeffs"][0]["coeffs"] == ["1/1", "1/3"]


def test_nested_multiplication_and_mismatch_address():
    q = S([1, 1], 0, 2)
    a = TruncSeries("z", -1, [q, q], 0)
    b = TruncSeries("z", 0, [S([2, 0, 0])], 1)
    prod = a * b
    assert prod.var == "z" and prod.lowest == -1 and prod.order == 0
    assert prod[-1] == S([2, 2, 0]) and prod[0] == S([2, 2, 0])
    changed = TruncSeries("z", -1, [q, S([1, 1, 5])], 0)
    assert first_mismatch(a, changed) == (("z", 0), ("q", 2))


def test_nested_constant_and_tensor():
    c = nested_constant(S([1, 2]), ["x", "y"], [2, 3])
    assert c.variables() == ["x", "y", "q"]
    assert c[1].is_zero() and c[0][0] == S([1, 2])
    t = S([1, 1], var="a").tensor(S([2], var="b"))
    assert t.variables() == ["a", "b"] and t[1] == S([2], var="b")


# -- properties ---------------------------------------------------------------------


@given(series(), series(), series())
def test_ring_axioms(a, b, c):
    assert first_mismatch(a + b, b + a) is None
    assert first_mismatch((a + b) + c, a + (b + c)) is None
    assert first_mismatch(a * b, b * a) is None
    assert first_mismatch((a * b) * c, a * (b * c)) is None
    assert first_mismatch(a * (b + c), a * b + a * c) is None


@given(series(unit=True))
def test_inverse_is_two_sided(a):
    prod = (a * a.invert()).normalized()
    one = TruncSeries.one("q", prod.order)
    assert first_mismatch(prod, one) is None


@given(power_series_no_constant(5))
def test_exp_log_round_trip(a):
    assert log1p_series(exp_series(a) - 1) == a
    assert exp_series(log1p_series(a)) == a + 1


@given(series(), series())
def test_coefficients_in_lowest_terms(a, b):
    for s in (a + b, a * b, a - b):
        for c in s.coeffs:
            assert math.gcd(int(c.numerator), int(c.denominator)) == 1
        assert s.normalized().normalized() == s.normalized()


@given(series())
def test_json_round_trip(a):
    assert TruncSeries.from_json(a.to_json()) == a
