from __future__ import annotations

import math

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from birkforge import (
    GR_I,
    GR_ONE,
    GR_ZERO,
    GaussianRational,
    SeriesFormatError,
    factorial_exact,
    format_rational,
    mpq_to_sci,
    parse_rational,
    to_mpq,
)

rationals = st.builds(mpq, st.integers(-40, 40), st.integers(1, 24))
gaussians = st.builds(GaussianRational, rationals, rationals)


class TestParseFormat:
    @pytest.mark.parametrize(
        "text,expected",
        [("3/4", mpq(3, 4)), ("-5", mpq(-5)), ("0", mpq(0)),
         ("7/1", mpq(7)), (" 10/4 ", mpq(5, 2)), ("-6/-4", mpq(3, 2))],
    )
    def test_parse(self, text, expected):
        assert parse_rational(text) == expected

    @pytest.mark.parametrize("bad", ["", "1.5", "1e3", "a/b", "1/0", "3/4/5", "nan"])
    def test_parse_rejects(self, bad):
        with pytest.raises(SeriesFormatError):
            parse_rational(bad)

    def test_format_always_has_denominator(self):
        assert format_rational(mpq(7)) == "7/1"
        assert format_rational(mpq(-3, 9)) == "-1/3"

    @given(rationals)
    def test_round_trip(self, q):
        assert parse_rational(format_rational(q)) == q

    def test_round_trip_survives_huge_values(self):
        # certificate chains carry rationals far past CPython's default
        # int-from-string digit guard
        q = mpq(10**20000 + 7, 2**40000 + 1)
        assert parse_rational(format_rational(q)) == q

    def test_to_mpq_rejects_float(self):
        with pytest.raises(SeriesFormatError):
            to_mpq(0.5)

    def test_to_mpq_accepts_int_str_mpq(self):
        assert to_mpq(3) == mpq(3)
        assert to_mpq("3/9") == mpq(1, 3)
        assert to_mpq(mpq(1, 2)) == mpq(1, 2)


class TestGaussianRational:
    def test_constructor_rejects_float(self):
        with pytest.raises(SeriesFormatError):
            GaussianRational(0.25)

    def test_immutable(self):
        with pytest.raises(AttributeError):
            GR_ONE.re = mpq(2)  # type: ignore[misc]

    def test_product_example(self):
        a = GaussianRational(1, 2)
        b = GaussianRational(3, -1)
        assert a * b == GaussianRational(5, 5)
        assert (a * b) / b == a

    def test_division_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            GR_ONE / GR_ZERO

    def test_i_squared(self):
        assert GR_I * GR_I == -GR_ONE

    def test_real_abs(self):
        assert GaussianRational(-3, 0).real_abs() == mpq(3)
        with pytest.raises(ValueError):
            GR_I.real_abs()

    def test_scale_and_conjugate(self):
        c = GaussianRational(mpq(1, 2), mpq(-2, 3))
        assert c.scale("3/1") == GaussianRational(mpq(3, 2), -2)
        assert c.conjugate().im == mpq(2, 3)

    @given(gaussians, gaussians, gaussians)
    def test_ring_axioms(self, a, b, c):
        assert (a + b) + c == a + (b + c)
        assert a + b == b + a
        assert (a * b) * c == a * (b * c)
        assert a * b == b * a
        assert a * (b + c) == a * b + a * c

    @given(gaussians)
    def test_field_inverse(self, a):
        if not a.is_zero():
            assert (GR_ONE / a) * a == GR_ONE

    @given(gaussians)
    def test_obj_round_trip(self, a):
        assert GaussianRational.from_obj(a.to_obj()) == a

    def test_from_obj_accepts_bare_string(self):
        assert GaussianRational.from_obj("-2/6") == GaussianRational(mpq(-1, 3), 0)

    @pytest.mark.parametrize("bad", [{"im": "1/2"}, {"re": 1}, [1, 2], 3.5])
    def test_from_obj_rejects(self, bad):
        with pytest.raises(SeriesFormatError):
            GaussianRational.from_obj(bad)


def test_factorial_matches_math():
    for n in (0, 1, 2, 5, 12, 30):
        assert factorial_exact(n) == math.factorial(n)
    with pytest.raises(ValueError):
        factorial_exact(-1)


class TestSciFormat:
    @pytest.mark.parametrize(
        "value,text",
        [
            (mpq(1, 3), "3.333333e-01"),
            (mpq(-22, 7), "-3.142857e+00"),
            (mpq(0), "0.000000e+00"),
            (mpq(999999999), "1.000000e+09"),
            (mpq(1, 10**40), "1.000000e-40"),
            (mpq(10**50 + 1, 3), "3.333333e+49"),
        ],
    )
    def test_frozen_examples(self, value, text):
        assert mpq_to_sci(value) == text

    def test_digits_parameter(self):
        assert mpq_to_sci(mpq(95, 10), digits=2) == "9.50e+00"
        assert mpq_to_sci(mpq(999, 1000), digits=2) == "9.99e-01"

    @given(rationals)
    def test_close_to_float(self, q):
        text = mpq_to_sci(q)
        approx = float(text)
        exact = float(q.numerator) / float(q.denominator)
        assert abs(approx - exact) <= max(1e-5 * abs(exact), 1e-12)
