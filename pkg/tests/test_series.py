from __future__ import annotations

import json

import pytest
import sympy as sp
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from birkforge import (
    ExponentPair,
    GR_ONE,
    GaussianRational,
    SeriesFormatError,
    TruncatedSeries,
    dumps_series,
    from_coefficients,
    loads_series,
    monomial,
    read_series,
    variable,
    write_series,
    zero_series,
)

from . import oracle

ORDER = 6

rationals = st.builds(mpq, st.integers(-12, 12), st.integers(1, 8))
gaussians = st.builds(GaussianRational, rationals, rationals)
keys = st.tuples(*(st.integers(0, 2),) * 4).filter(lambda k: sum(k) <= ORDER)


@st.composite
def series_st(draw, max_terms: int = 5) -> TruncatedSeries:
    pairs = draw(st.lists(st.tuples(keys, gaussians), max_size=max_terms))
    return TruncatedSeries(ORDER, pairs)


class TestConstruction:
    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            TruncatedSeries(-1)

    def test_term_above_order_rejected(self):
        with pytest.raises(ValueError):
            TruncatedSeries(2, {(3, 0, 0, 0): GR_ONE})

    def test_negative_exponent_rejected(self):
        with pytest.raises((ValueError, SeriesFormatError)):
            TruncatedSeries(4, {(-1, 0, 1, 0): GR_ONE})

    def test_wrong_key_length_rejected(self):
        with pytest.raises((ValueError, SeriesFormatError, TypeError)):
            TruncatedSeries(4, {(1, 0, 1): GR_ONE})

    def test_zero_coefficients_dropped(self):
        s = TruncatedSeries(4, {(1, 0, 1, 0): GaussianRational(0)})
        assert s.is_zero() and len(s) == 0

    def test_duplicate_keys_merge(self):
        s = TruncatedSeries(
            4, [((1, 0, 1, 0), GR_ONE), ((1, 0, 1, 0), GaussianRational(2))]
        )
        assert s.coefficient((1, 0, 1, 0)) == GaussianRational(3)

    def test_immutable(self):
        s = zero_series(3)
        with pytest.raises(AttributeError):
            s.order = 5  # type: ignore[misc]

    def test_coefficient_accepts_pair_and_key(self):
        s = monomial(4, (2, 0, 0, 1), GR_ONE)
        pair = ExponentPair((2, 0), (0, 1))
        assert s.coefficient(pair) == GR_ONE
        assert s.coefficient((2, 0, 0, 1)) == GR_ONE

    def test_variable(self):
        assert variable(3, "y2").coefficient((0, 0, 0, 1)) == GR_ONE
        assert variable(3, 0).coefficient((1, 0, 0, 0)) == GR_ONE


def test_terms_graded_lex_order():
    s = TruncatedSeries(
        4,
        {
            (0, 0, 0, 2): GR_ONE,
            (2, 0, 0, 0): GR_ONE,
            (0, 0, 1, 0): GR_ONE,
            (1, 1, 1, 1): GR_ONE,
        },
    )
    seen = [pair.key() for pair, _ in s.terms()]
    assert seen == [(0, 0, 1, 0), (0, 0, 0, 2), (2, 0, 0, 0), (1, 1, 1, 1)]


class TestAlgebra:
    @given(series_st(), series_st(), series_st())
    @settings(max_examples=40, deadline=None)
    def test_module_axioms(self, a, b, c):
        assert (a + b) + c == a + (b + c)
        assert a + b == b + a
        assert a - a == zero_series(ORDER)
        assert a * (b + c) == a * b + a * c

    @given(series_st(max_terms=4), series_st(max_terms=4))
    @settings(max_examples=20, deadline=None)
    def test_mul_matches_oracle(self, a, b):
        got = oracle.series_to_sympy(a.mul(b))
        want = oracle.truncate(
            oracle.series_to_sympy(a) * oracle.series_to_sympy(b), ORDER
        )
        assert sp.expand(got - want) == 0

    def test_mul_truncates_to_min_order(self):
        a = monomial(3, (2, 0, 0, 1), GR_ONE)
        b = monomial(5, (1, 0, 1, 0), GR_ONE)
        prod = a.mul(b)
        assert prod.order == 3
        assert prod.is_zero()

    def test_power_example(self):
        p = variable(4, "x1") + variable(4, "y2")
        sq = p.power(2)
        assert sq.coefficient((2, 0, 0, 0)) == GR_ONE
        assert sq.coefficient((1, 0, 0, 1)) == GaussianRational(2)
        assert p.power(0).coefficient((0, 0, 0, 0)) == GR_ONE
        with pytest.raises(ValueError):
            p.power(-1)

    @given(series_st(max_terms=4))
    @settings(max_examples=20, deadline=None)
    def test_partial_derivative_matches_oracle(self, a):
        for var, sym in zip(("x1", "x2", "y1", "y2"), oracle.VARS):
            got = oracle.series_to_sympy(a.partial_derivative(var))
            want = oracle.truncate(sp.diff(oracle.series_to_sympy(a), sym), ORDER - 1)
            assert sp.expand(got - want) == 0

    def test_scaled(self):
        s = monomial(3, (1, 0, 1, 0), GaussianRational(mpq(2, 3)))
        assert s.scaled(GaussianRational(3)).coefficient((1, 0, 1, 0)) == GaussianRational(2)


class TestPoisson:
    def test_canonical_pairs(self):
        x1, y1 = variable(4, "x1"), variable(4, "y1")
        x2, y2 = variable(4, "x2"), variable(4, "y2")
        one = monomial(3, (0, 0, 0, 0), GR_ONE)
        assert x1.poisson_bracket(y1) == one
        assert x2.poisson_bracket(y2) == one
        assert x1.poisson_bracket(y2).is_zero()
        assert x1.poisson_bracket(x2).is_zero()

    @given(series_st(max_terms=3), series_st(max_terms=3))
    @settings(max_examples=15, deadline=None)
    def test_antisymmetry(self, a, b):
        lhs = a.poisson_bracket(b)
        assert lhs == b.poisson_bracket(a).neg()

    @given(series_st(max_terms=2), series_st(max_terms=2), series_st(max_terms=2))
    @settings(max_examples=10, deadline=None)
    def test_jacobi(self, a, b, c):
        total = (
            a.poisson_bracket(b.poisson_bracket(c))
            + b.poisson_bracket(c.poisson_bracket(a))
            + c.poisson_bracket(a.poisson_bracket(b))
        )
        assert total.is_zero()

    def test_action_monomials_commute(self):
        p1 = monomial(6, (1, 0, 1, 0), GR_ONE)
        p2 = monomial(6, (1, 1, 1, 1), GaussianRational(mpq(1, 2)))
        assert p1.poisson_bracket(p2).is_zero()


class TestProjections:
    @given(series_st())
    @settings(max_examples=25, deadline=None)
    def test_partition(self, a):
        assert a.diagonal_projection() + a.off_diagonal() == a
        for pair, _ in a.diagonal_projection().terms():
            assert pair.is_diagonal
        for pair, _ in a.off_diagonal().terms():
            assert not pair.is_diagonal

    def test_degree_slice(self):
        s = TruncatedSeries(
            4, {(1, 0, 1, 0): GR_ONE, (2, 0, 0, 1): GaussianRational(5)}
        )
        sl = s.degree_slice(3)
        assert sl.order == 4
        assert sl.coefficient((2, 0, 0, 1)) == GaussianRational(5)
        assert len(sl) == 1
        with pytest.raises(ValueError):
            s.degree_slice(5)

    def test_truncated_lowers_only(self):
        s = TruncatedSeries(4, {(2, 0, 0, 1): GR_ONE, (1, 0, 1, 0): GR_ONE})
        t = s.truncated(2)
        assert t.order == 2 and len(t) == 1
        with pytest.raises(ValueError):
            s.truncated(5)


class TestSerialization:
    @given(series_st())
    @settings(max_examples=25, deadline=None)
    def test_obj_round_trip(self, a):
        assert TruncatedSeries.from_obj(a.to_obj()) == a

    @given(series_st())
    @settings(max_examples=15, deadline=None)
    def test_text_round_trip(self, a):
        assert loads_series(dumps_series(a)) == a

    def test_terms_sorted_in_json(self):
        s = TruncatedSeries(4, {(2, 0, 0, 1): GR_ONE, (0, 0, 1, 0): GR_ONE})
        alphas = [t["alpha"] for t in s.to_obj()["terms"]]
        assert alphas == [[0, 0], [2, 0]]

    def test_lenient_reader_bare_coeff(self):
        text = json.dumps(
            {
                "order": 3,
                "terms": [
                    {"alpha": [1, 0], "beta": [1, 0], "coeff": "2/7"},
                    {"alpha": [0, 1], "beta": [0, 1], "re": "1"},
                ],
            }
        )
        s = loads_series(text)
        assert s.coefficient((1, 0, 1, 0)) == GaussianRational(mpq(2, 7))
        assert s.coefficient((0, 1, 0, 1)) == GR_ONE

    @pytest.mark.parametrize(
        "obj",
        [
            [],
            {"order": "3", "terms": []},
            {"order": -1, "terms": []},
            {"order": 3, "terms": {}},
            {"order": 3, "terms": [{"alpha": [1, 0], "beta": [1]}]},
            {"order": 3, "terms": [{"alpha": [1, 0], "beta": [1, -1], "re": "1"}]},
            {"order": 2, "terms": [{"alpha": [2, 0], "beta": [0, 1], "re": "1"}]},
            {"order": 3, "terms": [{"alpha": [1, 0], "beta": [1, 0], "re": "0.5"}]},
        ],
    )
    def test_from_obj_rejects(self, obj):
        with pytest.raises(SeriesFormatError):
            TruncatedSeries.from_obj(obj)

    def test_loads_rejects_malformed_json(self):
        with pytest.raises(SeriesFormatError):
            loads_series("{not json")

    def test_file_round_trip(self, tmp_path):
        s = from_coefficients(
            4,
            [
                ((1, 0, 1, 0), GaussianRational(mpq(2, 7))),
                ((0, 1, 0, 1), GR_ONE),
            ],
        )
        path = tmp_path / "h.json"
        write_series(str(path), s)
        assert read_series(str(path)) == s
