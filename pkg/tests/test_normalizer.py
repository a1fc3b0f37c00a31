from __future__ import annotations

import random

import pytest
import sympy as sp
from gmpy2 import mpq

from birkforge import (
    ExponentPair,
    GR_ONE,
    GaussianRational,
    FrequencyVector,
    NormalForm,
    OrderExceedsCertification,
    ResonanceAtOrder,
    SeriesFormatError,
    SymmetryViolated,
    TruncatedSeries,
    monomial,
    normalize,
    residual_at,
    diagonal_coefficient,
    validate_real_symmetric,
)
from birkforge.normalizer import (
    ALL_AT_ONCE,
    DEGREE_BY_DEGREE,
    NormalizationTrace,
    TraceEntry,
)

from . import oracle
from .conftest import random_hamiltonian


def cubic_example(order: int = 4) -> TruncatedSeries:
    """(2/7) x1 y1 + x2 y2 + x1^2 y2."""
    return TruncatedSeries(
        order,
        {
            (1, 0, 1, 0): GaussianRational(mpq(2, 7)),
            (0, 1, 0, 1): GR_ONE,
            (2, 0, 0, 1): GR_ONE,
        },
    )


class TestFrequencyVector:
    def test_basic(self, freq27):
        assert freq27.divisor((2, 0, 0, 1)) == mpq(-3, 7)
        assert freq27.combination(7, -2) == 0

    def test_resonance_boundary(self):
        # 7*(2/7) - 2*1 = 0 has size 9: order 8 certifiable, 9 not
        FrequencyVector(mpq(2, 7), 1, 8)
        with pytest.raises(ResonanceAtOrder) as info:
            FrequencyVector(mpq(2, 7), 1, 9)
        assert tuple(map(abs, info.value.combination)) == (7, 2)

    def test_low_order_resonance(self):
        FrequencyVector(mpq(1, 2), 1, 2)
        with pytest.raises(ResonanceAtOrder):
            FrequencyVector(mpq(1, 2), 1, 3)

    def test_zero_frequency(self):
        with pytest.raises(ResonanceAtOrder):
            FrequencyVector(0, 1, 2)

    def test_quadratic_part(self, freq27):
        q = freq27.quadratic_part(4)
        assert q.coefficient((1, 0, 1, 0)) == GaussianRational(mpq(2, 7))
        assert q.coefficient((0, 1, 0, 1)) == GR_ONE
        assert len(q) == 2


class TestNormalizeWorkedExample:
    def test_single_cubic_solve(self, freq27):
        nf, gfs, trace = normalize(cubic_example(), freq27, 4)
        assert len(gfs) == 1
        s = gfs[0].series
        assert s.coefficient((2, 0, 0, 1)) == GaussianRational(mpq(-7, 3))
        assert len(trace.entries) == 1
        entry = trace.entries[0]
        assert entry.exponent == ExponentPair((2, 0), (0, 1))
        assert entry.divisor == GaussianRational(mpq(-3, 7))
        assert entry.residual == GR_ONE

    def test_normal_form_is_quadratic_through_four(self, freq27):
        nf, _, _ = normalize(cubic_example(), freq27, 4)
        assert nf.coefficient((1, 0)) == GaussianRational(mpq(2, 7))
        assert nf.coefficient((0, 1)) == GR_ONE
        assert len(nf.diagonal) == 2

    def test_symmetric_pair_produces_bilinear_diagonal(self, freq27):
        # u x1^2 y2 + v x2 y1^2 feeds m^2/D * u v into alpha = (2, 0)
        h = cubic_example().add(monomial(4, (0, 1, 2, 0), GR_ONE))
        nf, _, _ = normalize(h, freq27, 4)
        assert nf.coefficient((2, 0)) == GaussianRational(mpq(-7, 3))

    def test_quadratic_only_input_is_fixed(self, freq27):
        h = freq27.quadratic_part(5)
        nf, gfs, trace = normalize(h, freq27, 5)
        assert not gfs and not trace.entries
        assert nf.as_series() == h


class TestNormalizeValidation:
    def test_order_above_certification(self, freq27):
        with pytest.raises(OrderExceedsCertification):
            normalize(cubic_example(9), freq27, 9)

    def test_input_truncated_below_order(self, freq27):
        with pytest.raises(ValueError):
            normalize(cubic_example(4), freq27, 5)

    def test_order_below_quadratic(self, freq27):
        with pytest.raises(ValueError):
            normalize(cubic_example(), freq27, 1)

    def test_quadratic_part_must_match(self, freq27):
        h = TruncatedSeries(
            3,
            {
                (1, 0, 1, 0): GR_ONE,  # wrong lambda1
                (0, 1, 0, 1): GR_ONE,
            },
        )
        with pytest.raises(SeriesFormatError):
            normalize(h, freq27, 3)

    def test_stray_quadratic_term_rejected(self, freq27):
        h = cubic_example().add(monomial(4, (1, 0, 0, 1), GR_ONE))
        with pytest.raises(SeriesFormatError):
            normalize(h, freq27, 4)

    def test_resonant_divisor_caught_mid_run(self):
        freq = FrequencyVector(mpq(1, 2), 1, 2)
        # divisor at (0,1,2,0) is -2*(1/2) + 1 = 0; certified order 2 blocks
        # the request before the solve is attempted
        h = TruncatedSeries(
            3,
            {
                (1, 0, 1, 0): GaussianRational(mpq(1, 2)),
                (0, 1, 0, 1): GR_ONE,
                (0, 1, 2, 0): GR_ONE,
            },
        )
        with pytest.raises(OrderExceedsCertification):
            normalize(h, freq, 3)

    def test_unknown_strategy(self, freq27):
        with pytest.raises(ValueError):
            normalize(cubic_example(), freq27, 4, strategy="SOMETHING")

    def test_reversed_requires_degree_by_degree(self, freq27):
        with pytest.raises(ValueError):
            normalize(
                cubic_example(), freq27, 4,
                strategy=ALL_AT_ONCE, within_degree_order="reversed",
            )


class TestStrategyAgreement:
    @pytest.mark.parametrize("seed", [3, 11, 27])
    def test_all_strategies_agree(self, freq27, seed):
        """Normal form identical across strategies and within-degree orders.

        The traces need only agree where the transformations coincide:
        everywhere for the two within-degree orders (same-degree solves are
        independent), and through degree 4 across strategies (both apply the
        bare degree-3 map first; the joint map differs from the per-degree
        composition only at composite degrees).
        """
        h = random_hamiltonian(random.Random(seed), order=5, max_terms=6)
        run_a = normalize(h, freq27, 5, strategy=ALL_AT_ONCE)
        run_b = normalize(h, freq27, 5, strategy=DEGREE_BY_DEGREE)
        run_c = normalize(
            h, freq27, 5,
            strategy=DEGREE_BY_DEGREE, within_degree_order="reversed",
        )
        assert run_a[0] == run_b[0] == run_c[0]

        def rows(trace, max_degree=None):
            return [
                (e.exponent, e.divisor, e.s_coeff, e.residual)
                for e in trace.sorted_entries()
                if max_degree is None or e.exponent.degree <= max_degree
            ]

        assert rows(run_b[2]) == rows(run_c[2])
        assert rows(run_a[2], 4) == rows(run_b[2], 4)

    @pytest.mark.parametrize("seed", [5, 19])
    def test_matches_symbolic_reference(self, freq27, seed):
        h = random_hamiltonian(random.Random(seed), order=5, max_terms=5)
        nf, _, _ = normalize(h, freq27, 5)
        want_nf, _ = oracle.normalize(
            oracle.series_to_sympy(h), (sp.Rational(2, 7), sp.Integer(1)), 5
        )
        got = oracle.series_to_sympy(nf.as_series())
        assert sp.expand(got - want_nf) == 0


class TestTrace:
    def test_trace_identity_enforced(self, freq27):
        _, _, trace = normalize(cubic_example(), freq27, 4)
        for e in trace.entries:
            assert e.s_coeff * e.divisor == e.residual

    def test_tampered_entry_rejected(self):
        with pytest.raises(ValueError):
            TraceEntry(
                exponent=ExponentPair((2, 0), (0, 1)),
                divisor=GaussianRational(mpq(-3, 7)),
                s_coeff=GaussianRational(mpq(-7, 3)),
                residual=GaussianRational(2),
            )

    def test_diagonal_exponent_rejected(self):
        with pytest.raises(ValueError):
            TraceEntry(
                exponent=ExponentPair((1, 0), (1, 0)),
                divisor=GR_ONE,
                s_coeff=GR_ONE,
                residual=GR_ONE,
            )

    def test_jsonl_round_trip(self, freq27):
        h = random_hamiltonian(random.Random(2), order=5, max_terms=5)
        _, _, trace = normalize(h, freq27, 5)
        back = NormalizationTrace.from_jsonl(trace.to_jsonl())
        assert back.entries == trace.entries


class TestNormalForm:
    def test_rejects_off_diagonal_key(self):
        with pytest.raises(ValueError):
            NormalForm(4, {(2, 0, 0, 1): GR_ONE})

    def test_rejects_zero_coefficient(self):
        with pytest.raises(ValueError):
            NormalForm(4, {(1, 1, 1, 1): GaussianRational(0)})

    def test_as_series_round_trip(self, freq27):
        nf, _, _ = normalize(cubic_example(), freq27, 4)
        assert nf.as_series().diagonal_projection() == nf.as_series()


class TestProbes:
    def test_residual_probe_shifts_linearly(self, freq27):
        h = cubic_example(4)
        target = ExponentPair((2, 0), (0, 1))
        base = residual_at(h, freq27, target)
        bumped = h.add(monomial(4, (2, 0, 0, 1), GaussianRational(mpq(5, 3))))
        assert residual_at(bumped, freq27, target) == base + GaussianRational(mpq(5, 3))

    def test_residual_requires_off_diagonal(self, freq27):
        with pytest.raises(ValueError):
            residual_at(cubic_example(), freq27, ExponentPair((1, 0), (1, 0)))

    def test_diagonal_coefficient_shortcut(self, freq27):
        h = cubic_example().add(monomial(4, (0, 1, 2, 0), GR_ONE))
        assert diagonal_coefficient(h, freq27, (2, 0)) == GaussianRational(mpq(-7, 3))


class TestSymmetry:
    def test_validate_rejects_asymmetric(self):
        h = cubic_example()
        with pytest.raises(SymmetryViolated):
            validate_real_symmetric(h)

    def test_validate_accepts_symmetric(self):
        h = cubic_example().add(monomial(4, (0, 1, 2, 0), GR_ONE))
        validate_real_symmetric(h)

    def test_normalize_gate(self, freq27):
        with pytest.raises(SymmetryViolated):
            normalize(cubic_example(), freq27, 4, require_symmetric=True)
