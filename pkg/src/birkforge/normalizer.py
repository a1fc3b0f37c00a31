"""Degree-by-degree Birkhoff normalization with full divisor provenance.

At each total degree d >= 3 the off-diagonal coefficients are annihilated by
a generating-function term per exponent,

    S_{alpha beta} = (h_{alpha beta} + Q_{alpha beta}) / (lambda.(alpha-beta)),

where the residual in the numerator is read off the partially transformed
Hamiltonian. Two strategies realize the same normal form: ALL_AT_ONCE grows
a single generating function and re-pushes the original input, while
DEGREE_BY_DEGREE composes one homogeneous map per degree. The normal form
is identical either way; the transformations are not, so the recorded
residuals may differ at composite degrees (a joint map is not the
composition of its per-degree pieces beyond the first nontrivial degree).
Divisors are exponent-intrinsic and agree everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Sequence

from gmpy2 import mpq

from .errors import (
    OrderExceedsCertification,
    ResonanceAtOrder,
    SeriesFormatError,
    SymmetryViolated,
)
from .rationals import GR_ZERO, GaussianRational, RationalLike, format_rational, parse_rational, to_mpq
from .series import (
    ExponentPair,
    Key,
    TruncatedSeries,
    grlex,
    key_degree,
    key_is_diagonal,
    monomial,
)
from .transform import GeneratingFunction, pushforward

ALL_AT_ONCE = "ALL_AT_ONCE"
DEGREE_BY_DEGREE = "DEGREE_BY_DEGREE"
STRATEGIES = (ALL_AT_ONCE, DEGREE_BY_DEGREE)

QUADRATIC_KEYS: tuple[Key, Key] = ((1, 0, 1, 0), (0, 1, 0, 1))


class FrequencyVector:
    """Exact rational frequencies with a certified non-resonance order.

    Non-resonance is decided in O(1): with lambda = (p1/q1, p2/q2), every
    integer relation c1*lambda1 + c2*lambda2 = 0 is a multiple of
    (p2*q1, -p1*q2)/gcd, so the smallest resonant |c1|+|c2| is known exactly.
    """

    __slots__ = ("lambda1", "lambda2", "certified_order")

    def __init__(self, lambda1: RationalLike, lambda2: RationalLike, certified_order: int):
        l1, l2 = to_mpq(lambda1), to_mpq(lambda2)
        if certified_order < 2:
            raise ValueError("certified order must be at least 2")
        if not l1 or not l2:
            index = 1 if not l1 else 2
            raise ResonanceAtOrder(
                f"lambda{index} = 0 is resonant at order 1",
                combination=(1, 0) if index == 1 else (0, 1),
            )
        size, combo = _minimal_resonance(l1, l2)
        if size <= certified_order:
            raise ResonanceAtOrder(
                f"resonance {combo[0]}*lambda1 + {combo[1]}*lambda2 = 0 within order "
                f"{certified_order}",
                combination=combo,
            )
        object.__setattr__(self, "lambda1", l1)
        object.__setattr__(self, "lambda2", l2)
        object.__setattr__(self, "certified_order", certified_order)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("FrequencyVector is immutable")

    def __repr__(self) -> str:
        return (
            f"FrequencyVector({self.lambda1}, {self.lambda2},"
            f" certified_order={self.certified_order})"
        )

    def combination(self, c1: int, c2: int) -> mpq:
        return c1 * self.lambda1 + c2 * self.lambda2

    def divisor(self, key: Key) -> mpq:
        """lambda.(alpha - beta) for the monomial with exponent key."""
        return self.combination(key[0] - key[2], key[1] - key[3])

    def quadratic_part(self, order: int) -> TruncatedSeries:
        return monomial(order, QUADRATIC_KEYS[0], GaussianRational(self.lambda1)).add(
            monomial(order, QUADRATIC_KEYS[1], GaussianRational(self.lambda2))
        )


def _minimal_resonance(l1: mpq, l2: mpq) -> tuple[int, tuple[int, int]]:
    """Smallest |c1|+|c2| with c1*lambda1 + c2*lambda2 = 0, and that (c1, c2)."""
    p1, q1 = int(l1.numerator), int(l1.denominator)
    p2, q2 = int(l2.numerator), int(l2.denominator)
    u, v = p2 * q1, -p1 * q2
    g = gcd(u, v)
    c1, c2 = u // g, v // g
    return abs(c1) + abs(c2), (c1, c2)


@dataclass(frozen=True)
class TraceEntry:
    """One homological solve: s_coeff * divisor = residual, exactly."""

    exponent: ExponentPair
    divisor: GaussianRational
    s_coeff: GaussianRational
    residual: GaussianRational

    def __post_init__(self) -> None:
        if self.exponent.is_diagonal:
            raise ValueError(f"trace entry at diagonal exponent {self.exponent}")
        if self.s_coeff * self.divisor != self.residual:
            raise ValueError(
                f"trace identity violated at {self.exponent}:"
                f" {self.s_coeff!r} * {self.divisor!r} != {self.residual!r}"
            )

    def to_obj(self) -> dict:
        return {
            "alpha": list(self.exponent.alpha),
            "beta": list(self.exponent.beta),
            "divisor": format_rational(self.divisor.re),
            "s_coeff": self.s_coeff.to_obj(),
            "residual": self.residual.to_obj(),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TraceEntry":
        exponent = ExponentPair(tuple(obj["alpha"]), tuple(obj["beta"]))
        divisor = GaussianRational(parse_rational(obj["divisor"]))
        return cls(
            exponent=exponent,
            divisor=divisor,
            s_coeff=GaussianRational.from_obj(obj["s_coeff"]),
            residual=GaussianRational.from_obj(obj["residual"]),
        )


@dataclass
class NormalizationTrace:
    """Chronological record of every nonzero homological solve."""

    strategy: str
    entries: list[TraceEntry] = field(default_factory=list)

    def sorted_entries(self) -> list[TraceEntry]:
        return sorted(self.entries, key=lambda e: e.exponent.sort_key())

    def find(self, exponent: ExponentPair) -> TraceEntry | None:
        for entry in self.entries:
            if entry.exponent == exponent:
                return entry
        return None

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_obj(), sort_keys=True) + "\n" for e in self.entries)

    @classmethod
    def from_jsonl(cls, text: str, strategy: str = ALL_AT_ONCE) -> "NormalizationTrace":
        entries = []
        for line in text.splitlines():
            if line.strip():
                entries.append(TraceEntry.from_obj(json.loads(line)))
        return cls(strategy=strategy, entries=entries)


class NormalForm:
    """Diagonal-only series: the normal form's coefficients on (x1y1)^i (x2y2)^j."""

    __slots__ = ("diagonal", "order")

    def __init__(self, order: int, diagonal: dict[Key, GaussianRational]):
        for key, coeff in diagonal.items():
            if not key_is_diagonal(key):
                raise ValueError(f"off-diagonal key {key} in a normal form")
            if key_degree(key) > order:
                raise ValueError(f"key {key} beyond order {order}")
            if coeff.is_zero():
                raise ValueError(f"stored zero coefficient at {key}")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "diagonal", dict(diagonal))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("NormalForm is immutable")

    def coefficient(self, alpha: tuple[int, int]) -> GaussianRational:
        key = (alpha[0], alpha[1], alpha[0], alpha[1])
        return self.diagonal.get(key, GR_ZERO)

    def as_series(self) -> TruncatedSeries:
        return TruncatedSeries(self.order, dict(self.diagonal))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NormalForm):
            return NotImplemented
        return self.order == other.order and self.diagonal == other.diagonal

    def __repr__(self) -> str:
        inside = ", ".join(
            f"{k}: {self.diagonal[k]!r}" for k in sorted(self.diagonal, key=grlex)
        )
        return f"NormalForm(order={self.order}, {{{inside}}})"


def validate_real_symmetric(h: TruncatedSeries) -> None:
    """Require real coefficients with h_{alpha beta} = h_{beta alpha}."""
    for key, coeff in h.raw_items():
        if coeff.im:
            raise SymmetryViolated(f"non-real coefficient at {key}", exponent=key)
        mirror = (key[2], key[3], key[0], key[1])
        if h.coefficient(mirror) != coeff:
            raise SymmetryViolated(
                f"h at {key} is {coeff!r} but at {mirror} is {h.coefficient(mirror)!r}",
                exponent=key,
            )


def _validate_input(
    h: TruncatedSeries, freq: FrequencyVector, order: int, require_symmetric: bool
) -> TruncatedSeries:
    if order < 2:
        raise ValueError(f"normalization order {order} below the quadratic part")
    if order > freq.certified_order:
        raise OrderExceedsCertification(
            f"order {order} exceeds certified non-resonance order {freq.certified_order}"
        )
    if h.order < order:
        raise ValueError(f"input truncated at {h.order}, below requested order {order}")
    for key, coeff in h.raw_items():
        d = key_degree(key)
        if d > 2:
            continue
        if key == QUADRATIC_KEYS[0]:
            expected: mpq | None = freq.lambda1
        elif key == QUADRATIC_KEYS[1]:
            expected = freq.lambda2
        else:
            expected = None
        if expected is None or coeff != GaussianRational(expected):
            raise SeriesFormatError(
                f"quadratic part must be exactly lambda1*x1y1 + lambda2*x2y2;"
                f" offending term at {key}"
            )
    for key, expected in zip(QUADRATIC_KEYS, (freq.lambda1, freq.lambda2)):
        if h.coefficient(key) != GaussianRational(expected):
            raise SeriesFormatError(
                f"quadratic coefficient at {key} is {h.coefficient(key)!r},"
                f" expected {expected}"
            )
    if require_symmetric:
        validate_real_symmetric(h)
    return h.truncated(order) if h.order > order else h


def _solve_degree(
    slice_off: TruncatedSeries, freq: FrequencyVector
) -> tuple[dict[Key, GaussianRational], list[TraceEntry]]:
    """Homological solve for every nonzero off-diagonal residual of one degree."""
    s_terms: dict[Key, GaussianRational] = {}
    entries: list[TraceEntry] = []
    for key in sorted((k for k, _ in slice_off.raw_items()), key=grlex):
        residual = slice_off.coefficient(key)
        divisor_q = freq.divisor(key)
        if not divisor_q:
            raise ResonanceAtOrder(
                f"zero divisor at exponent {key}",
                combination=(key[0] - key[2], key[1] - key[3]),
            )
        divisor = GaussianRational(divisor_q)
        s_coeff = residual / divisor
        s_terms[key] = s_coeff
        entries.append(
            TraceEntry(
                exponent=ExponentPair.from_key(key),
                divisor=divisor,
                s_coeff=s_coeff,
                residual=residual,
            )
        )
    return s_terms, entries


def normalize(
    h: TruncatedSeries,
    freq: FrequencyVector,
    order: int,
    strategy: str = ALL_AT_ONCE,
    within_degree_order: str = "canonical",
    require_symmetric: bool = False,
) -> tuple[NormalForm, list[GeneratingFunction], NormalizationTrace]:
    """Annihilate every off-diagonal coefficient through `order`.

    Returns the normal form, the generating function(s) used, and the trace.
    ALL_AT_ONCE returns at most one generating function holding all degrees;
    DEGREE_BY_DEGREE returns one per degree that needed work. With
    within_degree_order="reversed" (DEGREE_BY_DEGREE only), each off-diagonal
    exponent gets its own single-term map, composed in reversed graded-lex
    order; the homological equations within a degree are independent, so the
    trace must match the canonical one exactly.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if within_degree_order not in ("canonical", "reversed"):
        raise ValueError(f"unknown within-degree order {within_degree_order!r}")
    if within_degree_order == "reversed" and strategy != DEGREE_BY_DEGREE:
        raise ValueError("reversed within-degree order requires DEGREE_BY_DEGREE")
    work = _validate_input(h, freq, order, require_symmetric)
    trace = NormalizationTrace(strategy=strategy)
    gfs: list[GeneratingFunction] = []

    if strategy == ALL_AT_ONCE:
        s_terms: dict[Key, GaussianRational] = {}
        current = work
        for d in range(3, order + 1):
            if s_terms:
                current = pushforward(
                    work, GeneratingFunction(TruncatedSeries(order, dict(s_terms))), d
                )
            new_terms, entries = _solve_degree(
                current.degree_slice(d).off_diagonal(), freq
            )
            s_terms.update(new_terms)
            trace.entries.extend(entries)
        if s_terms:
            s_full = GeneratingFunction(TruncatedSeries(order, dict(s_terms)))
            gfs.append(s_full)
            final = pushforward(work, s_full, order)
        else:
            final = current
    else:
        current = work
        for d in range(3, order + 1):
            off = current.degree_slice(d).off_diagonal()
            if off.is_zero():
                continue
            if within_degree_order == "canonical":
                new_terms, entries = _solve_degree(off, freq)
                trace.entries.extend(entries)
                s_d = GeneratingFunction(TruncatedSeries(order, dict(new_terms)))
                gfs.append(s_d)
                current = pushforward(current, s_d, order)
            else:
                keys = sorted((k for k, _ in off.raw_items()), key=grlex, reverse=True)
                for key in keys:
                    # re-read after each composition: same-degree residuals
                    # must be unaffected by earlier in-degree solves
                    residual = current.coefficient(key)
                    if residual.is_zero():
                        continue
                    single = TruncatedSeries(order, {key: residual})
                    new_terms, entries = _solve_degree(single, freq)
                    trace.entries.extend(entries)
                    s_one = GeneratingFunction(TruncatedSeries(order, dict(new_terms)))
                    gfs.append(s_one)
                    current = pushforward(current, s_one, order)
        final = current

    leftover = final.off_diagonal()
    if not leftover.is_zero():
        raise AssertionError(
            f"off-diagonal terms survived normalization: {sorted(k for k, _ in leftover.raw_items())}"
        )
    diagonal = {k: c for k, c in final.raw_items()}
    nf = NormalForm(order, diagonal)
    _validate_normal_form(nf, freq)
    return nf, gfs, trace


def _validate_normal_form(nf: NormalForm, freq: FrequencyVector) -> None:
    if nf.coefficient((1, 0)) != GaussianRational(freq.lambda1) or nf.coefficient(
        (0, 1)
    ) != GaussianRational(freq.lambda2):
        raise AssertionError("normalization changed the quadratic part")


def residual_at(
    h: TruncatedSeries, freq: FrequencyVector, target: ExponentPair
) -> GaussianRational:
    """h_{ab} + Q_{ab}(h) for an off-diagonal target (a, b).

    Equals divisor * S_{ab}; depends only on coefficients of h strictly below
    |a|+|b| plus h_{ab} itself, so probing with modified h_{ab} shifts the
    result by exactly the modification.
    """
    if target.is_diagonal:
        raise ValueError(f"residual_at needs an off-diagonal target, got {target}")
    degree = target.degree
    _, _, trace = normalize(h, freq, degree)
    entry = trace.find(target)
    return entry.residual if entry is not None else GR_ZERO


def diagonal_coefficient(
    h: TruncatedSeries, freq: FrequencyVector, alpha: tuple[int, int]
) -> GaussianRational:
    """The normal-form coefficient at x^alpha y^alpha, via normalize to 2|alpha|."""
    degree = 2 * (alpha[0] + alpha[1])
    nf, _, _ = normalize(h, freq, max(degree, 2))
    return nf.coefficient(alpha)
