"""Small-divisor floors and the staged Liouville-frequency construction.

The divisor floor delta for a designated exponent pair (a, b) is

    min( 1/2,  |lambda.(alpha - beta)| )

over all alpha != beta with |alpha|+|beta| <= |a|+|b|, excluding the pairs
(a, b) and (b, a) themselves. Floors are evaluated per difference class
c = alpha - beta: a class is realizable within the order bound iff
|c1|+|c2| <= bound, and the excluded pair removes its whole class exactly
when it is the class's unique realization within the bound (that is, when a
and b have disjoint support, e.g. a = (N,0), b = (0,m)).

Stages approximate lambda1 by m/N + eps with eps = +/- 1/2^k, subject to

    0 < |N*lambda1 - m| < delta^tau / (100 (N+m)!)

held strictly in exact rational arithmetic (rational tau = p/q is checked in
the cross-multiplied form (|N*lambda1 - m| * 100 * (N+m)!)^q < delta^p), all
earlier stages re-verified at the new lambda1, non-resonance certified
through 2(N+m), and the stage gap N' + m' > 2(N + m) between consecutive
stages. The constant 100 is part of the construction, not a parameter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import gcd
from typing import Sequence

from gmpy2 import mpq, mpz

from .errors import (
    OrderExceedsCertification,
    ResonanceAtOrder,
    SearchBudgetExhausted,
    SeriesFormatError,
    StageCertificateInvalid,
    TauTooSmall,
)
from .normalizer import FrequencyVector
from .rationals import (
    QONE,
    RationalLike,
    factorial_exact,
    format_rational,
    parse_rational,
    to_mpq,
)
from .series import ExponentPair

Index2 = tuple[int, int]

DELTA_CAP = mpq(1, 2)


@dataclass(frozen=True)
class DivisorFloor:
    """Exact minimum |lambda.(alpha-beta)| below an order bound, capped at 1/2."""

    value: mpq
    excluded: tuple[ExponentPair, ExponentPair]
    order_bound: int

    def __post_init__(self) -> None:
        if self.value <= 0:
            raise ValueError(f"divisor floor must be positive, got {self.value}")
        if self.value > DELTA_CAP:
            raise ValueError(f"divisor floor above the 1/2 cap: {self.value}")


def _validate_pair(a: Index2, b: Index2) -> None:
    for part in (a, b):
        if len(part) != 2 or any(not isinstance(e, int) or e < 0 for e in part):
            raise ValueError(f"bad multi-index {part!r}")
    if tuple(a) == tuple(b):
        raise ValueError("designated pair must be off-diagonal (a != b)")


def _excluded_classes(a: Index2, b: Index2) -> tuple[Index2, ...]:
    """Difference classes removed entirely by excluding the pairs (a,b),(b,a).

    The class a-b is removed iff (a, b) is its unique realization within the
    order bound |a|+|b|, which happens exactly when a and b have disjoint
    support: any common part e = min(a,b) > 0 leaves a smaller realization
    (a-e, b-e) inside the bound, so the class still counts.
    """
    if min(a[0], b[0]) == 0 and min(a[1], b[1]) == 0:
        c = (a[0] - b[0], a[1] - b[1])
        return (c, (-c[0], -c[1]))
    return ()


def _floor_value(
    l1: mpq, l2: mpq, a: Index2, b: Index2, bound: int
) -> tuple[mpq, None] | tuple[None, Index2]:
    """Class-wise floor scan; (value, None) or (None, resonant_class).

    For each c1 >= 0 the best c2 is near the real minimizer of
    |c1*l1 + c2*l2|; a fixed window around it plus the clamped range
    endpoints covers the minimum even when the excluded class displaces it.
    Classes come in +/- pairs, so c1 = 0 only scans c2 > 0.
    """
    excluded = set(_excluded_classes(a, b))
    best: mpq | None = None
    for c1 in range(0, bound + 1):
        c2_limit = bound - c1
        center = -c1 * l1 / l2
        base = int(center)
        candidates = set(range(base - 2, base + 3))
        candidates.update((-c2_limit, c2_limit))
        for c2 in candidates:
            if abs(c2) > c2_limit:
                continue
            if c1 == 0 and c2 <= 0:
                continue
            if (c1, c2) in excluded:
                continue
            value = abs(c1 * l1 + c2 * l2)
            if not value:
                return None, (c1, c2)
            if best is None or value < best:
                best = value
    value = DELTA_CAP if best is None else min(DELTA_CAP, best)
    return value, None


def divisor_floor(freq: FrequencyVector, a: Index2, b: Index2) -> DivisorFloor:
    """delta_{ab}(lambda), computed in O(order_bound) class probes."""
    _validate_pair(a, b)
    bound = a[0] + a[1] + b[0] + b[1]
    if bound > freq.certified_order:
        raise OrderExceedsCertification(
            f"order bound {bound} exceeds certified order {freq.certified_order}"
        )
    value, resonant = _floor_value(freq.lambda1, freq.lambda2, a, b, bound)
    if value is None:
        raise ResonanceAtOrder(f"resonance at class {resonant}", combination=resonant)
    return DivisorFloor(
        value=value,
        excluded=(ExponentPair(tuple(a), tuple(b)), ExponentPair(tuple(b), tuple(a))),
        order_bound=bound,
    )


def divisor_floor_bruteforce(freq: FrequencyVector, a: Index2, b: Index2) -> mpq:
    """Reference enumeration over all admissible (alpha, beta) pairs.

    Exponential in the bound; used by tests to pin the fast path.
    """
    _validate_pair(a, b)
    bound = a[0] + a[1] + b[0] + b[1]
    if bound > freq.certified_order:
        raise OrderExceedsCertification(
            f"order bound {bound} exceeds certified order {freq.certified_order}"
        )
    skip = {(tuple(a), tuple(b)), (tuple(b), tuple(a))}
    best = DELTA_CAP
    for a1 in range(bound + 1):
        for a2 in range(bound + 1 - a1):
            for b1 in range(bound + 1 - a1 - a2):
                for b2 in range(bound + 1 - a1 - a2 - b1):
                    alpha, beta = (a1, a2), (b1, b2)
                    if alpha == beta or (alpha, beta) in skip:
                        continue
                    value = abs((a1 - b1) * freq.lambda1 + (a2 - b2) * freq.lambda2)
                    if not value:
                        raise ResonanceAtOrder(
                            f"resonance at alpha={alpha} beta={beta}",
                            combination=(a1 - b1, a2 - b2),
                        )
                    best = min(best, value)
    return best


@dataclass(frozen=True)
class LiouvilleStage:
    """One certified stage: lambda1 = m/N + eps with the strict inequality ledger.

    delta and inequality_margin are the values at this stage's own lambda1;
    verify_stage_chain re-derives everything against the final stage's
    lambda1 and trusts nothing stored here.
    """

    index: int
    N: int
    m: int
    lambda1: mpq
    delta: DivisorFloor
    tau: mpq
    inequality_margin: mpq

    @property
    def size(self) -> int:
        return self.N + self.m

    def to_obj(self) -> dict:
        return {
            "j": self.index,
            "N": self.N,
            "m": self.m,
            "lambda1": format_rational(self.lambda1),
            "delta": format_rational(self.delta.value),
            "tau": format_rational(self.tau),
            "margin": format_rational(self.inequality_margin),
        }


def stage_inequality_margin(
    lambda1: mpq, N: int, m: int, delta_value: mpq, tau: mpq
) -> mpq:
    """delta^p - (|N*lambda1 - m| * 100 * (N+m)!)^q for tau = p/q.

    Positive iff the stage inequality holds strictly. The two sides are the
    cross-multiplied (q-th powered) forms, so rational tau stays exact.
    """
    p = int(tau.numerator)
    q = int(tau.denominator)
    lhs = abs(N * lambda1 - m) * 100 * factorial_exact(N + m)
    return delta_value**p - lhs**q


def _stage_margin_at(
    lambda1: mpq, N: int, m: int, tau: mpq
) -> tuple[DivisorFloor, mpq] | None:
    """The stage (N, m) inequality evaluated at lambda1, or None if violated.

    Deliberately independent of FrequencyVector: the floor's own exclusion
    handles the designated class, so this stays meaningful even at the
    rational ratio m/N (the eps -> 0 limit used to prune candidates).
    """
    if not 0 < lambda1 < 1:
        return None
    if N * lambda1 == m:
        return None  # eps must be nonzero
    bound = N + m
    value, _ = _floor_value(lambda1, QONE, (N, 0), (0, m), bound)
    if value is None:
        return None  # a non-excluded class is exactly resonant
    margin = stage_inequality_margin(lambda1, N, m, value, tau)
    if margin <= 0:
        return None
    floor = DivisorFloor(
        value=value,
        excluded=(ExponentPair((N, 0), (0, m)), ExponentPair((0, m), (N, 0))),
        order_bound=bound,
    )
    return floor, margin


def _epsilon_start_exponent(N: int, m: int, tau: mpq, delta0: mpq) -> int:
    """Bit-size estimate of the largest workable |eps| = 2^-k for a stage.

    Needs (N * eps * 100 * s!)^q < delta0^p; solved for k with integer bit
    lengths only (a safe underestimate; the scan walks k upward from it).
    """
    p = int(tau.numerator)
    q = int(tau.denominator)
    scale = int(N * 100 * factorial_exact(N + m))
    delta_bits = int(delta0.numerator).bit_length() - int(delta0.denominator).bit_length()
    # log2(eps) < (p/q) * log2(delta0) - log2(scale)
    k = -((p * (delta_bits - 1)) // q) + scale.bit_length() + 1
    return max(k, 1)


def _candidate_ms(lambda1: mpq, s: int) -> list[int]:
    """The few m with m/(s-m) close enough to lambda1 to be worth testing."""
    # m/N ~ lambda1 with N = s - m  =>  m ~ s * lambda1 / (1 + lambda1)
    target = s * lambda1 / (1 + lambda1)
    center = int(target)
    out = []
    for m in range(center - 1, center + 3):
        if 1 <= m < s - m:  # m < N keeps the ratio below 1
            out.append(m)
    return out


def _seed_convergents(seed: mpq) -> list[tuple[int, int]]:
    """(N, m) candidates from the continued-fraction convergents of the seed."""
    p, q = int(seed.numerator), int(seed.denominator)
    out: list[tuple[int, int]] = []
    a_list = []
    num, den = p, q
    while den:
        a_list.append(num // den)
        num, den = den, num % den
    h_prev, h_cur = 1, a_list[0]
    k_prev, k_cur = 0, 1
    for a in a_list[1:]:
        h_prev, h_cur = h_cur, a * h_cur + h_prev
        k_prev, k_cur = k_cur, a * k_cur + k_prev
        if 0 < h_cur < k_cur and k_cur >= 2 and gcd(h_cur, k_cur) == 1:
            out.append((k_cur, h_cur))  # (N, m) with m/N the convergent
    if not out and 0 < p < q and q >= 2:
        out.append((q, p))
    return out


def build_liouville_stages(
    seed_lambda1: RationalLike,
    tau: RationalLike,
    stage_count: int,
    search_budget: int = 100000,
    size_scan_limit: int = 20000,
) -> list[LiouvilleStage]:
    """Construct certified stages by deterministic search.

    The first stage's (N, m) comes from the continued-fraction convergents of
    the seed; later stages scan total sizes s = N + m upward from the gap
    bound, keeping only m values whose ratio m/N survives every earlier
    stage's inequality in the eps -> 0 limit (an O(1) prune; a candidate
    failing there fails for all small eps by continuity). Surviving
    candidates scan eps = +1/2^k then -1/2^k with k ascending from an
    analytic starting point; the first (N, m, eps) satisfying every
    constraint wins. search_budget caps the number of eps probes.
    """
    seed = to_mpq(seed_lambda1)
    tau_q = to_mpq(tau)
    if not 0 < seed < 1:
        raise ValueError(f"seed lambda1 must lie in (0, 1), got {seed}")
    if tau_q <= 1:
        raise ValueError(f"tau must exceed 1, got {tau_q}")
    if stage_count < 0:
        raise ValueError("stage count must be non-negative")
    if search_budget < 1:
        raise ValueError("search budget must be positive")

    stages: list[LiouvilleStage] = []
    state = {"budget": search_budget, "probed": False}
    current_lambda1 = seed

    def try_pair(j: int, N: int, m: int) -> LiouvilleStage | None:
        s = N + m
        ratio = mpq(m, N)
        for prev in stages:
            if _stage_margin_at(ratio, prev.N, prev.m, prev.tau) is None:
                return None
        delta0, _ = _floor_value(ratio, QONE, (N, 0), (0, m), s)
        if delta0 is None:
            return None  # non-coprime ratio: a smaller class is resonant
        k_start = max(_epsilon_start_exponent(N, m, tau_q, delta0) - 4, 1)
        for k in range(k_start, k_start + 64):
            for sign in (1, -1):
                if state["budget"] <= 0:
                    raise SearchBudgetExhausted(
                        f"stage {j}: budget exhausted at (N, m) = ({N}, {m})"
                    )
                state["budget"] -= 1
                state["probed"] = True
                lam = ratio + mpq(sign, mpz(2) ** k)
                if not 0 < lam < 1:
                    continue
                try:
                    FrequencyVector(lam, 1, 2 * s)
                except ResonanceAtOrder:
                    continue
                own = _stage_margin_at(lam, N, m, tau_q)
                if own is None:
                    continue
                if any(
                    _stage_margin_at(lam, prev.N, prev.m, prev.tau) is None
                    for prev in stages
                ):
                    continue
                delta, margin = own
                return LiouvilleStage(
                    index=j,
                    N=N,
                    m=m,
                    lambda1=lam,
                    delta=delta,
                    tau=tau_q,
                    inequality_margin=margin,
                )
        return None

    for j in range(1, stage_count + 1):
        state["probed"] = False
        found: LiouvilleStage | None = None
        if j == 1:
            for N, m in _seed_convergents(seed):
                found = try_pair(j, N, m)
                if found is not None:
                    break
        else:
            s_min = 2 * stages[-1].size + 1
            for s in range(s_min, s_min + size_scan_limit):
                for m in _candidate_ms(current_lambda1, s):
                    found = try_pair(j, s - m, m)
                    if found is not None:
                        break
                if found is not None:
                    break
        if found is None:
            if state["probed"]:
                raise SearchBudgetExhausted(f"no valid stage {j} within the scan limits")
            raise TauTooSmall(
                f"stage {j}: every candidate is analytically infeasible at tau = {tau_q}"
            )
        stages.append(found)
        current_lambda1 = found.lambda1
    return stages


def verify_stage_chain(stages: Sequence[LiouvilleStage]) -> bool:
    """Re-derive every stored quantity and every inequality from scratch.

    Two layers: the stored delta and margin of each stage must reproduce
    exactly at that stage's own lambda1 (otherwise the certificate numbers
    are fabricated), and every stage inequality must still hold at the final
    lambda1, which is the frequency the chain actually certifies.
    """
    if not stages:
        return True
    try:
        final = stages[-1].lambda1
        if not 0 < final < 1:
            return False
        prev_size = 0
        for stage in stages:
            if stage.N < 1 or stage.m < 1 or stage.tau <= 1:
                return False
            if prev_size and stage.size <= 2 * prev_size:
                return False
            prev_size = stage.size
            own = _stage_margin_at(stage.lambda1, stage.N, stage.m, stage.tau)
            if own is None:
                return False
            delta, margin = own
            if delta != stage.delta or margin != stage.inequality_margin:
                return False
        FrequencyVector(final, 1, 2 * stages[-1].size)  # raises on resonance
        for stage in stages:
            if _stage_margin_at(final, stage.N, stage.m, stage.tau) is None:
                return False
    except (ResonanceAtOrder, OrderExceedsCertification, ValueError):
        return False
    return True


# -- certificate I/O ---------------------------------------------------------


def stages_to_obj(stages: Sequence[LiouvilleStage]) -> dict:
    return {
        "stages": [stage.to_obj() for stage in stages],
        "verified": verify_stage_chain(stages),
    }


def dumps_stages(stages: Sequence[LiouvilleStage]) -> str:
    return json.dumps(stages_to_obj(stages), sort_keys=True, indent=2) + "\n"


def stages_from_obj(obj: object) -> tuple[list[LiouvilleStage], bool]:
    """Parse stages and recompute the verified banner (the stored one is ignored)."""
    if not isinstance(obj, dict) or not isinstance(obj.get("stages"), list):
        raise SeriesFormatError('stage certificate must be {"stages": [...]}')
    stages: list[LiouvilleStage] = []
    for entry in obj["stages"]:
        try:
            N, m = int(entry["N"]), int(entry["m"])
            lambda1 = parse_rational(entry["lambda1"])
            tau = parse_rational(entry["tau"])
            delta_value = parse_rational(entry["delta"])
            margin = parse_rational(entry["margin"])
            index = int(entry["j"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SeriesFormatError(f"bad stage entry {entry!r}") from exc
        if N < 1 or m < 1:
            raise SeriesFormatError(f"bad stage sizes N={N} m={m}")
        delta = DivisorFloor(
            value=delta_value,
            excluded=(ExponentPair((N, 0), (0, m)), ExponentPair((0, m), (N, 0))),
            order_bound=N + m,
        )
        stages.append(
            LiouvilleStage(
                index=index,
                N=N,
                m=m,
                lambda1=lambda1,
                delta=delta,
                tau=tau,
                inequality_margin=margin,
            )
        )
    return stages, verify_stage_chain(stages)


def loads_stages(text: str) -> tuple[list[LiouvilleStage], bool]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SeriesFormatError(f"invalid JSON: {exc}") from exc
    return stages_from_obj(obj)


def require_verified(stages: Sequence[LiouvilleStage]) -> None:
    if not verify_stage_chain(stages):
        raise StageCertificateInvalid("stage chain failed re-verification")
