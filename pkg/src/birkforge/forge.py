"""Construction of the sparse Hamiltonian with factorially growing normal form.

Starting from h = lambda1*x1y1 + x2y2, each certified stage (N, m) adds a
symmetric coefficient pair c in {0, 2, -2} on the monomials x1^N y2^m and
x2^m y1^N. The residuals u0, v0 that normalization would feed into the
bilinear structure at the stage's designated pair are probed with c = 0,
and c is then the first choice in the fixed order (0,0), (2,2), (-2,-2)
with |(u0 + c)(v0 + c)| >= 1. The gap condition between stages keeps earlier
choices untouched by later ones, so the probes are stable.

The certificate records, per stage, the normal-form diagonal coefficient at
alpha = (N, m-1) against the bound (N+m)!; the headline check is
|nf_coeff| > (N+m)!, compared exactly via squared moduli.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from gmpy2 import mpq, mpz

from .divisors import LiouvilleStage, require_verified
from .errors import (
    GrowthCheckFailed,
    NonRealResidual,
    NormalizationOrderInfeasible,
    SeriesFormatError,
)
from .normalizer import (
    FrequencyVector,
    NormalForm,
    NormalizationTrace,
    normalize,
    residual_at,
)
from .rationals import (
    GaussianRational,
    RationalLike,
    factorial_exact,
    format_rational,
    mpq_to_sci,
    to_mpq,
)
from .series import ExponentPair, TruncatedSeries

CHOICE_ORDER: tuple[tuple[int, int], ...] = ((0, 0), (2, 2), (-2, -2))

DEFAULT_MAX_ORDER = 64


def choose_coefficient(u0: GaussianRational, v0: GaussianRational) -> tuple[int, int]:
    """First (u, v) in the fixed order with |(u0+u)(v0+v)| >= 1.

    Total on real inputs: if both (2,2) and (-2,-2) failed, then
    |u0+2||v0+2| < 1 and |u0-2||v0-2| < 1 would force u0, v0 within 1/2 of
    one of +/-2 each, making the other product at least 1.
    """
    if u0.im or v0.im:
        raise NonRealResidual(f"residuals must be real, got u0={u0}, v0={v0}")
    for u, v in CHOICE_ORDER:
        if abs((u0.re + u) * (v0.re + v)) >= 1:
            return u, v
    raise AssertionError(f"no admissible pair for u0={u0.re}, v0={v0.re}")


@dataclass(frozen=True)
class CoefficientChoice:
    """One stage's choice c = u = v together with the probed residuals."""

    stage: int
    u: int
    v: int
    u0: GaussianRational
    v0: GaussianRational

    def __post_init__(self) -> None:
        if self.u != self.v or self.u not in (0, 2, -2):
            raise ValueError(f"choice must be u = v in {{0, 2, -2}}, got ({self.u}, {self.v})")
        if self.u0.im or self.v0.im:
            raise ValueError("probed residuals must be real")
        if abs((self.u0.re + self.u) * (self.v0.re + self.v)) < 1:
            raise ValueError(
                f"|(u0+u)(v0+v)| < 1 for stage {self.stage}: "
                f"u0={self.u0.re}, v0={self.v0.re}, u=v={self.u}"
            )

    def to_obj(self) -> dict:
        return {
            "stage": self.stage,
            "u": self.u,
            "v": self.v,
            "u0": self.u0.to_obj(),
            "v0": self.v0.to_obj(),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "CoefficientChoice":
        return cls(
            stage=int(obj["stage"]),
            u=int(obj["u"]),
            v=int(obj["v"]),
            u0=GaussianRational.from_obj(obj["u0"]),
            v0=GaussianRational.from_obj(obj["v0"]),
        )


def _exceeds(coeff: GaussianRational, bound: mpz) -> bool:
    """|coeff| > bound, exactly, via squared moduli."""
    return coeff.re**2 + coeff.im**2 > mpq(bound) ** 2


@dataclass(frozen=True)
class DivergenceStageRecord:
    """Certificate line for one stage: the coefficient against its factorial bound.

    chained_bound_ok reports |lambda1*N - 1| > 1, the side condition the
    asymptotic argument uses; it is informational and does not enter passed.
    """

    j: int
    N: int
    m: int
    alpha: tuple[int, int]
    choice: CoefficientChoice
    nf_coeff: GaussianRational
    bound: mpz
    passed: bool
    chained_bound_ok: bool

    def __post_init__(self) -> None:
        if self.alpha != (self.N, self.m - 1):
            raise ValueError(f"alpha must be (N, m-1), got {self.alpha}")
        if self.passed != _exceeds(self.nf_coeff, self.bound):
            raise ValueError(
                f"stage {self.j}: passed flag inconsistent with |{self.nf_coeff}| vs {self.bound}"
            )

    def to_obj(self) -> dict:
        return {
            "j": self.j,
            "N": self.N,
            "m": self.m,
            "alpha": list(self.alpha),
            "choice": self.choice.to_obj(),
            "nf_coeff": self.nf_coeff.to_obj(),
            "bound": str(int(self.bound)),
            "passed": self.passed,
            "chained_bound_ok": self.chained_bound_ok,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "DivergenceStageRecord":
        return cls(
            j=int(obj["j"]),
            N=int(obj["N"]),
            m=int(obj["m"]),
            alpha=tuple(int(e) for e in obj["alpha"]),
            choice=CoefficientChoice.from_obj(obj["choice"]),
            nf_coeff=GaussianRational.from_obj(obj["nf_coeff"]),
            bound=mpz(obj["bound"]),
            passed=bool(obj["passed"]),
            chained_bound_ok=bool(obj["chained_bound_ok"]),
        )


@dataclass(frozen=True)
class DivergenceCertificate:
    stages: tuple[DivergenceStageRecord, ...]

    @property
    def all_passed(self) -> bool:
        return all(record.passed for record in self.stages)

    def to_obj(self) -> dict:
        return {"stages": [record.to_obj() for record in self.stages]}

    @classmethod
    def from_obj(cls, obj: object) -> "DivergenceCertificate":
        if not isinstance(obj, dict) or not isinstance(obj.get("stages"), list):
            raise SeriesFormatError('certificate must be {"stages": [...]}')
        return cls(stages=tuple(DivergenceStageRecord.from_obj(e) for e in obj["stages"]))

    def dumps(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "DivergenceCertificate":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SeriesFormatError(f"invalid JSON: {exc}") from exc
        return cls.from_obj(obj)


class ForgeResult(NamedTuple):
    hamiltonian: TruncatedSeries
    certificate: DivergenceCertificate
    normal_form: NormalForm
    trace: NormalizationTrace


def forge(
    stages: Sequence[LiouvilleStage],
    max_order: int = DEFAULT_MAX_ORDER,
    fallback_lambda1: RationalLike = mpq(1, 2),
) -> ForgeResult:
    """Build the sparse Hamiltonian and certify its normal-form growth.

    The final normalization order 2(N_J + m_J) - 2 is required by the last
    stage's diagonal target; if it exceeds max_order the run refuses up
    front (the monomial count grows like order^4) instead of stalling.

    With no stages the result is the bare quadratic part at the fallback
    frequency and an empty certificate.
    """
    stages = list(stages)
    require_verified(stages)
    if stages:
        lambda1 = stages[-1].lambda1
        required_order = 2 * stages[-1].size - 2
        certified = 2 * stages[-1].size
    else:
        lambda1 = to_mpq(fallback_lambda1)
        if not 0 < lambda1 < 1:
            raise ValueError(f"lambda1 must lie in (0, 1), got {lambda1}")
        required_order = 2
        certified = 2
    if required_order > max_order:
        raise NormalizationOrderInfeasible(
            f"final stage needs normalization to order {required_order}, "
            f"above the configured ceiling {max_order}; "
            f"roughly {(required_order + 1) ** 4 // 24} monomials would be in play",
            required_order=required_order,
            max_order=max_order,
        )
    freq = FrequencyVector(lambda1, 1, certified)

    work = TruncatedSeries(
        required_order,
        {
            (1, 0, 1, 0): GaussianRational(lambda1, 0),
            (0, 1, 0, 1): GaussianRational(1, 0),
        },
    )
    choices: list[tuple[LiouvilleStage, CoefficientChoice]] = []
    for stage in stages:
        pair_ab = ExponentPair((stage.N, 0), (0, stage.m))
        pair_ba = ExponentPair((0, stage.m), (stage.N, 0))
        u0 = residual_at(work, freq, pair_ab)
        v0 = residual_at(work, freq, pair_ba)
        u, v = choose_coefficient(u0, v0)
        choices.append(
            (stage, CoefficientChoice(stage=stage.index, u=u, v=v, u0=u0, v0=v0))
        )
        if u:
            bump = {
                (stage.N, 0, 0, stage.m): GaussianRational(u, 0),
                (0, stage.m, stage.N, 0): GaussianRational(v, 0),
            }
            work = work.add(TruncatedSeries(required_order, bump))

    nf, _, trace = normalize(work, freq, required_order)

    records = []
    for stage, choice in choices:
        alpha = (stage.N, stage.m - 1)
        coeff = nf.coefficient(alpha)
        bound = factorial_exact(stage.size)
        records.append(
            DivergenceStageRecord(
                j=stage.index,
                N=stage.N,
                m=stage.m,
                alpha=alpha,
                choice=choice,
                nf_coeff=coeff,
                bound=bound,
                passed=_exceeds(coeff, bound),
                chained_bound_ok=abs(lambda1 * stage.N - 1) > 1,
            )
        )
    certificate = DivergenceCertificate(stages=tuple(records))
    stage_by_index = {stage.index: stage for stage in stages}
    for record in records:
        if not record.passed:
            delta = stage_by_index[record.j].delta.value
            exc = GrowthCheckFailed(
                f"stage {record.j}: |nf coefficient at alpha={record.alpha}| = "
                f"|{record.nf_coeff.re}| does not exceed ({record.N}+{record.m})! = {record.bound}; "
                f"probed residuals u0 = {record.choice.u0.re}, v0 = {record.choice.v0.re} "
                f"against the divisor floor {delta} - compare the trace entries at "
                f"degree {record.N + record.m} to see which residual magnitude broke the chain",
                stage_index=record.j,
            )
            exc.certificate = certificate
            raise exc
    return ForgeResult(work, certificate, nf, trace)


# -- growth report ------------------------------------------------------------


@dataclass(frozen=True)
class GrowthRow:
    """One even degree D: sup |nf diagonal| vs (D/2 + 1)! and the divisor floor.

    max_abs_sq is the exact squared modulus of the largest diagonal
    coefficient of that degree; divisor_min is the smallest |divisor| among
    trace entries of degree <= D (None without a trace).
    """

    degree: int
    max_abs_sq: mpq
    factorial_bound: mpz
    divisor_min: mpq | None

    @property
    def exceeds_bound(self) -> bool:
        return self.max_abs_sq > mpq(self.factorial_bound) ** 2

    @property
    def max_abs_approx(self) -> str:
        return _sqrt_sci(self.max_abs_sq)


def _sqrt_sci(abs_sq: mpq, digits: int = 6) -> str:
    """Decimal approximation of sqrt(abs_sq) without float range limits."""
    if not abs_sq:
        return "0.000000e+00"
    text = mpq_to_sci(abs_sq, digits=12)
    mant_text, exp_text = text.split("e")
    mant, exp = float(mant_text), int(exp_text)
    if exp % 2:
        mant *= 10.0
        exp -= 1
    root = mant**0.5
    half = exp // 2
    if root >= 10.0:
        root /= 10.0
        half += 1
    return f"{root:.{digits}f}e{half:+03d}"


@dataclass(frozen=True)
class GrowthReport:
    rows: tuple[GrowthRow, ...]

    def to_csv(self) -> str:
        lines = ["degree,max_abs_coeff,factorial_bound,divisor_min"]
        for row in self.rows:
            divisor = "" if row.divisor_min is None else format_rational(row.divisor_min)
            lines.append(
                f"{row.degree},{row.max_abs_approx},{int(row.factorial_bound)},{divisor}"
            )
        return "\n".join(lines) + "\n"

    def to_obj(self) -> dict:
        return {
            "rows": [
                {
                    "degree": row.degree,
                    "max_abs_coeff_approx": row.max_abs_approx,
                    "max_abs_coeff_sq": format_rational(row.max_abs_sq),
                    "factorial_bound": str(int(row.factorial_bound)),
                    "divisor_min": None
                    if row.divisor_min is None
                    else format_rational(row.divisor_min),
                }
                for row in self.rows
            ]
        }


def growth_report(
    cert: DivergenceCertificate,
    nf: NormalForm,
    trace: NormalizationTrace | None = None,
) -> GrowthReport:
    """Tabulate per-degree diagonal growth against the factorial envelope.

    One row per even degree 2..nf.order; degree D compares against
    (D/2 + 1)! because the stage at size s = N + m lands its diagonal
    coefficient at degree 2s - 2. The certificate itself is not re-checked
    here; rows are derived from nf and trace so the table stays meaningful
    even for a failed certificate.
    """
    del cert  # rows are recomputed from the normal form; kept in the signature
    by_degree: dict[int, mpq] = {}
    for key, coeff in nf.diagonal.items():
        degree = key[0] + key[1] + key[2] + key[3]
        abs_sq = coeff.re**2 + coeff.im**2
        if degree not in by_degree or abs_sq > by_degree[degree]:
            by_degree[degree] = abs_sq
    divisor_by_degree: dict[int, mpq] = {}
    if trace is not None:
        for entry in trace.entries:
            degree = entry.exponent.degree
            magnitude = abs(entry.divisor.re)  # divisors are real by construction
            if degree not in divisor_by_degree or magnitude < divisor_by_degree[degree]:
                divisor_by_degree[degree] = magnitude
    rows = []
    running_min: mpq | None = None
    next_divisor_degree = 0
    for degree in range(2, nf.order + 1, 2):
        while next_divisor_degree <= degree:
            if next_divisor_degree in divisor_by_degree:
                candidate = divisor_by_degree[next_divisor_degree]
                if running_min is None or candidate < running_min:
                    running_min = candidate
            next_divisor_degree += 1
        rows.append(
            GrowthRow(
                degree=degree,
                max_abs_sq=by_degree.get(degree, mpq(0)),
                factorial_bound=factorial_exact(degree // 2 + 1),
                divisor_min=running_min,
            )
        )
    return GrowthReport(rows=tuple(rows))
