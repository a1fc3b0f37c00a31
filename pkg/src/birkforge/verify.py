"""Exact verification passes over the normalization pipeline.

Each verifier computes a residual series and reports pass/fail on whether
the residual vanishes through the degree the underlying identity actually
claims. All checks are exact: a residual is zero or the check fails, there
is no tolerance anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from gmpy2 import mpq

from .errors import HypothesisViolated, SeriesFormatError
from .normalizer import (
    ALL_AT_ONCE,
    DEGREE_BY_DEGREE,
    FrequencyVector,
    diagonal_coefficient,
    normalize,
    validate_real_symmetric,
)
from .rationals import GaussianRational
from .series import ExponentPair, TruncatedSeries, variable, zero_series
from .transform import (
    GeneratingFunction,
    LinearSubstitution,
    apply_linear,
    lift_polynomial,
    pushforward,
)

TAG_QUADRATIC_CORRECTION = "QUADRATIC_CORRECTION"
TAG_SINGULAR_COEFFICIENT = "SINGULAR_COEFFICIENT"
TAG_UNIQUENESS = "UNIQUENESS"
TAG_REALITY_RESTRICTION = "REALITY_RESTRICTION"

IDENTITY_TAGS = (
    TAG_QUADRATIC_CORRECTION,
    TAG_SINGULAR_COEFFICIENT,
    TAG_UNIQUENESS,
    TAG_REALITY_RESTRICTION,
)


@dataclass(frozen=True)
class IdentityReport:
    identity: str
    max_residual_degree: int
    residual: TruncatedSeries
    passed: bool

    def __post_init__(self) -> None:
        if self.identity not in IDENTITY_TAGS:
            raise ValueError(f"unknown identity tag {self.identity!r}")
        lowest = self.residual.min_degree()
        clean = lowest is None or lowest > self.max_residual_degree
        if self.passed != clean:
            raise ValueError(
                f"passed flag inconsistent with residual support for {self.identity}"
            )

    def first_failing_exponent(self) -> ExponentPair | None:
        for pair, _ in self.residual.terms():
            if pair.degree <= self.max_residual_degree:
                return pair
        return None

    def to_obj(self) -> dict:
        return {
            "identity": self.identity,
            "max_residual_degree": self.max_residual_degree,
            "passed": self.passed,
            "residual": self.residual.to_obj(),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "IdentityReport":
        if not isinstance(obj, dict):
            raise SeriesFormatError("identity report must be an object")
        return cls(
            identity=str(obj["identity"]),
            max_residual_degree=int(obj["max_residual_degree"]),
            residual=TruncatedSeries.from_obj(obj["residual"]),
            passed=bool(obj["passed"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True, indent=2) + "\n"


def _report(identity: str, max_degree: int, residual: TruncatedSeries) -> IdentityReport:
    lowest = residual.min_degree()
    return IdentityReport(
        identity=identity,
        max_residual_degree=max_degree,
        residual=residual,
        passed=lowest is None or lowest > max_degree,
    )


def _require_offdiag_floor(h: TruncatedSeries, d: int, what: str) -> None:
    """Every off-diagonal term of h must have degree >= d."""
    for pair, _ in h.terms():
        if not pair.is_diagonal and pair.degree < d:
            raise HypothesisViolated(
                f"{what} has an off-diagonal term at {pair} below degree {d}",
                exponent=pair,
            )


def verify_quadratic_correction(
    h: TruncatedSeries, s: GeneratingFunction, freq: FrequencyVector
) -> IdentityReport:
    """Check the diagonal correction formula through degree 2d - 2.

    With h off-diagonal-free below degree d = min degree of S, and the
    pushforward off-diagonal-free below 2d - 1, the change of the diagonal
    part is the projected quadratic expression in T = [S]_d:

        hhat - Nh = N{ sum_jk lambda_j ( T_xj T_yj / 2
                                         + y_j T_yjyk T_xk
                                         - x_j T_xjyk T_xk ) }

    through degree 2d - 2; terms at 2d - 1 and above are outside the claim.
    """
    d = s.min_degree
    target = 2 * d - 2
    if h.order < target:
        raise ValueError(
            f"input truncated at {h.order}, below the claimed degree {target}"
        )
    _require_offdiag_floor(h, d, "input")
    work = h.truncated(target)
    hhat = pushforward(work, s, target)
    _require_offdiag_floor(hhat, target + 1, "pushforward")

    t = lift_polynomial(s.series, target).degree_slice(d)
    xs = [variable(target, "x1"), variable(target, "x2")]
    ys = [variable(target, "y1"), variable(target, "y2")]
    tx = [lift_polynomial(t.partial_derivative(f"x{j+1}"), target) for j in range(2)]
    ty = [lift_polynomial(t.partial_derivative(f"y{j+1}"), target) for j in range(2)]
    lambdas = (freq.lambda1, freq.lambda2)
    total = zero_series(target)
    half = GaussianRational(mpq(1, 2), 0)
    for j in range(2):
        lam = GaussianRational(lambdas[j], 0)
        for k in range(2):
            tyjyk = lift_polynomial(ty[j].partial_derivative(f"y{k+1}"), target)
            txjyk = lift_polynomial(tx[j].partial_derivative(f"y{k+1}"), target)
            block = tx[j].mul(ty[j]).scaled(half)
            block = block.add(ys[j].mul(tyjyk).mul(tx[k]))
            block = block.sub(xs[j].mul(txjyk).mul(tx[k]))
            total = total.add(block.scaled(lam))
    rhs = total.diagonal_projection()
    lhs = hhat.sub(work.diagonal_projection())
    return _report(TAG_QUADRATIC_CORRECTION, target, lhs.sub(rhs))


def verify_singular_coefficient(
    h_base: TruncatedSeries, freq: FrequencyVector, N: int, m: int
) -> IdentityReport:
    """Probe the bilinear coefficient at the designated pair a=(N,0), b=(0,m).

    The diagonal coefficient hhat_{alpha alpha} at alpha = (N, m-1) is an
    affine-bilinear function of (h_ab, h_ba). Four probes (0,0), (1,0),
    (0,1), (1,1) isolate the product coefficient, which must equal

        m^2 / (lambda.(a-b))

    exactly. The remaining affine background (the lower-order feedthrough)
    cancels in the probe and is never reconstructed.
    """
    if N < 1 or m < 1:
        raise ValueError(f"stage exponents must be positive, got ({N}, {m})")
    if N + m < 3:
        # probing would perturb the quadratic part, which is pinned everywhere
        raise ValueError(f"designated pair sits at degree {N + m}, need at least 3")
    d = N + m
    target = 2 * d - 2
    if h_base.order < target:
        raise ValueError(
            f"input truncated at {h_base.order}, below the probe order {target}"
        )
    _require_offdiag_floor(h_base.truncated(d - 1), d, "input")
    key_ab = (N, 0, 0, m)
    key_ba = (0, m, N, 0)
    alpha = (N, m - 1)
    c_ab = h_base.coefficient(key_ab)
    c_ba = h_base.coefficient(key_ba)

    def probe(p: int, q: int) -> GaussianRational:
        shift: dict = {}
        dp = GaussianRational(p, 0) - c_ab
        dq = GaussianRational(q, 0) - c_ba
        if not dp.is_zero():
            shift[key_ab] = dp
        if not dq.is_zero():
            shift[key_ba] = dq
        h = h_base.add(TruncatedSeries(h_base.order, shift)) if shift else h_base
        return diagonal_coefficient(h, freq, alpha)

    v00 = probe(0, 0)
    v10 = probe(1, 0)
    v01 = probe(0, 1)
    v11 = probe(1, 1)
    bilinear = v11 - v10 - v01 + v00
    divisor = freq.combination(N, -m)
    expected = GaussianRational(mpq(m * m) / divisor, 0)
    deviation = bilinear - expected
    if deviation.is_zero():
        residual = zero_series(target)
    else:
        diag_key = (alpha[0], alpha[1], alpha[0], alpha[1])
        residual = TruncatedSeries(target, {diag_key: deviation})
    return _report(TAG_SINGULAR_COEFFICIENT, target, residual)


def verify_uniqueness(
    h: TruncatedSeries, freq: FrequencyVector, order: int
) -> IdentityReport:
    """Both strategies plus the reversed within-degree order must agree exactly."""
    nf_a = normalize(h, freq, order, strategy=ALL_AT_ONCE)[0]
    nf_b = normalize(h, freq, order, strategy=DEGREE_BY_DEGREE)[0]
    nf_c = normalize(
        h, freq, order, strategy=DEGREE_BY_DEGREE, within_degree_order="reversed"
    )[0]
    diff_b = nf_a.as_series().sub(nf_b.as_series())
    diff_c = nf_a.as_series().sub(nf_c.as_series())
    residual = diff_b if not diff_b.is_zero() else diff_c
    return _report(TAG_UNIQUENESS, order, residual)


def verify_reality_restriction(
    h: TruncatedSeries, freq: FrequencyVector, order: int
) -> IdentityReport:
    """Complexify and check reality plus the two-products structure.

    L sends x_j -> xi_j + i eta_j, y_j -> xi_j - i eta_j with the output
    slots (x1, x2, y1, y2) read as (xi1, xi2, eta1, eta2). The checks:
    e = h o L is real; its quadratic part is lambda1(xi1^2 + eta1^2) +
    lambda2(xi2^2 + eta2^2); and the normal form of h pushed through L is a
    series in the two products xi_j^2 + eta_j^2 through `order`.
    """
    validate_real_symmetric(h)
    if h.order < order:
        raise ValueError(f"input truncated at {h.order}, below requested order {order}")
    work = h.truncated(order)
    ell = LinearSubstitution.complexification()
    e = apply_linear(work, ell)

    imag_terms = {
        key: GaussianRational(0, coeff.im)
        for key, coeff in e.raw_items()
        if coeff.im
    }
    res_imag = TruncatedSeries(order, imag_terms)

    expected_quad = TruncatedSeries(
        order,
        {
            (2, 0, 0, 0): GaussianRational(freq.lambda1, 0),
            (0, 0, 2, 0): GaussianRational(freq.lambda1, 0),
            (0, 2, 0, 0): GaussianRational(freq.lambda2, 0),
            (0, 0, 0, 2): GaussianRational(freq.lambda2, 0),
        },
    )
    res_quad = e.degree_slice(2).sub(expected_quad)

    nf = normalize(work, freq, order)[0]
    e_nf = apply_linear(nf.as_series(), ell)
    p1 = TruncatedSeries(order, {(2, 0, 0, 0): GaussianRational(1, 0),
                                 (0, 0, 2, 0): GaussianRational(1, 0)})
    p2 = TruncatedSeries(order, {(0, 2, 0, 0): GaussianRational(1, 0),
                                 (0, 0, 0, 2): GaussianRational(1, 0)})
    remainder = e_nf
    # each P1^i P2^j is homogeneous of degree 2(i+j) and owns the pure-xi
    # monomial xi1^{2i} xi2^{2j}, so the coefficients read off independently
    for i in range(order // 2 + 1):
        for j in range(order // 2 - i + 1):
            c = remainder.coefficient((2 * i, 2 * j, 0, 0))
            if c.is_zero():
                continue
            remainder = remainder.sub(p1.power(i).mul(p2.power(j)).scaled(c))
    res_rewrite = remainder

    # report the first failing piece; summing could let pieces cancel
    pieces = (res_imag, res_quad, res_rewrite)
    residual = next((p for p in pieces if not p.is_zero()), zero_series(order))
    return _report(TAG_REALITY_RESTRICTION, order, residual)
