"""Exact Gaussian-rational coefficients on top of gmpy2.mpq.

A value is "real" iff its imaginary part is exactly zero; real-only call
sites assert that instead of using a separate number type, so the whole
pipeline runs on one coefficient kernel.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

from gmpy2 import mpq, mpz

from .errors import SeriesFormatError

RationalLike = Union[int, str, Fraction, "mpq"]

QZERO = mpq(0)
QONE = mpq(1)


def to_mpq(value: RationalLike) -> mpq:
    """Coerce an exact rational-like value; floats are rejected, not rounded."""
    if isinstance(value, float):
        raise SeriesFormatError(f"refusing inexact float {value!r}; pass p/q")
    if isinstance(value, str):
        return parse_rational(value)
    try:
        return mpq(value)
    except (TypeError, ValueError) as exc:
        raise SeriesFormatError(f"not an exact rational: {value!r}") from exc


def parse_rational(text: str) -> mpq:
    """Parse "p/q" or "p" with decimal-integer parts; reject anything else."""
    s = text.strip()
    if not s or "." in s or "e" in s or "E" in s:
        raise SeriesFormatError(f"invalid rational literal {text!r} (use p/q)")
    num, sep, den = s.partition("/")
    try:
        # mpz, not int: certificate chains carry rationals with tens of
        # thousands of digits, past CPython's int-from-string guard
        n = mpz(num, 10)
        d = mpz(den, 10) if sep else mpz(1)
    except ValueError as exc:
        raise SeriesFormatError(f"invalid rational literal {text!r}") from exc
    if d == 0:
        raise SeriesFormatError(f"zero denominator in {text!r}")
    return mpq(n, d)


def format_rational(value: mpq) -> str:
    """Canonical "p/q" with explicit denominator, lowest terms, sign on p."""
    q = mpq(value)
    return f"{q.numerator}/{q.denominator}"


class GaussianRational:
    """Complex number with exact rational real and imaginary parts.

    Immutable by convention; arithmetic returns new instances. Hot loops in
    series.py work on the .re/.im slots directly rather than through the
    operator methods.
    """

    __slots__ = ("re", "im")

    def __init__(self, re: RationalLike = 0, im: RationalLike = 0):
        object.__setattr__(self, "re", to_mpq(re))
        object.__setattr__(self, "im", to_mpq(im))

    @classmethod
    def _unsafe(cls, re: mpq, im: mpq) -> "GaussianRational":
        """Trusted constructor for hot loops: arguments must already be mpq."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "re", re)
        object.__setattr__(obj, "im", im)
        return obj

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("GaussianRational is immutable")

    # -- predicates ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other: "GaussianRational") -> "GaussianRational":
        return GaussianRational(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "GaussianRational") -> "GaussianRational":
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other: "GaussianRational") -> "GaussianRational":
        ar, ai, br, bi = self.re, self.im, other.re, other.im
        return GaussianRational(ar * br - ai * bi, ar * bi + ai * br)

    def __truediv__(self, other: "GaussianRational") -> "GaussianRational":
        br, bi = other.re, other.im
        norm = br * br + bi * bi
        if not norm:
            raise ZeroDivisionError("division by zero GaussianRational")
        ar, ai = self.re, self.im
        return GaussianRational((ar * br + ai * bi) / norm, (ai * br - ar * bi) / norm)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def scale(self, factor: RationalLike) -> "GaussianRational":
        f = to_mpq(factor)
        return GaussianRational(self.re * f, self.im * f)

    def real_abs(self) -> mpq:
        """|value| for real values; asserts im = 0 rather than taking a norm."""
        if self.im:
            raise ValueError(f"real_abs on non-real value {self!r}")
        return abs(self.re)

    # -- comparisons / hashing -------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GaussianRational):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __repr__(self) -> str:
        if not self.im:
            return f"GR({self.re})"
        return f"GR({self.re}, {self.im}i)"

    # -- serialization ----------------------------------------------------

    def to_obj(self) -> dict:
        return {"re": format_rational(self.re), "im": format_rational(self.im)}

    @classmethod
    def from_obj(cls, obj: object) -> "GaussianRational":
        """Accepts {"re": "p/q", "im": "p/q"} (im optional) or a bare "p/q"."""
        if isinstance(obj, str):
            return cls(parse_rational(obj))
        if isinstance(obj, dict):
            if "re" not in obj:
                raise SeriesFormatError(f"coefficient object missing 're': {obj!r}")
            re = obj["re"]
            im = obj.get("im", "0/1")
            if not isinstance(re, str) or not isinstance(im, str):
                raise SeriesFormatError(f"coefficient parts must be strings: {obj!r}")
            return cls(parse_rational(re), parse_rational(im))
        raise SeriesFormatError(f"cannot parse coefficient {obj!r}")


GR_ZERO = GaussianRational(0, 0)
GR_ONE = GaussianRational(1, 0)
GR_I = GaussianRational(0, 1)


def factorial_exact(n: int) -> mpz:
    """n! as an exact big integer."""
    if n < 0:
        raise ValueError("factorial of negative integer")
    out = mpz(1)
    for k in range(2, n + 1):
        out *= k
    return out


def mpq_to_sci(value: mpq, digits: int = 6) -> str:
    """Deterministic scientific-notation approximation of a rational.

    Pure integer arithmetic, so values far outside float range still format.
    Used only in the report layer; the core never produces decimals.
    """
    q = mpq(value)
    if not q:
        return "0.000000e+00" if digits == 6 else f"{0:.{digits}f}e+00"
    sign = "-" if q < 0 else ""
    n, d = abs(q.numerator), q.denominator
    # exponent = floor(log10(n/d)), found by digit counts then adjusted
    exp = len(str(n)) - len(str(d))
    if n * 10 ** max(0, -exp) < d * 10 ** max(0, exp):
        exp -= 1
    # mantissa scaled to `digits` places, rounded half away from zero
    shift = digits - exp
    if shift >= 0:
        scaled = (2 * n * 10**shift + d) // (2 * d)
    else:
        scaled = (2 * n + d * 10**-shift) // (2 * d * 10**-shift)
    if scaled >= 10 ** (digits + 1):  # rounding bumped the mantissa up a decade
        scaled //= 10
        exp += 1
    text = str(scaled)
    mantissa = f"{text[0]}.{text[1:].ljust(digits, '0')}"
    return f"{sign}{mantissa}e{exp:+03d}"
