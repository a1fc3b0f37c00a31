"""Exact sparse arithmetic on truncated formal power series.

Series live in the four variables (x1, x2, y1, y2), indexed 0..3. A term is
keyed by the flat exponent tuple (a1, a2, b1, b2) where alpha = (a1, a2) are
the x-powers and beta = (b1, b2) the y-powers. All arithmetic is closed under
truncation by total degree: no op ever materializes a term of degree > order,
and no stored coefficient is zero.

Term order everywhere (iteration, serialization) is graded-lex: by total
degree, then lexicographically on (a1, a2, b1, b2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

from gmpy2 import mpq

from .errors import SeriesFormatError
from .rationals import GR_ZERO, GaussianRational, QZERO, format_rational

Key = tuple[int, int, int, int]

VARIABLES = ("x1", "x2", "y1", "y2")
_VAR_INDEX = {name: i for i, name in enumerate(VARIABLES)}


@dataclass(frozen=True, order=False)
class ExponentPair:
    """Multi-index pair (alpha, beta): x-powers and y-powers of one monomial."""

    alpha: tuple[int, int]
    beta: tuple[int, int]

    def __post_init__(self) -> None:
        for part in (self.alpha, self.beta):
            if len(part) != 2 or any(not isinstance(e, int) or e < 0 for e in part):
                raise ValueError(f"exponents must be pairs of non-negative ints: {self}")

    @property
    def degree(self) -> int:
        return self.alpha[0] + self.alpha[1] + self.beta[0] + self.beta[1]

    @property
    def is_diagonal(self) -> bool:
        return self.alpha == self.beta

    def key(self) -> Key:
        return (self.alpha[0], self.alpha[1], self.beta[0], self.beta[1])

    @classmethod
    def from_key(cls, key: Key) -> "ExponentPair":
        return cls((key[0], key[1]), (key[2], key[3]))

    def sort_key(self) -> tuple[int, Key]:
        return (self.degree, self.key())

    def __lt__(self, other: "ExponentPair") -> bool:
        return self.sort_key() < other.sort_key()


KeyLike = Union[Key, ExponentPair]


def _as_key(exponent: KeyLike) -> Key:
    if isinstance(exponent, ExponentPair):
        return exponent.key()
    key = tuple(exponent)
    if len(key) != 4 or any(not isinstance(e, int) or e < 0 for e in key):
        raise ValueError(f"bad exponent key {exponent!r}")
    return key  # type: ignore[return-value]


def key_degree(key: Key) -> int:
    return key[0] + key[1] + key[2] + key[3]


def key_is_diagonal(key: Key) -> bool:
    return key[0] == key[2] and key[1] == key[3]


def grlex(key: Key) -> tuple[int, Key]:
    return (key_degree(key), key)


class TruncatedSeries:
    """Sparse formal power series truncated at a fixed total degree.

    Immutable by convention: every operation returns a new instance. The
    internal dict maps flat keys to nonzero GaussianRational coefficients.
    """

    __slots__ = ("order", "_terms")

    def __init__(
        self,
        order: int,
        terms: Mapping[KeyLike, GaussianRational] | Iterable[tuple[KeyLike, GaussianRational]] = (),
    ):
        if order < 0:
            raise ValueError(f"negative truncation order {order}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[Key, GaussianRational] = {}
        for exponent, coeff in items:
            key = _as_key(exponent)
            if key_degree(key) > order:
                raise ValueError(f"term {key} exceeds truncation order {order}")
            if not isinstance(coeff, GaussianRational):
                raise TypeError(f"coefficient for {key} is not GaussianRational")
            if coeff.is_zero():
                continue
            prior = clean.get(key)
            merged = coeff if prior is None else prior + coeff
            if merged.is_zero():
                clean.pop(key, None)
            else:
                clean[key] = merged
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("TruncatedSeries is immutable")

    @classmethod
    def _raw(cls, order: int, terms: dict[Key, GaussianRational]) -> "TruncatedSeries":
        """Trusted constructor for internal hot paths: no validation or copy."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "order", order)
        object.__setattr__(obj, "_terms", terms)
        return obj

    # -- inspection --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, exponent: KeyLike) -> GaussianRational:
        return self._terms.get(_as_key(exponent), GR_ZERO)

    def terms(self) -> Iterator[tuple[ExponentPair, GaussianRational]]:
        """Terms in graded-lex order."""
        for key in sorted(self._terms, key=grlex):
            yield ExponentPair.from_key(key), self._terms[key]

    def keys(self) -> Iterator[Key]:
        yield from sorted(self._terms, key=grlex)

    def raw_items(self) -> Iterator[tuple[Key, GaussianRational]]:
        yield from self._terms.items()

    def min_degree(self) -> int | None:
        if not self._terms:
            return None
        return min(key_degree(k) for k in self._terms)

    def max_degree(self) -> int:
        if not self._terms:
            return 0
        return max(key_degree(k) for k in self._terms)

    def is_real(self) -> bool:
        return all(not c.im for c in self._terms.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.order == other.order and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.order, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        inside = " + ".join(
            f"({coeff!r})*{key}" for key in sorted(self._terms, key=grlex)
            for coeff in (self._terms[key],)
        )
        return f"TruncatedSeries(order={self.order}: {inside or '0'})"

    # -- linear structure ---------------------------------------------------

    def add(self, other: "TruncatedSeries") -> "TruncatedSeries":
        order = min(self.order, other.order)
        out = {k: c for k, c in self._terms.items() if key_degree(k) <= order}
        for key, coeff in other._terms.items():
            if key_degree(key) > order:
                continue
            prior = out.get(key)
            merged = coeff if prior is None else prior + coeff
            if merged.is_zero():
                out.pop(key, None)
            else:
                out[key] = merged
        return TruncatedSeries._raw(order, out)

    def sub(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self.add(other.neg())

    def neg(self) -> "TruncatedSeries":
        return TruncatedSeries._raw(self.order, {k: -c for k, c in self._terms.items()})

    def scaled(self, factor: GaussianRational) -> "TruncatedSeries":
        if factor.is_zero():
            return TruncatedSeries._raw(self.order, {})
        fr, fi = factor.re, factor.im
        out: dict[Key, GaussianRational] = {}
        for key, coeff in self._terms.items():
            cr, ci = coeff.re, coeff.im
            out[key] = GaussianRational._unsafe(fr * cr - fi * ci, fr * ci + fi * cr)
        return TruncatedSeries._raw(self.order, out)

    def truncated(self, order: int) -> "TruncatedSeries":
        """The same series re-truncated at a lower (or equal) order."""
        if order >= self.order:
            if order == self.order:
                return self
            raise ValueError(f"cannot extend truncation order {self.order} to {order}")
        out = {k: c for k, c in self._terms.items() if key_degree(k) <= order}
        return TruncatedSeries._raw(order, out)

    # -- multiplicative structure --------------------------------------------

    def mul(self, other: "TruncatedSeries") -> "TruncatedSeries":
        order = min(self.order, other.order)
        return TruncatedSeries._raw(order, _mul_dicts(self._terms, other._terms, order))

    def power(self, exponent: int) -> "TruncatedSeries":
        if exponent < 0:
            raise ValueError("negative power of a series")
        result = monomial(self.order, (0, 0, 0, 0), GaussianRational(1))
        base = self
        n = exponent
        while n:
            if n & 1:
                result = result.mul(base)
            n >>= 1
            if n:
                base = base.mul(base)
        return result

    # -- calculus -------------------------------------------------------------

    def partial_derivative(self, var: str | int) -> "TruncatedSeries":
        index = _VAR_INDEX[var] if isinstance(var, str) else int(var)
        if not 0 <= index <= 3:
            raise ValueError(f"bad variable {var!r}")
        out: dict[Key, GaussianRational] = {}
        for key, coeff in self._terms.items():
            e = key[index]
            if not e:
                continue
            new_key = list(key)
            new_key[index] = e - 1
            nk = tuple(new_key)
            prior = out.get(nk)
            scaled = coeff.scale(e)
            out[nk] = scaled if prior is None else prior + scaled
        return TruncatedSeries._raw(max(self.order - 1, 0), out)

    def poisson_bracket(self, other: "TruncatedSeries") -> "TruncatedSeries":
        """{a, b} = sum_j (da/dx_j db/dy_j - da/dy_j db/dx_j), truncated.

        The result is exact through min(order) - 1: degree-Omega terms of the
        inputs cannot determine the bracket at degree Omega.
        """
        order = max(min(self.order, other.order) - 1, 0)
        acc = TruncatedSeries._raw(order, {})
        for j in range(2):
            ax = self.partial_derivative(j)
            by = other.partial_derivative(j + 2)
            ay = self.partial_derivative(j + 2)
            bx = other.partial_derivative(j)
            acc = acc.add(ax.mul(by).truncated(order) if ax.order > order else ax.mul(by))
            acc = acc.sub(ay.mul(bx).truncated(order) if ay.order > order else ay.mul(bx))
        return acc

    # -- projections -----------------------------------------------------------

    def diagonal_projection(self) -> "TruncatedSeries":
        out = {k: c for k, c in self._terms.items() if k[0] == k[2] and k[1] == k[3]}
        return TruncatedSeries._raw(self.order, out)

    def off_diagonal(self) -> "TruncatedSeries":
        out = {k: c for k, c in self._terms.items() if k[0] != k[2] or k[1] != k[3]}
        return TruncatedSeries._raw(self.order, out)

    def degree_slice(self, d: int) -> "TruncatedSeries":
        if not 0 <= d <= self.order:
            raise ValueError(f"slice degree {d} outside [0, {self.order}]")
        out = {k: c for k, c in self._terms.items() if key_degree(k) == d}
        return TruncatedSeries._raw(self.order, out)

    # -- operator sugar ----------------------------------------------------------

    __add__ = add
    __sub__ = sub
    __mul__ = mul
    __neg__ = neg

    # -- serialization -------------------------------------------------------------

    def to_obj(self) -> dict:
        terms = []
        for key in sorted(self._terms, key=grlex):
            coeff = self._terms[key]
            terms.append(
                {
                    "alpha": [key[0], key[1]],
                    "beta": [key[2], key[3]],
                    "re": format_rational(coeff.re),
                    "im": format_rational(coeff.im),
                }
            )
        return {"order": self.order, "terms": terms}

    @classmethod
    def from_obj(cls, obj: object) -> "TruncatedSeries":
        if not isinstance(obj, dict):
            raise SeriesFormatError(f"series object must be a dict, got {type(obj).__name__}")
        order = obj.get("order")
        if not isinstance(order, int) or isinstance(order, bool) or order < 0:
            raise SeriesFormatError(f"bad series order {order!r}")
        raw_terms = obj.get("terms", [])
        if not isinstance(raw_terms, list):
            raise SeriesFormatError("series 'terms' must be a list")
        pairs: list[tuple[Key, GaussianRational]] = []
        for entry in raw_terms:
            if not isinstance(entry, dict):
                raise SeriesFormatError(f"series term must be an object: {entry!r}")
            key = _parse_term_key(entry)
            coeff = GaussianRational.from_obj(
                {"re": entry.get("re", "0/1"), "im": entry.get("im", "0/1")}
                if ("re" in entry or "im" in entry)
                else entry.get("coeff")
            )
            if key_degree(key) > order:
                raise SeriesFormatError(
                    f"term alpha={key[:2]} beta={key[2:]} exceeds order {order}"
                )
            pairs.append((key, coeff))
        return cls(order, pairs)


def _parse_term_key(entry: dict) -> Key:
    alpha = entry.get("alpha")
    beta = entry.get("beta")
    for name, part in (("alpha", alpha), ("beta", beta)):
        if (
            not isinstance(part, list)
            or len(part) != 2
            or any(not isinstance(e, int) or isinstance(e, bool) or e < 0 for e in part)
        ):
            raise SeriesFormatError(f"bad {name} in term {entry!r}")
    return (alpha[0], alpha[1], beta[0], beta[1])


def _mul_dicts(
    a: Mapping[Key, GaussianRational],
    b: Mapping[Key, GaussianRational],
    order: int,
) -> dict[Key, GaussianRational]:
    """Exact truncated convolution with early degree cutoff.

    Both inputs are iterated in ascending degree so the inner loop can break
    as soon as a product would overflow the truncation order.
    """
    if not a or not b:
        return {}
    if len(a) > len(b):  # fewer outer iterations on the smaller operand
        a, b = b, a
    a_items = sorted(((key_degree(k), k, c) for k, c in a.items()))
    b_items = sorted(((key_degree(k), k, c) for k, c in b.items()))
    if a_items[0][0] + b_items[0][0] > order:
        return {}
    b_min = b_items[0][0]
    all_real = all(not c.im for _, _, c in a_items) and all(
        not c.im for _, _, c in b_items
    )
    re_acc: dict[Key, mpq] = {}
    im_acc: dict[Key, mpq] = {}
    for da, ka, ca in a_items:
        budget = order - da
        if b_min > budget:
            break
        ka0, ka1, ka2, ka3 = ka
        ar, ai = ca.re, ca.im
        if all_real:
            for db, kb, cb in b_items:
                if db > budget:
                    break
                key = (ka0 + kb[0], ka1 + kb[1], ka2 + kb[2], ka3 + kb[3])
                term = ar * cb.re
                prior = re_acc.get(key)
                re_acc[key] = term if prior is None else prior + term
        else:
            for db, kb, cb in b_items:
                if db > budget:
                    break
                key = (ka0 + kb[0], ka1 + kb[1], ka2 + kb[2], ka3 + kb[3])
                br, bi = cb.re, cb.im
                tr = ar * br - ai * bi
                ti = ar * bi + ai * br
                prior = re_acc.get(key)
                re_acc[key] = tr if prior is None else prior + tr
                prior = im_acc.get(key)
                im_acc[key] = ti if prior is None else prior + ti
    out: dict[Key, GaussianRational] = {}
    for key, re_part in re_acc.items():
        im_part = im_acc.get(key, QZERO)
        if re_part or im_part:
            out[key] = GaussianRational._unsafe(mpq(re_part), mpq(im_part))
    for key, im_part in im_acc.items():
        if key not in re_acc and im_part:
            out[key] = GaussianRational._unsafe(QZERO, mpq(im_part))
    return out


# -- factories ------------------------------------------------------------------


def zero_series(order: int) -> TruncatedSeries:
    return TruncatedSeries._raw(order, {})


def monomial(order: int, exponent: KeyLike, coeff: GaussianRational) -> TruncatedSeries:
    key = _as_key(exponent)
    if key_degree(key) > order:
        raise ValueError(f"monomial {key} exceeds order {order}")
    if coeff.is_zero():
        return zero_series(order)
    return TruncatedSeries._raw(order, {key: coeff})


def variable(order: int, var: str | int) -> TruncatedSeries:
    index = _VAR_INDEX[var] if isinstance(var, str) else int(var)
    key = [0, 0, 0, 0]
    key[index] = 1
    return monomial(order, tuple(key), GaussianRational(1))


def from_coefficients(
    order: int, entries: Sequence[tuple[KeyLike, GaussianRational]]
) -> TruncatedSeries:
    return TruncatedSeries(order, entries)


# -- file I/O ---------------------------------------------------------------------


def dumps_series(series: TruncatedSeries, extra: Mapping[str, object] | None = None) -> str:
    obj = series.to_obj()
    if extra:
        obj.update(extra)
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def loads_series(text: str) -> TruncatedSeries:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SeriesFormatError(f"invalid JSON: {exc}") from exc
    return TruncatedSeries.from_obj(obj)


def write_series(path: str, series: TruncatedSeries) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_series(series))


def read_series(path: str) -> TruncatedSeries:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_series(fh.read())
