"""Symplectic maps from mixed-variable generating functions.

A generating function S(x, yhat) with every term of total degree >= 3
defines a canonical map through

    xhat_j = x_j - dS/dyhat_j(x, yhat),    yhat_j = y_j + dS/dx_j(x, yhat).

Both coordinate systems share the four storage slots: in a mixed-variable
series the y-slots hold yhat. S is an exact polynomial (not a truncation of
an unknown tail), so solutions may be computed to any requested order.

solve_mixed_map inverts the defining relations for (x, y) as series in
(xhat, yhat); pushforward substitutes that solution into a Hamiltonian,
realizing hhat = h o phi^{-1} with hhat(xhat, yhat) = h(x, y).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import SeriesFormatError
from .rationals import GR_ONE, GaussianRational
from .series import (
    Key,
    TruncatedSeries,
    key_degree,
    monomial,
    variable,
    zero_series,
)


def lift_polynomial(series: TruncatedSeries, order: int) -> TruncatedSeries:
    """Reinterpret an exact polynomial at a higher truncation order.

    Only valid when the series is a complete polynomial (all higher terms
    known to be zero), which holds for generating functions and their
    derivatives; never lift a truncation of an unknown series.
    """
    if order < series.max_degree():
        raise ValueError("lift would drop terms")
    if order == series.order:
        return series
    return TruncatedSeries._raw(order, dict(series.raw_items()))


def substitute(
    f: TruncatedSeries, images: Sequence[TruncatedSeries], order: int
) -> TruncatedSeries:
    """f(images[0], ..., images[3]) truncated at `order`.

    Every image must have zero constant term, so that substitution into a
    truncated series is well defined degree by degree.
    """
    if len(images) != 4:
        raise ValueError("need exactly four substitution images")
    min_degs = []
    for img in images:
        if img.coefficient((0, 0, 0, 0)):
            raise ValueError("substitution image has a constant term")
        md = img.min_degree()
        min_degs.append(md if md is not None else order + 1)
    one = monomial(order, (0, 0, 0, 0), GR_ONE)
    powers: list[dict[int, TruncatedSeries]] = [{0: one} for _ in range(4)]

    def image_power(i: int, p: int) -> TruncatedSeries:
        cache = powers[i]
        top = max(cache)
        while top < p:
            cache[top + 1] = cache[top].mul(images[i])
            top += 1
        return cache[p]

    acc = zero_series(order)
    for key, coeff in sorted(f.raw_items(), key=lambda kv: key_degree(kv[0])):
        if sum(e * m for e, m in zip(key, min_degs)) > order:
            continue  # the whole image product starts beyond the truncation
        prod: TruncatedSeries | None = None
        for i in range(4):
            if not key[i]:
                continue
            factor = image_power(i, key[i])
            prod = factor if prod is None else prod.mul(factor)
        term = one.scaled(coeff) if prod is None else prod.scaled(coeff)
        acc = acc.add(term)
    return acc


class GeneratingFunction:
    """Mixed-variable generating function: exact polynomial, all terms O(3)."""

    __slots__ = ("series", "min_degree")

    def __init__(self, series: TruncatedSeries, min_degree: int | None = None):
        lowest = series.min_degree()
        inferred = lowest if lowest is not None else 3
        d = inferred if min_degree is None else min_degree
        if d <= 2:
            raise ValueError(
                f"generating function must be O(3); got min degree {d}"
                " (quadratic terms would change the linear part)"
            )
        if lowest is not None and lowest < d:
            raise ValueError(
                f"term of degree {lowest} below declared min degree {d}"
            )
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "min_degree", d)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("GeneratingFunction is immutable")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GeneratingFunction):
            return NotImplemented
        return self.series == other.series

    def __repr__(self) -> str:
        return f"GeneratingFunction(min_degree={self.min_degree}, {self.series!r})"

    def is_zero(self) -> bool:
        return self.series.is_zero()

    def to_obj(self) -> dict:
        obj = self.series.to_obj()
        obj["mixed"] = True
        return obj

    @classmethod
    def from_obj(cls, obj: object) -> "GeneratingFunction":
        if isinstance(obj, dict) and obj.get("mixed") not in (True, None):
            raise SeriesFormatError("generating function must carry \"mixed\": true")
        payload = dict(obj) if isinstance(obj, dict) else obj
        if isinstance(payload, dict):
            payload.pop("mixed", None)
        return cls(TruncatedSeries.from_obj(payload))


@dataclass(frozen=True)
class MixedMapSolution:
    """Coordinate series x_j(xhat, yhat), y_j(xhat, yhat) of the map inverse."""

    x_of: tuple[TruncatedSeries, TruncatedSeries]
    y_of: tuple[TruncatedSeries, TruncatedSeries]
    order: int


def solve_mixed_map(s: GeneratingFunction, order: int) -> MixedMapSolution:
    """Invert the generating relations for (x, y) given (xhat, yhat).

    Graded fixed-point iteration on x <- xhat + S_yhat(x, yhat) with yhat
    passive; each pass fixes one more degree, so order - d + 2 passes
    suffice. y then follows explicitly as y_j = yhat_j - S_{x_j}(x, yhat).
    """
    if order < 1:
        raise ValueError(f"order {order} too small for a coordinate solve")
    s_series = lift_polynomial(s.series, max(order + 1, s.series.order))
    ds_x = [lift_polynomial(s_series.partial_derivative(j), order) for j in range(2)]
    ds_y = [lift_polynomial(s_series.partial_derivative(j + 2), order) for j in range(2)]
    yhat_id = (variable(order, "y1"), variable(order, "y2"))
    xhat_id = (variable(order, "x1"), variable(order, "x2"))
    x_cur = list(xhat_id)
    for _ in range(max(order - s.min_degree + 2, 1)):
        images = [x_cur[0], x_cur[1], yhat_id[0], yhat_id[1]]
        x_next = [xhat_id[j].add(substitute(ds_y[j], images, order)) for j in range(2)]
        if x_next == x_cur:
            break
        x_cur = x_next
    images = [x_cur[0], x_cur[1], yhat_id[0], yhat_id[1]]
    y_sol = tuple(yhat_id[j].sub(substitute(ds_x[j], images, order)) for j in range(2))
    solution = MixedMapSolution(x_of=(x_cur[0], x_cur[1]), y_of=y_sol, order=order)
    _check_tangency(solution)
    return solution


def _check_tangency(sol: MixedMapSolution) -> None:
    ids = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
    for j in range(2):
        for series, id_key in ((sol.x_of[j], ids[j]), (sol.y_of[j], ids[j + 2])):
            for key, _ in series.raw_items():
                if key_degree(key) == 1 and key != id_key:
                    raise AssertionError(f"map not tangent to identity at {key}")
            if series.coefficient(id_key) != GR_ONE:
                raise AssertionError("map linear part is not the identity")


def solution_residual(s: GeneratingFunction, sol: MixedMapSolution) -> TruncatedSeries:
    """xhat_j - (x_j - S_yhat_j(x, yhat)) evaluated on the solution; zero iff exact.

    Returns the sum of the absolute residual series of both components.
    """
    order = sol.order
    s_series = lift_polynomial(s.series, max(order + 1, s.series.order))
    images = [sol.x_of[0], sol.x_of[1], variable(order, "y1"), variable(order, "y2")]
    acc = zero_series(order)
    for j in range(2):
        ds_y = lift_polynomial(s_series.partial_derivative(j + 2), order)
        xhat = variable(order, ("x1", "x2")[j])
        residual = xhat.sub(sol.x_of[j]).add(substitute(ds_y, images, order))
        acc = acc.add(residual)
    return acc


def pushforward(
    h: TruncatedSeries, s: GeneratingFunction, order: int
) -> TruncatedSeries:
    """hhat = h o phi^{-1} through `order`: substitute x(xhat,yhat), y(xhat,yhat)."""
    if h.order < order:
        raise ValueError(f"h is truncated at {h.order}, below requested order {order}")
    sol = solve_mixed_map(s, order)
    images = [sol.x_of[0], sol.x_of[1], sol.y_of[0], sol.y_of[1]]
    return substitute(h.truncated(order) if h.order > order else h, images, order)


def forward_map(
    s: GeneratingFunction, order: int
) -> tuple[tuple[TruncatedSeries, TruncatedSeries], tuple[TruncatedSeries, TruncatedSeries]]:
    """(xhat(x, y), yhat(x, y)) as series in the original variables.

    Solves yhat_j = y_j + S_{x_j}(x, yhat) by fixed point in yhat with x
    passive; then xhat_j = x_j - S_{yhat_j}(x, yhat).
    """
    s_series = lift_polynomial(s.series, max(order + 1, s.series.order))
    ds_x = [lift_polynomial(s_series.partial_derivative(j), order) for j in range(2)]
    ds_y = [lift_polynomial(s_series.partial_derivative(j + 2), order) for j in range(2)]
    x_id = (variable(order, "x1"), variable(order, "x2"))
    y_id = (variable(order, "y1"), variable(order, "y2"))
    yhat_cur = list(y_id)
    for _ in range(max(order - s.min_degree + 2, 1)):
        images = [x_id[0], x_id[1], yhat_cur[0], yhat_cur[1]]
        yhat_next = [y_id[j].add(substitute(ds_x[j], images, order)) for j in range(2)]
        if yhat_next == yhat_cur:
            break
        yhat_cur = yhat_next
    images = [x_id[0], x_id[1], yhat_cur[0], yhat_cur[1]]
    xhat = tuple(x_id[j].sub(substitute(ds_y[j], images, order)) for j in range(2))
    return xhat, (yhat_cur[0], yhat_cur[1])


def canonicity_check(s: GeneratingFunction, order: int) -> bool:
    """All canonical Poisson-bracket relations of the new coordinates, exactly.

    {xhat_i, xhat_j} = {yhat_i, yhat_j} = 0 and {xhat_i, yhat_j} = delta_ij,
    verified through degree order - 1 in the original variables (one degree
    is lost to the differentiation inside the bracket).
    """
    xhat, yhat = forward_map(s, order)
    check_order = max(order - 1, 0)
    one = monomial(check_order, (0, 0, 0, 0), GR_ONE)

    def bracket(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
        return a.poisson_bracket(b)

    if not bracket(xhat[0], xhat[1]).is_zero():
        return False
    if not bracket(yhat[0], yhat[1]).is_zero():
        return False
    for i in range(2):
        for j in range(2):
            expected = one if i == j else zero_series(check_order)
            if bracket(xhat[i], yhat[j]) != expected:
                return False
    return True


class LinearSubstitution:
    """Invertible exact-linear change of variables var_i <- sum_j M[i][j] var_j."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: Sequence[Sequence[GaussianRational]]):
        rows = tuple(tuple(row) for row in matrix)
        if len(rows) != 4 or any(len(row) != 4 for row in rows):
            raise ValueError("linear substitution needs a 4x4 matrix")
        for row in rows:
            for entry in row:
                if not isinstance(entry, GaussianRational):
                    raise TypeError("matrix entries must be GaussianRational")
        if _det4(rows).is_zero():
            raise ValueError("singular substitution matrix")
        object.__setattr__(self, "matrix", rows)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("LinearSubstitution is immutable")

    @classmethod
    def identity(cls) -> "LinearSubstitution":
        one, zero = GaussianRational(1), GaussianRational(0)
        return cls([[one if i == j else zero for j in range(4)] for i in range(4)])

    @classmethod
    def complexification(cls) -> "LinearSubstitution":
        """x_j -> xi_j + i eta_j, y_j -> xi_j - i eta_j.

        The slots (x1, x2, y1, y2) of the result hold (xi1, xi2, eta1, eta2),
        so x_j y_j pulls back to xi_j^2 + eta_j^2.
        """
        one = GaussianRational(1)
        zero = GaussianRational(0)
        i_pos = GaussianRational(0, 1)
        i_neg = GaussianRational(0, -1)
        return cls(
            [
                [one, zero, i_pos, zero],
                [zero, one, zero, i_pos],
                [one, zero, i_neg, zero],
                [zero, one, zero, i_neg],
            ]
        )


def _det4(rows: tuple[tuple[GaussianRational, ...], ...]) -> GaussianRational:
    def det(r: list[list[GaussianRational]]) -> GaussianRational:
        n = len(r)
        if n == 1:
            return r[0][0]
        total = GaussianRational(0)
        for col in range(n):
            if r[0][col].is_zero():
                continue
            minor = [[r[i][c] for c in range(n) if c != col] for i in range(1, n)]
            term = r[0][col] * det(minor)
            total = total + (term if col % 2 == 0 else -term)
        return total

    return det([list(row) for row in rows])


def apply_linear(h: TruncatedSeries, l: LinearSubstitution) -> TruncatedSeries:
    """Exact substitution of the linear forms for the variables."""
    order = h.order
    images = []
    for i in range(4):
        img = zero_series(order)
        for j in range(4):
            entry = l.matrix[i][j]
            if not entry.is_zero():
                key = [0, 0, 0, 0]
                key[j] = 1
                img = img.add(monomial(order, tuple(key), entry))
        images.append(img)
    return substitute(h, images, order)
