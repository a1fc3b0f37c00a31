"""Brute-force sympy reference for the normalization pipeline.

Everything here works by literal symbolic substitution and sp.Poly
coefficient extraction, sharing no code with the package.  Slow but
unambiguous; the tests treat these routines as ground truth.

Convention encoded throughout: S is a polynomial in the mixed variables
(x, yhat), written with the plain VARS slots (x1, x2, y1, y2) where the
y-slots stand for yhat.  The generating relations are

    xhat_j = x_j - dS/dyhat_j(x, yhat),   yhat_j = y_j + dS/dx_j(x, yhat)

and invert to x = xhat + S_yhat, y = yhat - S_x.
"""

from __future__ import annotations

import sympy as sp

from gmpy2 import mpq

X1, X2, Y1, Y2 = sp.symbols("x1 x2 y1 y2")
XH1, XH2, YH1, YH2 = sp.symbols("xh1 xh2 yh1 yh2")
VARS = (X1, X2, Y1, Y2)
HVARS = (XH1, XH2, YH1, YH2)


def truncate(expr, order, gens=VARS):
    expr = sp.expand(expr)
    if expr == 0:
        return sp.Integer(0)
    poly = sp.Poly(expr, *gens)
    out = sp.Integer(0)
    for monom, coeff in poly.terms():
        if sum(monom) <= order:
            term = coeff
            for g, e in zip(gens, monom):
                term *= g**e
            out += term
    return sp.expand(out)


def coeffs_by_monomial(expr, gens=VARS):
    expr = sp.expand(expr)
    if expr == 0:
        return {}
    poly = sp.Poly(expr, *gens)
    return {m: c for m, c in poly.terms() if c != 0}


def invert_map(S, order):
    """Solve x = xh + S_yh(x, yh), y = yh - S_x(x, yh); return (xsol, ysol)
    as expressions in HVARS."""
    dS = [sp.diff(S, v) for v in VARS]
    xs = [XH1, XH2]
    for _ in range(order + 2):
        sub = {X1: xs[0], X2: xs[1], Y1: YH1, Y2: YH2}
        xs_new = [
            truncate(XH1 + dS[2].subs(sub, simultaneous=True), order, HVARS),
            truncate(XH2 + dS[3].subs(sub, simultaneous=True), order, HVARS),
        ]
        if xs_new == xs:
            break
        xs = xs_new
    sub = {X1: xs[0], X2: xs[1], Y1: YH1, Y2: YH2}
    ys = [
        truncate(YH1 - dS[0].subs(sub, simultaneous=True), order, HVARS),
        truncate(YH2 - dS[1].subs(sub, simultaneous=True), order, HVARS),
    ]
    return xs, ys


def pushforward(h, S, order):
    """h composed with the inverse of the map generated by S, truncated."""
    xs, ys = invert_map(S, order)
    sub = {X1: xs[0], X2: xs[1], Y1: ys[0], Y2: ys[1]}
    hhat = truncate(h.subs(sub, simultaneous=True), order, HVARS)
    back = {XH1: X1, XH2: X2, YH1: Y1, YH2: Y2}
    return sp.expand(hhat.subs(back, simultaneous=True))


def forward_map(S, order):
    """Return (xh(x,y), yh(x,y)) by solving yh = y + S_x(x, yh)."""
    dS = [sp.diff(S, v) for v in VARS]
    yh = [Y1, Y2]
    for _ in range(order + 2):
        sub = {X1: X1, X2: X2, Y1: yh[0], Y2: yh[1]}
        yh_new = [
            truncate(Y1 + dS[0].subs(sub, simultaneous=True), order),
            truncate(Y2 + dS[1].subs(sub, simultaneous=True), order),
        ]
        if yh_new == yh:
            break
        yh = yh_new
    sub = {X1: X1, X2: X2, Y1: yh[0], Y2: yh[1]}
    xh = [
        truncate(X1 - dS[2].subs(sub, simultaneous=True), order),
        truncate(X2 - dS[3].subs(sub, simultaneous=True), order),
    ]
    return xh, yh


def is_diagonal(monom):
    return monom[0] == monom[2] and monom[1] == monom[3]


def normalize(h, lam, order):
    """Degree-by-degree normalization driven purely by the defining
    property: kill off-diagonal coefficients with the homological solution,
    then re-check they vanish at every degree."""
    l1, l2 = lam
    cur = sp.expand(h)
    S_total = sp.Integer(0)
    for d in range(3, order + 1):
        terms = coeffs_by_monomial(cur)
        Sd = sp.Integer(0)
        for monom, coeff in terms.items():
            if sum(monom) != d or is_diagonal(monom):
                continue
            a1, a2, b1, b2 = monom
            div = l1 * (a1 - b1) + l2 * (a2 - b2)
            assert div != 0, (monom, "resonant")
            Sd += (coeff / div) * X1**a1 * X2**a2 * Y1**b1 * Y2**b2
        if Sd != 0:
            cur = pushforward(cur, Sd, order)
            S_total += Sd
        for monom, coeff in coeffs_by_monomial(cur).items():
            if sum(monom) <= d and not is_diagonal(monom):
                c = sp.simplify(coeff)
                assert c == 0, (d, monom, c)
    return cur, S_total


# -- converters between package objects and sympy expressions --------------

def gaussian_to_sympy(c) -> sp.Expr:
    re = sp.Rational(int(c.re.numerator), int(c.re.denominator))
    im = sp.Rational(int(c.im.numerator), int(c.im.denominator))
    return re + im * sp.I


def series_to_sympy(series) -> sp.Expr:
    out = sp.Integer(0)
    for key, coeff in series.raw_items():
        term = gaussian_to_sympy(coeff)
        for g, e in zip(VARS, key):
            term *= g**e
        out += term
    return sp.expand(out)


def sympy_to_coeffs(expr) -> dict:
    """Monomial -> (re, im) as mpq pairs, zeros dropped."""
    out = {}
    for monom, coeff in coeffs_by_monomial(expr).items():
        c = sp.expand(coeff)
        re, im = c.as_real_imag()
        re_q = mpq(sp.Rational(re).p, sp.Rational(re).q)
        im_q = mpq(sp.Rational(im).p, sp.Rational(im).q)
        if re_q or im_q:
            out[tuple(int(e) for e in monom)] = (re_q, im_q)
    return out
