"""Fourier-Motzkin elimination with integer tightening.

Rows are ``sum(a_m * m) + b >= 0`` (or ``== 0``) over integer-valued
columns.  Only infeasibility is a trustworthy answer; ``False`` means
"not shown infeasible".
"""
from __future__ import annotations

from functools import reduce
from math import gcd
from typing import Iterable

from .poly import Lit

Row = tuple[dict, int]

MAX_ROWS = 3000


def lit_rows(lit: Lit) -> tuple[list[Row], list[Row]]:
    """(equalities, inequalities) encoding ``lit``."""
    coeffs = dict(lit.poly.terms)
    if lit.op == "=":
        return [(coeffs, -lit.c)], []
    if lit.op == ">=":
        return [], [(coeffs, -lit.c)]
    return [], [({m: -a for m, a in coeffs.items()}, lit.c)]


def _tighten(row: Row, eq: bool):
    coeffs, b = row
    coeffs = {m: a for m, a in coeffs.items() if a}
    if not coeffs:
        return (coeffs, b)
    g = reduce(gcd, (abs(a) for a in coeffs.values()))
    if g > 1:
        if eq:
            if b % g:
                return None  # no integer solution
            b //= g
        else:
            b = b // g  # floor keeps every integer solution
        coeffs = {m: a // g for m, a in coeffs.items()}
    return (coeffs, b)


def _combine(r1: Row, k1: int, r2: Row, k2: int) -> Row:
    c = {m: a * k1 for m, a in r1[0].items()}
    for m, a in r2[0].items():
        c[m] = c.get(m, 0) + a * k2
    return c, r1[1] * k1 + r2[1] * k2


def infeasible(lits: Iterable[Lit], extra_ineqs: Iterable[Row] = ()) -> bool:
    eqs: list[Row] = []
    ineqs: list[Row] = list(extra_ineqs)
    for lit in lits:
        e, i = lit_rows(lit)
        eqs += e
        ineqs += i
    return rows_infeasible(eqs, ineqs)


def rows_infeasible(eqs: list[Row], ineqs: list[Row]) -> bool:
    work_eqs = []
    for r in eqs:
        t = _tighten(r, True)
        if t is None:
            return True
        if not t[0]:
            if t[1] != 0:
                return True
            continue
        work_eqs.append(t)
    work = []
    for r in ineqs:
        t = _tighten(r, False)
        if not t[0]:
            if t[1] < 0:
                return True
            continue
        work.append(t)

    # equalities: substitute away one column each
    while work_eqs:
        eq = work_eqs.pop()
        coeffs, _ = eq
        col = min(coeffs, key=lambda m: (abs(coeffs[m]), len(m)))
        a = coeffs[col]
        sign = 1 if a > 0 else -1

        def elim(r: Row, is_eq: bool):
            b = r[0].get(col, 0)
            if not b:
                return r
            return _combine(r, abs(a), eq, -sign * b)

        new_eqs = []
        for r in work_eqs:
            t = _tighten(elim(r, True), True)
            if t is None:
                return True
            if not t[0]:
                if t[1] != 0:
                    return True
                continue
            new_eqs.append(t)
        work_eqs = new_eqs
        new = []
        for r in work:
            t = _tighten(elim(r, False), False)
            if not t[0]:
                if t[1] < 0:
                    return True
                continue
            new.append(t)
        work = new

    return _fm(work)


def _key(coeffs: dict):
    return frozenset(coeffs.items())


def _fm(rows: list[Row]) -> bool:
    best: dict = {}
    for c, b in rows:
        k = _key(c)
        if k not in best or b < best[k][1]:
            best[k] = (c, b)
    rows = list(best.values())
    while True:
        for c, b in rows:
            if not c and b < 0:
                return True
        cols: dict = {}
        for c, _ in rows:
            for m, a in c.items():
                p, n = cols.get(m, (0, 0))
                cols[m] = (p + (a > 0), n + (a < 0))
        if not cols:
            return False
        col = min(cols, key=lambda m: (cols[m][0] * cols[m][1], len(m), repr(m)))
        pos = [r for r in rows if r[0].get(col, 0) > 0]
        neg = [r for r in rows if r[0].get(col, 0) < 0]
        rest = [r for r in rows if not r[0].get(col, 0)]
        if len(pos) * len(neg) + len(rest) > MAX_ROWS:
            return False
        best = {}
        for c, b in rest:
            best[_key(c)] = (c, b)
        for p in pos:
            ap = p[0][col]
            for n in neg:
                an = -n[0][col]
                g = gcd(ap, an)
                t = _tighten(_combine(p, an // g, n, ap // g), False)
                if not t[0]:
                    if t[1] < 0:
                        return True
                    continue
                k = _key(t[0])
                if k not in best or t[1] < best[k][1]:
                    best[k] = t
        rows = list(best.values())
