"""Polynomials over opaque integer atoms, and canonical linear literals.

An atom is a variable, a vector cell, a vector length or a big-operator
term; a monomial is a sorted tuple of atoms and a polynomial maps monomials
to nonzero integer coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import gcd
from typing import Callable, Iterable, Optional, Union

from ..printer import term_sexpr
from ..syntax import (
    Add, Add1, BigOp, Cmp, FALSE, Formula, IntConst, Mul, Not, Sub, Sub1,
    TRUE, TVar, Term, VLen, VRef,
)

Atom = Term
Mono = tuple  # tuple[Atom, ...]

_RANK = {TVar: 0, VRef: 1, VLen: 2}


def atom_key(a: Atom):
    return (_RANK.get(type(a), 3), term_sexpr(a))


def mono_key(m: Mono):
    return (-len(m), tuple(atom_key(a) for a in m))


class Poly:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Optional[dict] = None):
        self.terms = {m: c for m, c in (terms or {}).items() if c}
        self._hash = None

    @staticmethod
    def const(c: int) -> "Poly":
        return Poly({(): c})

    @staticmethod
    def atom(a: Atom) -> "Poly":
        return Poly({(a,): 1})

    def __add__(self, o: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, o: "Poly") -> "Poly":
        return self + (-o)

    def __mul__(self, o: "Poly") -> "Poly":
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = tuple(sorted(m1 + m2, key=atom_key))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def scale(self, k: int) -> "Poly":
        return Poly({m: c * k for m, c in self.terms.items()})

    def __eq__(self, o) -> bool:
        return isinstance(o, Poly) and self.terms == o.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Poly({term_sexpr(to_term(self))})"

    @property
    def constant(self) -> int:
        return self.terms.get((), 0)

    def nonconst(self) -> "Poly":
        return Poly({m: c for m, c in self.terms.items() if m})

    def is_const(self) -> bool:
        return all(not m for m in self.terms)

    def monos(self) -> list[Mono]:
        return sorted((m for m in self.terms if m), key=mono_key)

    def atoms(self) -> set:
        return {a for m in self.terms for a in m}

    def content(self) -> int:
        """gcd of the non-constant coefficients (0 if there are none)."""
        return reduce(gcd, (abs(c) for m, c in self.terms.items() if m), 0)


def to_poly(t: Term, atom_hook: Callable[[Atom], Poly] = Poly.atom) -> Poly:
    """Expand ``t``; ``atom_hook`` normalizes each atom it meets."""
    if isinstance(t, IntConst):
        return Poly.const(t.value)
    if isinstance(t, Add):
        return reduce(lambda a, b: a + b, (to_poly(x, atom_hook) for x in t.args), Poly())
    if isinstance(t, Mul):
        return reduce(lambda a, b: a * b, (to_poly(x, atom_hook) for x in t.args), Poly.const(1))
    if isinstance(t, Sub):
        return to_poly(t.left, atom_hook) - to_poly(t.right, atom_hook)
    if isinstance(t, Sub1):
        return to_poly(t.arg, atom_hook) - Poly.const(1)
    if isinstance(t, Add1):
        return to_poly(t.arg, atom_hook) + Poly.const(1)
    if isinstance(t, (TVar, VRef, VLen, BigOp)):
        return atom_hook(t)
    raise TypeError(f"not a term: {t!r}")


def _mono_term(m: Mono, c: int) -> Term:
    factors = list(m)
    if c != 1:
        factors.insert(0, IntConst(c))
    if not factors:
        return IntConst(1)
    return factors[0] if len(factors) == 1 else Mul(tuple(factors))


def _sum(parts: list[Term]) -> Optional[Term]:
    if not parts:
        return None
    return parts[0] if len(parts) == 1 else Add(tuple(parts))


def to_term(p: Poly) -> Term:
    """Canonical term: positive monomials, then the constant, minus negative monomials."""
    pos = [_mono_term(m, c) for m in p.monos() if (c := p.terms[m]) > 0]
    neg = [_mono_term(m, -c) for m in p.monos() if (c := p.terms[m]) < 0]
    k = p.constant
    if pos:
        if k > 0:
            pos.append(IntConst(k))
        elif k < 0:
            neg.append(IntConst(-k))
        left = _sum(pos)
        return left if not neg else Sub(left, _sum(neg))
    if not neg:
        return IntConst(k)
    right = _sum(neg)
    return Sub(IntConst(k), right)


def _split_display(p: Poly, c: int) -> tuple[Term, Term]:
    """``p`` versus ``c`` as ``positive-part  vs  negative-part + c``."""
    pos = Poly({m: k for m, k in p.terms.items() if k > 0})
    neg = Poly({m: -k for m, k in p.terms.items() if k < 0})
    return to_term(pos), to_term(neg + Poly.const(c))


@dataclass(frozen=True)
class Lit:
    """``poly op c`` with ``op`` one of ``=``, ``>=``, ``<=``; ``poly`` has no constant."""

    poly: Poly
    op: str
    c: int

    def formula(self) -> Formula:
        op, c = self.op, self.c
        if op == "=":
            solved = self._solved()
            if solved is not None:
                return solved
        if op == ">=" and c == 1:
            op, c = ">", 0
        elif op == "<=" and c == -1:
            op, c = "<", 0
        lhs, rhs = _split_display(self.poly, c)
        return Cmp(op, lhs, rhs)

    def _solved(self) -> Optional[Formula]:
        """``x = rest`` when some variable occurs alone with coefficient 1 or -1."""
        for m in self.poly.monos():
            if len(m) == 1 and isinstance(m[0], TVar) and abs(self.poly.terms[m]) == 1:
                k = self.poly.terms[m]
                rest = Poly({mm: cc for mm, cc in self.poly.terms.items() if mm != m})
                return Cmp("=", m[0], to_term((Poly.const(self.c) - rest).scale(k)))
        return None

    def negate(self) -> list["Lit"]:
        """Disjuncts of the negation."""
        if self.op == ">=":
            return [Lit(self.poly, "<=", self.c - 1)]
        if self.op == "<=":
            return [Lit(self.poly, ">=", self.c + 1)]
        return [Lit(self.poly, "<=", self.c - 1), Lit(self.poly, ">=", self.c + 1)]

    def atoms(self) -> set:
        return self.poly.atoms()


_FLIP = {"=": "=", ">=": "<=", "<=": ">="}


def _floordiv(a: int, b: int) -> int:
    return a // b


def _ceildiv(a: int, b: int) -> int:
    return -((-a) // b)


def make_lit(op: str, diff: Poly) -> Union[Lit, bool]:
    """Canonical literal for ``diff op 0`` (op in =,<,<=,>,>=), or a boolean if decided."""
    if op == "<":
        op, diff = "<=", diff + Poly.const(1)
    elif op == ">":
        op, diff = ">=", diff - Poly.const(1)
    p = diff.nonconst()
    c = -diff.constant
    if not p.terms:
        return {"=": 0 == c, ">=": 0 >= c, "<=": 0 <= c}[op]
    lead = p.monos()[0]
    if p.terms[lead] < 0:
        p, c, op = -p, -c, _FLIP[op]
    g = p.content()
    if g > 1:
        if op == "=":
            if c % g:
                return False
            c //= g
        elif op == ">=":
            c = _ceildiv(c, g)
        else:
            c = _floordiv(c, g)
        p = Poly({m: k // g for m, k in p.terms.items()})
    return Lit(p, op, c)


def lit_or_bool_formula(x: Union[Lit, bool]) -> Formula:
    if x is True:
        return TRUE
    if x is False:
        return FALSE
    return x.formula()


def combine_bounds(lits: Iterable[Lit], diseqs: Iterable[Lit]) -> Union[list, bool]:
    """Merge literals over the same polynomial into tightest bounds.

    ``diseqs`` are ``=`` literals that appear negated.  Returns the merged
    literals plus the surviving disequalities (tagged ``("ne", lit)``), or
    ``False`` when the bounds clash.
    """
    groups: dict[Poly, list] = {}
    order: list[Poly] = []
    for lit in lits:
        if lit.poly not in groups:
            groups[lit.poly] = [None, None, set()]
            order.append(lit.poly)
        g = groups[lit.poly]
        if lit.op in ("=", ">="):
            g[0] = lit.c if g[0] is None else max(g[0], lit.c)
        if lit.op in ("=", "<="):
            g[1] = lit.c if g[1] is None else min(g[1], lit.c)
    extra: list = []
    for d in diseqs:
        if d.poly in groups:
            groups[d.poly][2].add(d.c)
        else:
            extra.append(("ne", d))
    out: list = []
    for p in order:
        lo, hi, ne = groups[p]
        changed = True
        while changed:
            changed = False
            if lo is not None and lo in ne:
                lo += 1
                changed = True
            if hi is not None and hi in ne:
                hi -= 1
                changed = True
        if lo is not None and hi is not None:
            if lo > hi:
                return False
            if lo == hi:
                out.append(Lit(p, "=", lo))
                continue
        if lo is not None:
            out.append(Lit(p, ">=", lo))
        if hi is not None:
            out.append(Lit(p, "<=", hi))
        for c in sorted(ne):
            if (lo is None or c > lo) and (hi is None or c < hi):
                out.append(("ne", Lit(p, "=", c)))
    return out + extra


def ne_formula(lit: Lit) -> Formula:
    return Not(lit.formula())
