"""Rewrite-based simplification of terms and formulas.

Rules, applied to a fixpoint:

* empty range: a big operator over ``lo > hi`` is its identity, a singleton
  range is its body, and ``sorted`` over at most one cell is true;
* absorption: ``e[i:=a-1] * prod(i, a, b, e)`` becomes ``prod(i, a-1, b, e)``;
* unfold-low: a product whose lower bound sits ``d`` below another copy of
  itself is unfolded so the two can cancel;
* polynomial normalization of arithmetic and canonical comparison literals;
* boolean flattening, bound merging and negation normal form.

Side conditions that need ``lo <= hi`` are discharged against a context of
literals.  In ``lenient`` mode absorption fires regardless, and each side
condition it could not discharge is recorded.
"""
from __future__ import annotations

from typing import Optional, Union

from ..syntax import (
    And, BigOp, BigProd, Cmp, FALSE, FalseF, Formula, Implies, IntConst, Not,
    Or, SortedRange, TRUE, TrueF, Term, TVar, VLen, VRef, conjuncts, free_vars,
    fresh_name, substitute,
)
from . import fm
from .poly import Lit, Poly, combine_bounds, make_lit, mono_key, to_poly, to_term

MODES = ("sound", "lenient")
UNFOLD_LIMIT = 4


class Simplifier:
    def __init__(self, mode: str = "lenient", context: Formula = TRUE,
                 notes: Optional[list] = None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.notes = notes
        self.ctx: list[Lit] = []
        if not isinstance(context, TrueF):
            plain = Simplifier(mode)
            for c in conjuncts(plain.formula(context)):
                lit = plain.literal(c)
                if isinstance(lit, Lit):
                    self.ctx.append(lit)

    # -- context ------------------------------------------------------------

    def entailed(self, op: str, diff: Poly) -> bool:
        """Does the context force ``diff op 0``?"""
        lit = make_lit(op, diff)
        if isinstance(lit, bool):
            return lit
        if not self.ctx:
            return False
        return all(fm.infeasible(self.ctx + [n]) for n in lit.negate())

    def _note(self, f: Formula) -> None:
        if self.notes is not None and f not in self.notes:
            self.notes.append(f)

    # -- terms --------------------------------------------------------------

    def poly(self, t: Term) -> Poly:
        return self._rewrite(to_poly(t, self.atom))

    def term(self, t: Term) -> Term:
        return to_term(self.poly(t))

    def atom(self, a: Term) -> Poly:
        if isinstance(a, (TVar, VLen)):
            return Poly.atom(a)
        if isinstance(a, VRef):
            return Poly.atom(VRef(a.vec, self.term(a.idx)))
        if isinstance(a, BigOp):
            return self._bigop(a)
        raise TypeError(a)

    def _bigop(self, a: BigOp) -> Poly:
        lo, hi = self.poly(a.lo), self.poly(a.hi)
        prod = isinstance(a, BigProd)
        width = hi - lo
        if width.is_const() and width.constant < 0 or self.entailed("<", hi - lo):
            return Poly.const(1 if prod else 0)
        index, body = _canonical_binder(a.index, a.body)
        if width.is_const() and width.constant == 0:
            return self.poly(substitute(body, index, to_term(lo)))
        body = Simplifier(self.mode, notes=self.notes).term(body)
        return Poly.atom(type(a)(index, to_term(lo), to_term(hi), body))

    def _rewrite(self, p: Poly) -> Poly:
        for _ in range(64):
            q = self._absorb(p)
            if q is None:
                q = self._unfold(p)
            if q is None:
                return p
            p = q
        return p

    def _absorb(self, p: Poly) -> Optional[Poly]:
        for a in sorted(p.atoms(), key=repr):
            if not isinstance(a, BigProd):
                continue
            with_a = {m: c for m, c in p.terms.items() if m.count(a) == 1}
            if not with_a:
                continue
            lo = to_poly(a.lo)
            below = to_term(lo - Poly.const(1))
            factor = self.poly(substitute(a.body, a.index, below))
            if factor.is_const():
                continue
            quotient = _divide(Poly({tuple(x for x in m if x != a): c for m, c in with_a.items()}),
                               factor)
            if quotient is None:
                continue
            hi = to_poly(a.hi)
            if not self.entailed("<=", lo - Poly.const(1) - hi):
                if self.mode == "sound":
                    continue
                self._note(Cmp("<=", below, a.hi))
            grown = self.atom(type(a)(a.index, below, a.hi, a.body))
            rest = Poly({m: c for m, c in p.terms.items() if m not in with_a})
            return rest + quotient * grown
        return None

    def _unfold(self, p: Poly) -> Optional[Poly]:
        prods = [a for a in p.atoms() if isinstance(a, BigProd)]
        for a in prods:
            for b in prods:
                if a is b or a.hi != b.hi or a.body != b.body or a.index != b.index:
                    continue
                d = to_poly(b.lo) - to_poly(a.lo)
                if not d.is_const() or not 0 < d.constant <= UNFOLD_LIMIT:
                    continue
                top = to_poly(b.lo) - Poly.const(1)
                if not self.entailed("<=", top - to_poly(a.hi)):
                    continue
                expanded = Poly.atom(b)
                for j in range(d.constant):
                    at = to_term(to_poly(a.lo) + Poly.const(j))
                    expanded = expanded * self.poly(substitute(a.body, a.index, at))
                out: dict = {}
                for m, c in p.terms.items():
                    if a in m:
                        stripped = list(m)
                        stripped.remove(a)
                        piece = Poly({tuple(stripped): c}) * expanded
                    else:
                        piece = Poly({m: c})
                    for mm, cc in piece.terms.items():
                        out[mm] = out.get(mm, 0) + cc
                return Poly(out)
        return None

    # -- formulas -----------------------------------------------------------

    def literal(self, f: Formula) -> Union[Lit, bool, None]:
        if isinstance(f, Cmp):
            return make_lit(f.op, self.poly(f.lhs) - self.poly(f.rhs))
        return None

    def formula(self, f: Formula) -> Formula:
        return self._nnf(f, True)

    def _nnf(self, f: Formula, positive: bool) -> Formula:
        if isinstance(f, TrueF):
            return TRUE if positive else FALSE
        if isinstance(f, FalseF):
            return FALSE if positive else TRUE
        if isinstance(f, Not):
            return self._nnf(f.arg, not positive)
        if isinstance(f, Cmp):
            lit = self.literal(f)
            if isinstance(lit, bool):
                return TRUE if lit == positive else FALSE
            if positive:
                return lit.formula()
            neg = lit.negate()
            if len(neg) == 1:
                return neg[0].formula()
            return Not(lit.formula())
        if isinstance(f, (And, Or)):
            conj = isinstance(f, And) == positive
            parts = [self._nnf(a, positive) for a in f.args]
            return self._junction(parts, conj)
        if isinstance(f, Implies):
            if not positive:
                return self._junction([self._nnf(f.hyp, True), self._nnf(f.concl, False)], True)
            hyp = self._nnf(f.hyp, True)
            concl = Simplifier(self.mode, _and(hyp, self._ctx_formula()), self.notes)._nnf(f.concl, True)
            if isinstance(hyp, FalseF) or isinstance(concl, TrueF) or concl == hyp:
                return TRUE
            if isinstance(hyp, TrueF):
                return concl
            if isinstance(concl, FalseF):
                return self._nnf(hyp, False)
            return Implies(hyp, concl)
        if isinstance(f, SortedRange):
            lo, hi = self.poly(f.lo), self.poly(f.hi)
            width = hi - lo
            if width.is_const() and width.constant <= 0 or self.entailed("<=", width):
                return TRUE if positive else FALSE
            s = SortedRange(f.vec, to_term(lo), to_term(hi))
            return s if positive else Not(s)
        raise TypeError(f"not a formula: {f!r}")

    def _ctx_formula(self) -> Formula:
        return _and(*(l.formula() for l in self.ctx)) if self.ctx else TRUE

    def _junction(self, parts: list[Formula], conj: bool) -> Formula:
        unit, zero, kind = (TrueF, FalseF, And) if conj else (FalseF, TrueF, Or)
        flat: list[Formula] = []
        for p in parts:
            if isinstance(p, kind):
                flat.extend(p.args)
            elif isinstance(p, zero):
                return zero()
            elif not isinstance(p, unit):
                flat.append(p)
        if conj:
            merged = self._merge_conj(flat)
            if merged is None:
                return FALSE
            flat = merged
        elif self._covers(flat):
            return TRUE
        out: list[Formula] = []
        for p in flat:
            if p not in out:
                out.append(p)
        for p in out:
            if _complement(p) in out:
                return zero()
        if not out:
            return unit()
        return out[0] if len(out) == 1 else kind(tuple(out))

    def _covers(self, parts: list[Formula]) -> bool:
        """Do these inequality disjuncts leave no integer point uncovered?"""
        negs: list[Lit] = []
        for p in parts:
            lit = self.literal(p)
            if isinstance(lit, Lit) and lit.op != "=":
                negs.extend(lit.negate())
        return len(negs) >= 2 and fm.infeasible(negs)

    def _merge_conj(self, parts: list[Formula]) -> Optional[list[Formula]]:
        lits: list[Lit] = []
        diseqs: list[Lit] = []
        slots: list = []
        for p in parts:
            lit = self.literal(p)
            if isinstance(lit, Lit):
                lits.append(lit)
                slots.append(("lit", lit.poly))
                continue
            if isinstance(p, Not) and isinstance(p.arg, Cmp):
                lit = self.literal(p.arg)
                if isinstance(lit, Lit) and lit.op == "=":
                    diseqs.append(lit)
                    slots.append(("lit", lit.poly))
                    continue
            slots.append(("other", p))
        if not lits and not diseqs:
            return parts
        merged = combine_bounds(lits, diseqs)
        if merged is False:
            return None
        by_poly: dict = {}
        for m in merged:
            poly = m[1].poly if isinstance(m, tuple) else m.poly
            f = Not(m[1].formula()) if isinstance(m, tuple) else m.formula()
            by_poly.setdefault(poly, []).append(f)
        out: list[Formula] = []
        for kind, x in slots:
            if kind == "other":
                out.append(x)
            elif x in by_poly:
                out.extend(by_poly.pop(x))
        return out


def _and(*fs: Formula) -> Formula:
    parts = [f for f in fs if not isinstance(f, TrueF)]
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def _complement(f: Formula) -> Formula:
    return f.arg if isinstance(f, Not) else Not(f)


def _canonical_binder(index: str, body: Term) -> tuple[str, Term]:
    others = free_vars(body) - {index}
    want = fresh_name("i", others)
    if want == index:
        return index, body
    return want, substitute(body, index, TVar(want))


def _divide(q: Poly, d: Poly) -> Optional[Poly]:
    """Exact quotient ``q / d``, or ``None`` when ``d`` does not divide ``q``."""
    if not q.terms or not d.terms:
        return None
    order = lambda p: sorted(p.terms, key=mono_key)  # noqa: E731
    lead = order(d)[0]
    lead_c = d.terms[lead]
    out: dict = {}
    r = q
    for _ in range(4 * len(q.terms) + 16):
        if not r.terms:
            return Poly(out)
        m = order(r)[0]
        rest = list(m)
        for x in lead:
            if x not in rest:
                return None
            rest.remove(x)
        if r.terms[m] % lead_c:
            return None
        t = Poly({tuple(rest): r.terms[m] // lead_c})
        for mm, c in t.terms.items():
            out[mm] = out.get(mm, 0) + c
        r = r - t * d
    return None


def simplify(x, mode: str = "lenient", context: Formula = TRUE, notes: Optional[list] = None):
    """Normalize a term or formula; ``context`` discharges range side conditions."""
    s = Simplifier(mode, context, notes)
    if isinstance(x, Formula):
        return s.formula(x)
    return s.term(x)
