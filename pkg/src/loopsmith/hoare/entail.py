"""Entailment between formulas: proved, refuted (with a witness store) or unknown."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from ..interp import EvalError, eval_formula, eval_term
from ..syntax import (
    And, BigProd, Cmp, FALSE, FalseF, Formula, Implies, Not, Or, SortedRange,
    TRUE, TrueF, TVar, Term, conj, conjuncts, free_vars, substitute, vector_names,
)
from . import fm
from .poly import Lit, Poly, make_lit, to_poly, to_term
from .simplify import Simplifier

VERDICTS = ("proved", "refuted", "unknown")
DNF_LIMIT = 256
SPLIT_DEPTH = 2
SEARCH_VARS = 3
SEARCH_RANGE = (-4, 12)


@dataclass
class EntailResult:
    verdict: str
    goal: Formula
    residual: Formula = TRUE
    counterexample: Optional[dict] = None
    side_conditions: list = field(default_factory=list)

    def __str__(self) -> str:
        return self.verdict


class _Run:
    def __init__(self, mode: str):
        self.mode = mode
        self.notes: list[Formula] = []
        self.failed: list[Formula] = []

    def simplifier(self, context: Formula = TRUE) -> Simplifier:
        return Simplifier(self.mode, context, self.notes)


# ---------------------------------------------------------------------------
# disjunctive normal form of simplified hypotheses


def _dnf(f: Formula, s: Simplifier) -> list[list[Formula]]:
    if isinstance(f, TrueF):
        return [[]]
    if isinstance(f, FalseF):
        return []
    if isinstance(f, And):
        out: list[list[Formula]] = [[]]
        for a in f.args:
            parts = _dnf(a, s)
            if len(out) * len(parts) > DNF_LIMIT:
                continue  # dropping a conjunct only weakens the hypothesis
            out = [x + y for x in out for y in parts]
        return out
    if isinstance(f, Or):
        out = []
        for a in f.args:
            out.extend(_dnf(a, s))
        return out[:DNF_LIMIT] if len(out) <= DNF_LIMIT else [[]]
    if isinstance(f, Implies):
        return _dnf(s.formula(Or((Not(f.hyp), f.concl))), s)
    if isinstance(f, Not) and isinstance(f.arg, Cmp):
        lit = s.literal(f.arg)
        if isinstance(lit, Lit):
            return [[n.formula()] for n in lit.negate()]
    return [[f]]


# ---------------------------------------------------------------------------
# equality propagation


def _solve(lit: Lit) -> Optional[tuple[str, Term]]:
    cands = []
    for m in lit.poly.monos():
        if len(m) != 1 or not isinstance(m[0], TVar) or abs(lit.poly.terms[m]) != 1:
            continue
        x = m[0].name
        others = [a for mm in lit.poly.terms if mm != m for a in mm]
        if any(x in free_vars(a) for a in others):
            continue
        cands.append((m, x))
    if not cands:
        return None
    m, x = min(cands, key=lambda mx: ("@" not in mx[1], mx[1]))
    coef = lit.poly.terms[m]
    rest = Poly({mm: c for mm, c in lit.poly.terms.items() if mm != m})
    sol = (Poly.const(lit.c) - rest).scale(coef)
    return x, to_term(sol)


def _propagate(items: list[Formula], goal: Formula, run: _Run):
    """Eliminate variables fixed by equalities.  ``None`` if the items clash."""
    s = run.simplifier()
    items = list(items)
    for _ in range(64):
        for idx, f in enumerate(items):
            lit = s.literal(f)
            if not (isinstance(lit, Lit) and lit.op == "="):
                continue
            solved = _solve(lit)
            if solved is None:
                continue
            x, t = solved
            rest: list[Formula] = []
            for j, g in enumerate(items):
                if j == idx:
                    continue
                g2 = s.formula(substitute(g, x, t)) if x in free_vars(g) else g
                if isinstance(g2, FalseF):
                    return None
                rest.extend(conjuncts(g2))
            items = rest
            goal = substitute(goal, x, t)
            break
        else:
            return items, goal
    return items, goal


# ---------------------------------------------------------------------------
# facts of one disjunct


class _Facts:
    def __init__(self, items: list[Formula], run: _Run):
        self.items = items
        self.run = run
        s = run.simplifier()
        self.lits: list[Lit] = []
        self.sorted: list[SortedRange] = []
        for f in items:
            lit = s.literal(f)
            if isinstance(lit, Lit):
                self.lits.append(lit)
            elif isinstance(f, SortedRange):
                self.sorted.append(f)
        self._pos_cache: dict = {}

    def _plain_entailed(self, lit) -> bool:
        if isinstance(lit, bool):
            return lit
        return all(fm.infeasible(self.lits + [n]) for n in lit.negate())

    def _positivity(self, atoms) -> list:
        """``prod(i, lo, hi, i + c) >= 1`` whenever ``lo + c >= 1``."""
        rows = []
        for a in atoms:
            if not isinstance(a, BigProd):
                continue
            if a not in self._pos_cache:
                offset = to_poly(a.body) - Poly.atom(TVar(a.index))
                self._pos_cache[a] = offset.is_const() and self._plain_entailed(
                    make_lit(">=", to_poly(a.lo) + offset - Poly.const(1))
                )
            if self._pos_cache[a]:
                rows.append(({(a,): 1}, -1))
        return rows

    def infeasible(self, extra: list[Lit] = ()) -> bool:
        lits = self.lits + list(extra)
        atoms = {a for l in lits for m in l.poly.terms for a in m}
        return fm.infeasible(lits, self._positivity(atoms))

    def entailed(self, lit) -> bool:
        if isinstance(lit, bool):
            return lit
        return all(self.infeasible([n]) for n in lit.negate())


# ---------------------------------------------------------------------------
# proof search


def _prove_under(hyps: list[Formula], goal: Formula, run: _Run, depth: int) -> bool:
    s = run.simplifier()
    hyp = s.formula(conj(hyps)) if hyps else TRUE
    ok = True
    for disj in _dnf(hyp, s):
        res = _propagate(disj, goal, run)
        if res is None:
            continue
        items, g = res
        facts = _Facts(items, run)
        if facts.infeasible():
            continue
        g = run.simplifier(conj(items) if items else TRUE).formula(g)
        if not _prove_goal(g, facts, run, depth):
            ok = False
    return ok


def _prove_goal(g: Formula, facts: _Facts, run: _Run, depth: int) -> bool:
    if isinstance(g, TrueF):
        return True
    if isinstance(g, FalseF):
        run.failed.append(g)
        return False
    if isinstance(g, And):
        results = [_prove_goal(a, facts, run, depth) for a in g.args]
        return all(results)
    if isinstance(g, Or):
        mark = len(run.failed)
        for a in g.args:
            if _prove_goal(a, facts, run, depth):
                del run.failed[mark:]
                return True
        del run.failed[mark:]
        if depth > 0:
            for i, a in enumerate(g.args):
                others = [Not(b) for j, b in enumerate(g.args) if j != i]
                if _prove_under(facts.items + others, a, run, depth - 1):
                    del run.failed[mark:]
                    return True
            del run.failed[mark:]
        run.failed.append(g)
        return False
    if isinstance(g, Implies):
        mark = len(run.failed)
        if _prove_under(facts.items + [g.hyp], g.concl, run, depth):
            return True
        del run.failed[mark:]
        run.failed.append(g)
        return False
    s = run.simplifier()
    if isinstance(g, Cmp):
        if facts.entailed(s.literal(g)):
            return True
    elif isinstance(g, Not) and isinstance(g.arg, Cmp):
        lit = s.literal(g.arg)
        if isinstance(lit, bool):
            if not lit:
                return True
        elif facts.infeasible([lit]):
            return True
    elif isinstance(g, SortedRange):
        if _sorted_holds(g, facts):
            return True
    elif g in facts.items:
        return True
    run.failed.append(g)
    return False


def _sorted_holds(g: SortedRange, facts: _Facts) -> bool:
    lo, hi = to_poly(g.lo), to_poly(g.hi)
    if facts.entailed(make_lit("<=", hi - lo)):
        return True
    for h in facts.sorted:
        if h.vec != g.vec:
            continue
        if facts.entailed(make_lit("<=", to_poly(h.lo) - lo)) and facts.entailed(make_lit("<=", hi - to_poly(h.hi))):
            return True
    return False


# ---------------------------------------------------------------------------
# counterexamples


def _definitions(hyp: Formula) -> list[tuple[str, Term]]:
    defs: list[tuple[str, Term]] = []
    seen: set[str] = set()
    for c in conjuncts(hyp):
        if not (isinstance(c, Cmp) and c.op == "="):
            continue
        for x, t in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
            if isinstance(x, TVar) and x.name not in seen and x.name not in free_vars(t):
                defs.append((x.name, t))
                seen.add(x.name)
                break
    # evaluation order: each definition only reads names defined before it
    ordered: list[tuple[str, Term]] = []
    pending = list(defs)
    while pending:
        waiting = {y for y, _ in pending}
        ready = [d for d in pending if not (free_vars(d[1]) & (waiting - {d[0]}))]
        if not ready:
            break
        ordered.append(ready[0])
        pending.remove(ready[0])
    return ordered


def find_counterexample(hyp: Formula, goal: Formula, max_vars: int = SEARCH_VARS,
                        value_range: tuple[int, int] = SEARCH_RANGE) -> Optional[dict]:
    """A small integer store satisfying ``hyp`` but not ``goal``, if one exists in range."""
    whole = And((hyp, Not(goal)))
    names = free_vars(whole)
    if vector_names(whole):
        return None
    defs = [(x, t) for x, t in _definitions(hyp) if x in names]
    defined = {x for x, _ in defs}
    free = sorted(names - defined)
    if len(free) > max_vars:
        return None
    lo, hi = value_range
    values = sorted(range(lo, hi + 1), key=lambda v: (abs(v), v < 0))
    stores = sorted(itertools.product(values, repeat=len(free)),
                    key=lambda vs: (sum(abs(v) for v in vs), vs))
    for vs in stores:
        store = dict(zip(free, vs))
        try:
            for x, t in defs:
                store[x] = eval_term(t, store)
            if eval_formula(hyp, store) and not eval_formula(goal, store):
                return store
        except (EvalError, OverflowError, MemoryError):
            continue
    return None


# ---------------------------------------------------------------------------


def check_entailment(hyp: Formula, goal: Formula, mode: str = "lenient",
                     search: bool = True) -> EntailResult:
    run = _Run(mode)
    simple_goal = run.simplifier(hyp).formula(goal)
    proved = _prove_under([hyp], goal, run, SPLIT_DEPTH)
    residual = conj(_dedupe(run.failed)) if not proved else TRUE
    if proved:
        return EntailResult("proved", simple_goal, TRUE, None, list(run.notes))
    cex = find_counterexample(hyp, goal) if search else None
    verdict = "refuted" if cex is not None else "unknown"
    return EntailResult(verdict, simple_goal, residual, cex, list(run.notes))


def _dedupe(fs: list[Formula]) -> list[Formula]:
    out: list[Formula] = []
    for f in fs:
        if f not in out:
            out.append(f)
    return out


def entails(hyp: Formula, goal: Formula, mode: str = "lenient") -> str:
    """``proved``, ``refuted`` or ``unknown`` for ``hyp ⊢ goal``."""
    return check_entailment(hyp, goal, mode).verdict
