"""Weakest preconditions, invariant dragging and whole-loop verification."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from ..printer import show
from ..syntax import (
    App, Assert, Begin, Cmp, Contract, Expr, Formula, FunDef, Implies, IntConst,
    Local, Not, Pos, Program, TRUE, TrueF, Term, TVar, VLen, While, calls_to,
    conj, conjuncts, def_exprs, free_vars, fresh_name, substitute,
    substitute_many, vector_names, walk,
)
from ..transform import TransformError, map_children_list, plan_loop
from .entail import EntailResult, check_entailment
from .poly import Lit, Poly, to_poly, to_term
from .simplify import Simplifier
from .translate import Assign, Call, Check, Stmt, Translator, Unsupported

ORIGINS = ("initialization", "preservation", "postcondition", "variant-decrease", "variant-bounded")


def _as_stmts(stmts, translator: Optional[Translator]) -> list[Stmt]:
    if all(isinstance(s, (Assign, Check, Call)) for s in stmts):
        return list(stmts)
    return (translator or Translator()).stmts(stmts)


def _names(*xs) -> set[str]:
    out: set[str] = set()
    for x in xs:
        out |= free_vars(x)
    return out


def call_wp(call: Call, post: Formula) -> Formula:
    """``requires`` now, and ``post`` for every outcome allowed by ``ensures``."""
    c = call.contract
    binding = dict(zip(call.params, call.args))
    ens, q = c.ensures, post
    taken = _names(c.requires, c.ensures, post, *call.args)
    frame: list[Formula] = []
    for v in c.modifies:
        v2 = fresh_name(f"{v}#", taken)
        taken.add(v2)
        if v in vector_names(ens) | vector_names(q) | vector_names(c.requires):
            frame.append(Cmp("=", VLen(v2), VLen(v)))
        ens = substitute(ens, v, TVar(v2))
        q = substitute(q, v, TVar(v2))
    req = substitute_many(c.requires, binding)
    ens = substitute_many(ens, binding)
    return conj([req, Implies(conj([ens] + frame), q)])


def wp(stmts: Sequence[Union[Expr, Stmt]], post: Formula,
       translator: Optional[Translator] = None) -> Formula:
    """Weakest precondition of a straight-line sequence (right-to-left substitution)."""
    q = post
    for s in reversed(_as_stmts(stmts, translator)):
        if isinstance(s, Assign):
            q = substitute(q, s.target, s.value)
        elif isinstance(s, Check):
            q = conj([s.formula, q])
        else:
            q = call_wp(s, q)
    return q


# ---------------------------------------------------------------------------
# forward dragging


@dataclass
class DragPoint:
    label: str
    formula: Formula
    note: str = ""
    exact: bool = True
    statement: Optional[str] = None
    pos: Optional[Pos] = None

    def to_json(self) -> dict:
        return {
            "point": self.label,
            "statement": self.statement,
            "assertion": show(self.formula),
            "note": self.note,
            "exact": self.exact,
        }


@dataclass
class DragTrace:
    points: list[DragPoint]

    def __len__(self) -> int:
        return len(self.points)

    def text(self) -> str:
        lines = []
        for p in self.points:
            if p.statement is not None:
                lines.append(p.statement)
            mark = "" if p.exact else "   (inexact, display only)"
            note = f"   [{p.note}]" if p.note else ""
            lines.append(f";; {show(p.formula)}{note}{mark}")
        return "\n".join(lines)

    def to_json(self) -> list:
        return [p.to_json() for p in self.points]


def _solve_for(x: str, f: Formula, s: Simplifier) -> Optional[Term]:
    lit = s.literal(f)
    if not (isinstance(lit, Lit) and lit.op == "="):
        return None
    m = (TVar(x),)
    coef = lit.poly.terms.get(m)
    if coef not in (1, -1):
        return None
    rest = Poly({mm: c for mm, c in lit.poly.terms.items() if mm != m})
    if x in _names(to_term(rest)):
        return None
    return to_term((Poly.const(lit.c) - rest).scale(coef))


def _sp_assign(p: Formula, s: Assign, mode: str) -> tuple[Formula, str, bool]:
    x, e = s.target, s.value
    plain = Simplifier(mode)
    if x not in free_vars(p) and x not in free_vars(e):
        return conj([p, Cmp("=", TVar(x), e)]), "", True
    x0 = fresh_name(f"{x}0", _names(p, e) | {x})
    p0 = substitute(p, x, TVar(x0))
    e0 = substitute(e, x, TVar(x0))
    ep = to_poly(plain.term(e0))
    coef = ep.terms.get((TVar(x0),))
    rest = Poly({m: c for m, c in ep.terms.items() if m != (TVar(x0),)})
    if coef in (1, -1) and x0 not in _names(to_term(rest)):
        back = to_term((Poly.atom(TVar(x)) - rest).scale(coef))
        return substitute(p0, x0, back), f"{x}0 = {show(back)}", True
    parts = conjuncts(p0)
    for i, c in enumerate(parts):
        t = _solve_for(x0, c, plain)
        if t is not None:
            others = [substitute(d, x0, t) for j, d in enumerate(parts) if j != i]
            return conj(others + [Cmp("=", TVar(x), substitute(e0, x0, t))]), f"{x}0 = {show(t)}", True
    return conj([p0, Cmp("=", TVar(x), e0)]), f"{x}0 is the value of {x} before this statement", False


def _sp_call(p: Formula, s: Call) -> tuple[Formula, str, bool]:
    binding = dict(zip(s.params, s.args))
    kept = [c for c in conjuncts(p) if not (free_vars(c) & set(s.contract.modifies))]
    ens = substitute_many(s.contract.ensures, binding)
    mods = ", ".join(s.contract.modifies)
    note = f"{mods} changed by {s.name}; ensures assumed" if mods else f"ensures of {s.name} assumed"
    return conj(kept + [ens]), note, not s.contract.modifies


def sp_trace(pre: Formula, stmts: Sequence[Union[Expr, Stmt]], mode: str = "lenient",
             translator: Optional[Translator] = None) -> DragTrace:
    """Assertions before the first statement and after each one (for display)."""
    body = _as_stmts(stmts, translator)
    cur = Simplifier(mode).formula(pre)
    points = [DragPoint("before", cur, "invariant and driver")]
    for n, s in enumerate(body, 1):
        if isinstance(s, Assign):
            nxt, note, exact = _sp_assign(cur, s, mode)
        elif isinstance(s, Check):
            nxt, note, exact = conj([cur, s.formula]), "assertion", True
        else:
            nxt, note, exact = _sp_call(cur, s)
        cur = Simplifier(mode, nxt).formula(nxt)
        points.append(DragPoint(f"after {n}", cur, note, exact and points[-1].exact, s.source, s.pos))
    return DragTrace(points)


# ---------------------------------------------------------------------------
# verification conditions


@dataclass
class VC:
    origin: str
    hypothesis: Formula
    goal: Formula
    verdict: str = "unknown"
    conjunct: Optional[Formula] = None
    residual: Formula = TRUE
    counterexample: Optional[dict] = None
    statement: Optional[int] = None
    statement_pos: Optional[Pos] = None
    statement_text: Optional[str] = None
    side_conditions: list = field(default_factory=list)
    simplified_goal: Optional[Formula] = None

    @property
    def label(self) -> str:
        if self.conjunct is not None:
            return f"{self.origin} of {show(self.conjunct)}"
        return self.origin

    def to_json(self) -> dict:
        return {
            "origin": self.origin,
            "conjunct": show(self.conjunct) if self.conjunct is not None else None,
            "verdict": self.verdict,
            "hypothesis": show(self.hypothesis),
            "goal": show(self.simplified_goal if self.simplified_goal is not None else self.goal),
            "residual": show(self.residual) if self.verdict != "proved" else None,
            "statement": self.statement,
            "statement_position": str(self.statement_pos) if self.statement_pos else None,
            "counterexample": dict(sorted(self.counterexample.items())) if self.counterexample else None,
            "side_conditions": [show(c) for c in self.side_conditions],
        }


@dataclass
class VerifyReport:
    function: Optional[str]
    pos: Optional[Pos]
    mode: str
    vcs: list[VC] = field(default_factory=list)
    drag: Optional[DragTrace] = None
    advisories: list[str] = field(default_factory=list)
    unsupported: Optional[str] = None
    kind: str = "while"

    @property
    def checkable(self) -> bool:
        return self.unsupported is None

    @property
    def verified(self) -> bool:
        return self.checkable and all(v.verdict == "proved" for v in self.vcs)

    def by_origin(self, origin: str) -> list[VC]:
        return [v for v in self.vcs if v.origin == origin]

    def verdict(self, origin: str) -> Optional[str]:
        vs = self.by_origin(origin)
        if not vs:
            return None
        for worst in ("refuted", "unknown"):
            if any(v.verdict == worst for v in vs):
                return worst
        return "proved"

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "position": str(self.pos) if self.pos else None,
            "kind": self.kind,
            "mode": self.mode,
            "checkable": self.checkable,
            "unsupported": self.unsupported,
            "verified": self.verified,
            "vcs": [v.to_json() for v in self.vcs],
            "drag": self.drag.to_json() if self.drag else [],
            "advisories": list(self.advisories),
        }

    def text(self) -> str:
        where = f" at {self.pos}" if self.pos else ""
        head = f"loop in {self.function}{where} ({self.mode} mode)"
        if not self.checkable:
            return f"{head}: not checkable: {self.unsupported}"
        lines = [head]
        for v in self.vcs:
            lines.append(f"  {v.label}: {v.verdict}")
            if v.verdict != "proved":
                if v.statement is not None:
                    at = f" at {v.statement_pos}" if v.statement_pos else ""
                    lines.append(f"    fails after statement {v.statement}{at}: {v.statement_text}")
                lines.append(f"    residual: {show(v.residual)}")
                if v.counterexample:
                    store = ", ".join(f"{k}={x}" for k, x in sorted(v.counterexample.items()))
                    lines.append(f"    counterexample: {store}")
        for a in self.advisories:
            lines.append(f"  advisory: {a}")
        return "\n".join(lines)


def _run_vc(vc: VC, mode: str) -> VC:
    res: EntailResult = check_entailment(vc.hypothesis, vc.goal, mode)
    vc.verdict = res.verdict
    vc.residual = res.residual
    vc.counterexample = res.counterexample
    vc.side_conditions = res.side_conditions
    vc.simplified_goal = res.goal
    return vc


def _assigned(s: Stmt) -> set[str]:
    if isinstance(s, Assign):
        return {s.target}
    if isinstance(s, Call):
        return set(s.contract.modifies)
    return set()


def _pinpoint(vc: VC, body: list[Stmt], drag: DragTrace, mode: str) -> None:
    names = free_vars(vc.conjunct)
    for idx in range(len(body), 0, -1):
        if _assigned(body[idx - 1]) & names:
            vc.statement = idx
            vc.statement_pos = body[idx - 1].pos
            vc.statement_text = body[idx - 1].source
            break
    final = drag.points[-1].formula
    plain = Simplifier(mode)
    target = vc.conjunct
    for x in sorted(set().union(*(_assigned(s) for s in body)) & names):
        for c in conjuncts(final):
            t = _solve_for(x, c, plain)
            if t is not None and x not in free_vars(t):
                target = substitute(target, x, t)
                break
    residual = Simplifier(mode).formula(target)
    if not isinstance(residual, TrueF):
        vc.residual = residual


def verify_loop(init: Sequence[Union[Expr, Stmt]], loop: While, post: Formula = TRUE,
                mode: str = "lenient", hypothesis: Formula = TRUE,
                translator: Optional[Translator] = None, function: Optional[str] = None) -> VerifyReport:
    """Check initialization, preservation, postcondition and variant conditions of ``loop``."""
    tr = translator or Translator()
    report = VerifyReport(function, loop.pos, mode)
    try:
        driver = tr.formula(loop.driver)
        body = tr.stmts(loop.body)
        init_stmts = _as_stmts(init, tr)
    except Unsupported as exc:
        report.unsupported = exc.message
        return report
    inv = loop.invariant
    report.drag = sp_trace(conj([inv, driver]), body, mode)
    vcs = [VC("initialization", hypothesis, wp(init_stmts, inv))]
    for c in conjuncts(inv) or [TRUE]:
        vcs.append(VC("preservation", conj([inv, driver]), wp(body, c), conjunct=c))
    vcs.append(VC("postcondition", conj([inv, Not(driver)]), post))
    if loop.variant is not None:
        v = loop.variant
        snap = fresh_name("v@pre", _names(inv, v, driver))
        vcs.append(VC(
            "variant-decrease",
            conj([inv, driver, Cmp("=", TVar(snap), v)]),
            wp(body, Cmp("<", v, TVar(snap))),
        ))
        vcs.append(VC("variant-bounded", conj([inv, driver]), Cmp(">=", v, IntConst(0))))
    for vc in vcs:
        _run_vc(vc, mode)
        if vc.origin == "preservation" and vc.verdict != "proved":
            _pinpoint(vc, body, report.drag, mode)
    report.vcs = vcs
    if mode == "lenient":
        assumed: list[Formula] = []
        for vc in vcs:
            if vc.verdict == "proved":
                for c in vc.side_conditions:
                    if c not in assumed:
                        assumed.append(c)
        for c in assumed:
            report.advisories.append(
                f"a product was extended by one factor assuming {show(c)}, which the invariant "
                f"does not state; add it to the invariant or check with --mode sound"
            )
    return report


# ---------------------------------------------------------------------------
# finding loops in a program


@dataclass
class LoopSite:
    function: str
    toplevel: str
    loop: Optional[While]
    init: list[Expr]
    post: Formula
    hypothesis: Formula
    kind: str = "while"
    error: Optional[str] = None
    pos: Optional[Pos] = None


def program_translator(p: Program) -> Translator:
    functions: dict[str, FunDef] = {}
    contracts: dict[str, Contract] = {}

    def visit_defs(defs):
        for d in defs:
            if isinstance(d, FunDef):
                functions.setdefault(d.name, d)
            elif isinstance(d, Contract):
                contracts.setdefault(d.name, d)
            for e in def_exprs(d):
                visit_expr(e)

    def visit_expr(e):
        for x in walk(e):
            if isinstance(x, Local):
                for d in x.defs:
                    if isinstance(d, FunDef):
                        functions.setdefault(d.name, d)
                    elif isinstance(d, Contract):
                        contracts.setdefault(d.name, d)

    visit_defs(p.defs)
    return Translator(functions, contracts)


def find_loops(p: Program) -> list[LoopSite]:
    """Every annotated ``while`` and every state-based helper with a contract."""
    sites: list[LoopSite] = []
    top_contracts = {d.name: d for d in p.defs if isinstance(d, Contract)}

    def requires_of(chain: list[tuple[str, dict]]) -> Formula:
        parts = []
        for name, contracts in reversed(chain):
            c = contracts.get(name)
            if c is not None:
                parts.append(c.requires)
        return conj(parts)

    def visit(e: Expr, chain, top: str, parent: Optional[Begin]):
        if isinstance(e, While):
            init: list[Expr] = []
            post: Formula = TRUE
            if parent is not None:
                i = next(k for k, s in enumerate(parent.stmts) if s is e)
                init = list(parent.stmts[:i])
                nxt = parent.stmts[i + 1] if i + 1 < len(parent.stmts) else None
                if isinstance(nxt, Assert):
                    post = nxt.formula
            sites.append(LoopSite(chain[-1][0], top, e, init, post, requires_of(chain), pos=e.pos))
        if isinstance(e, Local):
            scope = {d.name: d for d in e.defs if isinstance(d, Contract)}
            for d in e.defs:
                if isinstance(d, FunDef):
                    _state_helper(e, d, chain + [(d.name, scope)], top)
                    visit(d.body, chain + [(d.name, scope)], top, None)
                else:
                    for x in def_exprs(d):
                        visit(x, chain, top, None)
            visit(e.body, chain, top, None)
            return
        for c in map_children_list(e):
            visit(c, chain, top, e if isinstance(e, Begin) else None)

    def _state_helper(local: Local, d: FunDef, chain, top: str):
        contract = next((c for c in local.defs if isinstance(c, Contract) and c.name == d.name), None)
        if d.params or contract is None or isinstance(contract.requires, TrueF):
            return
        if not calls_to(d.body, d.name):
            return
        # the invariant is the helper's own requires; the hypothesis comes from outside it
        outer = requires_of(chain[:-1])
        try:
            plan = plan_loop(local, d)
        except TransformError as exc:
            sites.append(LoopSite(d.name, top, None, [], TRUE, outer, "state", exc.message, d.pos))
            return
        loop = While(plan.driver, plan.invariant, plan.variant, plan.body, d.pos)
        init: list[Expr] = []
        body = local.body
        if isinstance(body, Begin) and isinstance(body.stmts[-1], App) and body.stmts[-1].op == d.name:
            init = list(body.stmts[:-1])
        sites.append(LoopSite(d.name, top, loop, init, TRUE, outer, "state", pos=d.pos))

    for d in p.defs:
        if isinstance(d, FunDef):
            visit(d.body, [(d.name, top_contracts)], d.name, None)
    return sites


def check_program(p: Program, function: Optional[str] = None, mode: str = "lenient") -> list[VerifyReport]:
    tr = program_translator(p)
    reports = []
    for site in find_loops(p):
        if function is not None and function not in (site.function, site.toplevel):
            continue
        if site.error:
            r = VerifyReport(site.function, site.pos, mode, unsupported=site.error, kind=site.kind)
        else:
            r = verify_loop(site.init, site.loop, site.post, mode, site.hypothesis, tr, site.function)
            r.kind = site.kind
        reports.append(r)
    return reports
