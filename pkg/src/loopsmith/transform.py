"""Program-to-program passes: tail analysis, registerization and while-ification."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

from .printer import print_expr
from .syntax import (
    App, Assert, Begin, Cond, Contract, Definition, Expr, FunDef, If,
    Local, Pos, Program, SetBang, TRUE, TVar, Var, VarDef, VoidLit, While,
    def_exprs, def_name, expr_names, fresh_name, map_children, map_def,
    substitute_many, walk,
)


class TransformError(Exception):
    def __init__(self, message: str, pos: Optional[Pos] = None, branch: Optional[str] = None):
        self.message = message
        self.pos = pos
        self.branch = branch
        super().__init__(f"{pos}: {message}" if pos else message)


# ---------------------------------------------------------------------------
# locating functions


def _iter_fundefs(defs):
    for d in defs:
        if isinstance(d, FunDef):
            yield d
        for e in def_exprs(d):
            for x in walk(e):
                if isinstance(x, Local):
                    for inner in x.defs:
                        if isinstance(inner, FunDef):
                            yield inner


def find_function(p: Program, name: str) -> FunDef:
    for d in _iter_fundefs(p.defs):
        if d.name == name:
            return d
    raise TransformError(f"unknown function {name}")


def program_names(p: Program) -> set[str]:
    out: set[str] = set()
    for d in p.defs:
        n = def_name(d)
        if n:
            out.add(n)
        if isinstance(d, FunDef):
            out.update(d.params)
        for e in def_exprs(d):
            out |= expr_names(e)
    return out


def _rewrite_local(p: Program, helper: str, fn: Callable[[Local], Expr]) -> Optional[Program]:
    """Replace the first ``local`` that defines ``helper`` by ``fn(local)``."""
    done = [False]

    def visit(e: Expr) -> Expr:
        if done[0]:
            return e
        if isinstance(e, Local) and any(isinstance(d, FunDef) and d.name == helper for d in e.defs):
            done[0] = True
            return fn(e)
        return map_children(e, visit)

    defs = tuple(map_def(d, visit) for d in p.defs)
    return Program(defs) if done[0] else None


# ---------------------------------------------------------------------------
# tail analysis


@dataclass(frozen=True)
class CallSite:
    pos: Optional[Pos]
    tail: bool
    delayed: Optional[str] = None


@dataclass(frozen=True)
class TailAnalysis:
    function: str
    sites: tuple[CallSite, ...]

    @property
    def iterative(self) -> bool:
        return all(s.tail for s in self.sites)

    @property
    def delayed_ops(self) -> tuple[str, ...]:
        seen: list[str] = []
        for s in self.sites:
            if s.delayed and s.delayed not in seen:
                seen.append(s.delayed)
        return tuple(seen)


def analyze_tail(p: Program, fname: str) -> TailAnalysis:
    f = find_function(p, fname)
    sites: list[CallSite] = []

    def go(e: Expr, tail: bool, wrapper: Optional[str]) -> None:
        if isinstance(e, App):
            if e.op == fname:
                sites.append(CallSite(e.pos, tail, None if tail else wrapper))
            for a in e.args:
                go(a, False, e.op)
        elif isinstance(e, If):
            go(e.test, False, "if")
            go(e.then, tail, wrapper)
            go(e.orelse, tail, wrapper)
        elif isinstance(e, Cond):
            for t, b in e.clauses:
                go(t, False, "cond")
                go(b, tail, wrapper)
            if e.orelse is not None:
                go(e.orelse, tail, wrapper)
        elif isinstance(e, Local):
            for d in e.defs:
                for x in def_exprs(d):
                    go(x, False, "local")
            go(e.body, tail, wrapper)
        elif isinstance(e, Begin):
            for s in e.stmts[:-1]:
                go(s, False, "begin")
            go(e.stmts[-1], tail, wrapper)
        else:
            form = {SetBang: "set!", While: "while"}.get(type(e), type(e).__name__)
            for c in map_children_list(e):
                go(c, False, form)

    go(f.body, True, None)
    return TailAnalysis(fname, tuple(sites))


def map_children_list(e: Expr) -> list[Expr]:
    out: list[Expr] = []
    map_children(e, lambda c: out.append(c) or c)
    return out


# ---------------------------------------------------------------------------
# registerization


@dataclass(frozen=True)
class StateVarPlan:
    helper: str
    new_name: str
    state_vars: tuple[tuple[str, str], ...]  # (state variable, originating parameter)
    initial: tuple[tuple[Expr, ...], ...]  # argument lists of the non-recursive call sites
    updates: tuple[tuple[SetBang, ...], ...]  # one mutation sequence per recursive call
    temporaries: tuple[str, ...] = ()


Ordering = Union[str, Sequence[str]]


def rename_expr(e: Expr, mapping: dict[str, str]) -> Expr:
    """Rename free identifiers (variables, called functions, ``set!`` targets)."""
    if not mapping:
        return e
    if isinstance(e, Var) and e.name in mapping:
        return replace(e, name=mapping[e.name])
    if isinstance(e, App) and e.op in mapping:
        e = replace(e, op=mapping[e.op])
    elif isinstance(e, SetBang) and e.target in mapping:
        e = replace(e, target=mapping[e.target])
    elif isinstance(e, Local):
        bound = {def_name(d) for d in e.defs}
        inner = {k: v for k, v in mapping.items() if k not in bound}
        return replace(
            e,
            defs=tuple(_rename_def(d, inner) for d in e.defs),
            body=rename_expr(e.body, inner),
        )
    elif isinstance(e, While):
        e = replace(e, invariant=_rename_logic(e.invariant, mapping),
                    variant=None if e.variant is None else _rename_logic(e.variant, mapping))
    elif isinstance(e, Assert):
        e = replace(e, formula=_rename_logic(e.formula, mapping))
    return map_children(e, lambda c: rename_expr(c, mapping))


def _rename_logic(x, mapping):
    return substitute_many(x, {k: TVar(v) for k, v in mapping.items()})


def _rename_def(d: Definition, mapping: dict[str, str]) -> Definition:
    if isinstance(d, FunDef):
        inner = {k: v for k, v in mapping.items() if k not in d.params}
        return replace(d, body=rename_expr(d.body, inner))
    if isinstance(d, VarDef):
        return replace(d, init=rename_expr(d.init, mapping))
    if isinstance(d, Contract):
        return replace(
            d,
            name=mapping.get(d.name, d.name),
            requires=_rename_logic(d.requires, mapping),
            ensures=_rename_logic(d.ensures, mapping),
            variant=None if d.variant is None else _rename_logic(d.variant, mapping),
            modifies=tuple(mapping.get(v, v) for v in d.modifies),
        )
    return map_def(d, lambda e: rename_expr(e, mapping))


def _renamed(name: str, old: str, new: str, avoid: set[str]) -> str:
    base = name[: -len(old)] + new if name.endswith(old) else f"{name}{new}"
    return fresh_name(base, avoid)


def _order_updates(
    params: tuple[str, ...], args: tuple[Expr, ...], ordering: Ordering, avoid: set[str]
) -> tuple[list[SetBang], list[str]]:
    pairs = [(p, a) for p, a in zip(params, args) if not (isinstance(a, Var) and a.name == p)]
    if ordering == "naive":
        return [SetBang(p, a) for p, a in pairs], []
    if ordering == "safe":
        return _safe_order(pairs, avoid)
    order = list(ordering)
    if sorted(order) != sorted(params):
        raise TransformError(f"ordering {order} is not a permutation of the parameters {list(params)}")
    updates = dict(pairs)
    return [SetBang(p, updates[p]) for p in order if p in updates], []


def _safe_order(pairs, avoid: set[str]) -> tuple[list[SetBang], list[str]]:
    """Order updates so each reads only unmutated variables, breaking cycles with temporaries."""
    pending = list(pairs)
    out: list[SetBang] = []
    temps: list[str] = []
    while pending:
        for i, (p, a) in enumerate(pending):
            if not any(p in expr_names(b) for q, b in pending if q != p):
                out.append(SetBang(p, a))
                del pending[i]
                break
        else:
            p, _ = pending[0]
            tmp = fresh_name(f"{p}-old", avoid | set(temps))
            temps.append(tmp)
            out.append(SetBang(tmp, Var(p)))
            pending = [(q, rename_expr(b, {p: tmp})) for q, b in pending]
    return out, temps


def _signature_types(f: FunDef) -> list[Optional[str]]:
    sig = f.signature or ""
    if "->" not in sig and "→" not in sig:
        return [None] * len(f.params)
    lhs = sig.replace("→", "->").split("->")[0]
    if ":" in lhs:
        lhs = lhs.split(":", 1)[1]
    words = lhs.split()
    return words if len(words) == len(f.params) else [None] * len(f.params)


def _signature_result(f: FunDef, name: str) -> Optional[str]:
    sig = (f.signature or "").replace("→", "->")
    if "->" not in sig:
        return None
    return f"{name}: -> {sig.rsplit('->', 1)[1].strip()}"


def registerize(p: Program, fname: str, ordering: Ordering = "safe") -> Program:
    """Turn the parameters of the tail-recursive ``fname`` into local state variables."""
    program, _ = registerize_plan(p, fname, ordering)
    return program


def registerize_plan(p: Program, fname: str, ordering: Ordering = "safe") -> tuple[Program, StateVarPlan]:
    if not (ordering in ("safe", "naive") or not isinstance(ordering, str)):
        raise TransformError(f"unknown ordering {ordering!r}")
    helper = find_function(p, fname)
    analysis = analyze_tail(p, fname)
    if not analysis.iterative:
        ops = ", ".join(analysis.delayed_ops)
        raise TransformError(f"{fname} is not tail recursive (delayed operation: {ops})", helper.pos)
    if not helper.params:
        raise TransformError(f"{fname} has no parameters to registerize", helper.pos)

    avoid = program_names(p)
    if any(isinstance(d, FunDef) and d.name == fname for d in p.defs):
        return _registerize_toplevel(p, helper, ordering, avoid)

    outside = _names_outside(p, helper)
    new_name = _renamed(fname, "-accum", "-state", avoid)
    rename: dict[str, str] = {}
    for prm in helper.params:
        if prm in outside:
            rename[prm] = fresh_name(prm, avoid | set(rename.values()))
    state = tuple((rename.get(prm, prm), prm) for prm in helper.params)
    plan_box: list[StateVarPlan] = []

    def rewrite(local: Local) -> Expr:
        new_local, plan = _registerize_local(local, helper, new_name, state, ordering, avoid)
        plan_box.append(plan)
        return new_local

    out = _rewrite_local(p, fname, rewrite)
    assert out is not None
    return out, plan_box[0]


def _names_outside(p: Program, helper: FunDef) -> set[str]:
    """Names used anywhere except inside the helper's own body and parameter list."""
    def strip(e: Expr) -> Expr:
        if isinstance(e, Local):
            defs = tuple(
                replace(d, params=(), body=VoidLit()) if d is helper else map_def(d, strip) for d in e.defs
            )
            return replace(e, defs=defs, body=strip(e.body))
        return map_children(e, strip)

    stripped = Program(tuple(map_def(d, strip) for d in p.defs))
    return program_names(stripped)


def _registerize_local(local, helper: FunDef, new_name: str, state, ordering, avoid):
    params = helper.params
    rename = {prm: sv for sv, prm in state if sv != prm}
    updates: list[tuple[SetBang, ...]] = []
    temps: list[str] = []

    def recursive(e: Expr) -> Expr:
        if isinstance(e, App) and e.op == helper.name:
            args = tuple(recursive(a) for a in e.args)
            if len(args) != len(params):
                raise TransformError(f"{helper.name}: arity mismatch in recursive call", e.pos)
            sets, tmp = _order_updates(tuple(rename.get(q, q) for q in params), args,
                                       _rename_order(ordering, rename), avoid | set(temps))
            temps.extend(tmp)
            updates.append(tuple(sets))
            return Begin(tuple(sets) + (App(new_name, ()),), e.pos) if sets else App(new_name, (), e.pos)
        return map_children(e, recursive)

    body = recursive(rename_expr(helper.body, rename))
    initial: list[tuple[Expr, ...]] = []

    def initial_call(e: Expr) -> Expr:
        e = map_children(e, initial_call)
        if isinstance(e, App) and e.op == helper.name:
            initial.append(e.args)
            sets = tuple(SetBang(sv, a) for (sv, _), a in zip(state, e.args))
            return Begin(sets + (App(new_name, ()),), e.pos)
        return e

    types = _signature_types(helper)
    decls = tuple(
        VarDef(sv, VoidLit(), type_note=t) for (sv, _), t in zip(state, types)
    ) + tuple(VarDef(t, VoidLit()) for t in temps)
    new_helper = FunDef(
        new_name, (), body,
        signature=_signature_result(helper, new_name), purpose=helper.purpose,
        effect=helper.effect, notes=helper.notes,
    )
    defs: list[Definition] = []
    for d in local.defs:
        if d is helper:
            defs.extend(decls)
            defs.append(new_helper)
        elif isinstance(d, Contract) and d.name == helper.name:
            defs.append(_rename_def(d, {**rename, helper.name: new_name}))
        else:
            defs.append(map_def(d, initial_call))
    new_local = replace(local, defs=tuple(defs), body=initial_call(local.body))
    plan = StateVarPlan(helper.name, new_name, state, tuple(initial), tuple(updates), tuple(temps))
    return new_local, plan


def _rename_order(ordering: Ordering, rename: dict[str, str]) -> Ordering:
    if isinstance(ordering, str):
        return ordering
    return [rename.get(o, o) for o in ordering]


def _registerize_toplevel(p: Program, helper: FunDef, ordering, avoid):
    """A top-level helper keeps its interface and becomes state-based internally."""
    state_names = []
    taken = set(avoid)
    for prm in helper.params:
        sv = fresh_name(prm, taken)
        taken.add(sv)
        state_names.append(sv)
    inner = helper
    local = Local(
        (inner,) + tuple(
            d for d in p.defs if isinstance(d, Contract) and d.name == helper.name
        ),
        App(helper.name, tuple(Var(q) for q in helper.params)),
    )
    wrapper = replace(helper, body=local)
    defs = tuple(
        wrapper if d is helper else d
        for d in p.defs
        if not (isinstance(d, Contract) and d.name == helper.name)
    )
    wrapped = Program(defs)
    new_name = _renamed(helper.name, "-accum", "-state", taken)
    state = tuple(zip(state_names, helper.params))
    box: list[StateVarPlan] = []

    def rewrite(loc: Local) -> Expr:
        new_local, plan = _registerize_local(loc, inner, new_name, state, ordering, taken)
        box.append(plan)
        return new_local

    out = _rewrite_local(wrapped, helper.name, rewrite)
    assert out is not None
    return out, box[0]


# ---------------------------------------------------------------------------
# while-ification


@dataclass(frozen=True)
class LoopPlan:
    helper: str
    driver: Expr
    body: tuple[Expr, ...]
    result: Expr
    invariant: object
    variant: object
    init: tuple[SetBang, ...] = ()


def _negate(c: Expr) -> Expr:
    if isinstance(c, App) and c.op == "not" and len(c.args) == 1:
        return c.args[0]
    return App("not", (c,))


def derive_driver(halting: Sequence[Expr]) -> Expr:
    """Loop condition that holds exactly when none of the halting conditions does."""
    halting = list(halting)
    if not halting:
        raise TransformError("derive_driver needs at least one halting condition")
    if len(halting) == 1:
        return _negate(halting[0])
    return App("not", (App("or", tuple(halting)),))


def _describe(e: Expr) -> str:
    return print_expr(e).splitlines()[0]


def plan_loop(local: Local, helper: FunDef) -> LoopPlan:
    if helper.params:
        raise TransformError(f"{helper.name} still has parameters; registerize it first", helper.pos)
    body = helper.body
    if isinstance(body, If):
        clauses = [(body.test, body.then)]
        orelse = body.orelse
    elif isinstance(body, Cond):
        clauses = list(body.clauses)
        orelse = body.orelse
    else:
        raise TransformError(f"{helper.name}: body must be a cond or if", helper.pos)

    def is_rec(e: Expr) -> bool:
        return any(isinstance(x, App) and x.op == helper.name for x in walk(e))

    branches = [(t, b, False) for t, b in clauses]
    if orelse is not None:
        branches.append((None, orelse, True))
    rec = [(t, b, is_else) for t, b, is_else in branches if is_rec(b)]
    if not rec:
        raise TransformError(f"{helper.name}: no recursive branch", helper.pos)
    if len(rec) > 1:
        t, b, _ = rec[1]
        raise TransformError(
            f"{helper.name}: more than one recursive branch", b.pos, branch=_describe(b)
        )
    for t, _, _ in branches:
        if t is not None and is_rec(t):
            raise TransformError(f"{helper.name}: recursive call in a branch test", t.pos,
                                 branch=_describe(t))
    rtest, rbody, rec_else = rec[0]
    steps = _loop_steps(helper.name, rbody)

    idx = next(i for i, (t, b, e) in enumerate(branches) if b is rbody)
    before = branches[:idx]
    after = branches[idx + 1:]
    if rec_else:
        halting = [t for t, _, _ in before]
        base = before
        last_else = None
    else:
        if len(after) != 1 or not after[0][2]:
            raise TransformError(
                f"{helper.name}: the recursive branch must be the else branch or the last test before it",
                rbody.pos, branch=_describe(rbody),
            )
        halting = [t for t, _, _ in before] + [_negate(rtest)]
        base = before
        last_else = after[0][1]
    if not halting:
        raise TransformError(f"{helper.name}: recursion never halts", helper.pos)
    result = _result_expr(base, last_else)
    contract = next(
        (d for d in local.defs if isinstance(d, Contract) and d.name == helper.name), None
    )
    invariant = contract.requires if contract else TRUE
    variant = contract.variant if contract else None
    return LoopPlan(helper.name, derive_driver(halting), steps, result, invariant, variant)


def _loop_steps(name: str, body: Expr) -> tuple[Expr, ...]:
    if isinstance(body, App) and body.op == name:
        return ()
    if isinstance(body, Begin) and isinstance(body.stmts[-1], App) and body.stmts[-1].op == name:
        stmts = body.stmts[:-1]
        if not body.stmts[-1].args and not any(
            isinstance(x, App) and x.op == name for s in stmts for x in walk(s)
        ):
            return stmts
    raise TransformError(
        f"{name}: recursive branch must be mutations followed by the parameterless self-call",
        body.pos, branch=_describe(body),
    )


def _result_expr(base, last_else: Optional[Expr]) -> Expr:
    if last_else is None:
        if len(base) == 1:
            return base[0][1]
        clauses = tuple((t, b) for t, b, _ in base[:-1])
        return Cond(clauses, base[-1][1])
    if not base:
        return last_else
    return Cond(tuple((t, b) for t, b, _ in base), last_else)


def whileify(p: Program, fname: str) -> Program:
    """Replace the parameterless tail-recursive helper ``fname`` by a ``while`` loop."""
    helper = find_function(p, fname)
    if any(d is helper for d in p.defs):
        raise TransformError(f"{fname} is top-level; registerize it first", helper.pos)
    avoid = program_names(p)
    new_name = _renamed(fname, "-state", "-while", avoid)

    def rewrite(local: Local) -> Expr:
        plan = plan_loop(local, helper)
        init, local_body = _hoist_init(local.body, fname, new_name)
        loop = While(plan.driver, plan.invariant, plan.variant, plan.body)
        fn = FunDef(
            new_name, (), Begin(init + (loop, plan.result)),
            signature=(helper.signature or "").replace(fname, new_name) or None,
            purpose=helper.purpose, effect=helper.effect, notes=helper.notes,
        )
        defs: list[Definition] = []
        for d in local.defs:
            if d is helper:
                defs.append(fn)
            elif isinstance(d, Contract) and d.name == fname:
                continue  # carried onto the loop
            else:
                defs.append(map_def(d, lambda e: rename_expr(e, {fname: new_name})))
        return replace(local, defs=tuple(defs), body=local_body)

    out = _rewrite_local(p, fname, rewrite)
    assert out is not None
    return out


def _hoist_init(body: Expr, fname: str, new_name: str) -> tuple[tuple[SetBang, ...], Expr]:
    """Move a lone ``(begin (set! ...) ... (fname))`` initialization into the loop function."""
    calls = [x for x in walk(body) if isinstance(x, App) and x.op == fname]
    if (
        len(calls) == 1
        and isinstance(body, Begin)
        and body.stmts[-1] is calls[0]
        and all(isinstance(s, SetBang) for s in body.stmts[:-1])
    ):
        return tuple(body.stmts[:-1]), App(new_name, (), body.pos)
    return (), rename_expr(body, {fname: new_name})


def to_state(p: Program, fname: str, ordering: Ordering = "safe") -> tuple[Program, str]:
    program, plan = registerize_plan(p, fname, ordering)
    return program, plan.new_name


def to_while(p: Program, fname: str, ordering: Ordering = "safe") -> tuple[Program, str]:
    """Registerize (unless already parameterless) then whileify; returns the loop function name."""
    helper = find_function(p, fname)
    if helper.params or any(d is helper for d in p.defs):
        p, fname = to_state(p, fname, ordering)
    avoid = program_names(p)
    new_name = _renamed(fname, "-state", "-while", avoid)
    return whileify(p, fname), new_name


def parse_ordering(text: str) -> Ordering:
    if text in ("safe", "naive"):
        return text
    names = [t.strip() for t in text.split(",") if t.strip()]
    if not names:
        raise TransformError(f"bad ordering {text!r}")
    return names
