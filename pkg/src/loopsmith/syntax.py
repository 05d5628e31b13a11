"""Abstract syntax for programs and for the assertion language.

Programs are built from :class:`Expr` nodes and :class:`Definition` nodes.
Assertions (loop invariants, contracts, ``assert``) are :class:`Formula`
values over integer :class:`Term` values.  Every node is an immutable
dataclass; source positions ride along but never take part in equality.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Optional, Union


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _pos():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class IntConst(Term):
    value: int


@dataclass(frozen=True)
class TVar(Term):
    name: str


@dataclass(frozen=True)
class Add(Term):
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Sub1(Term):
    arg: Term


@dataclass(frozen=True)
class Add1(Term):
    arg: Term


@dataclass(frozen=True)
class BigOp(Term):
    """Bounded product or sum; ``index`` is bound in ``body`` only."""

    index: str
    lo: Term
    hi: Term
    body: Term

    kind = "?"


@dataclass(frozen=True)
class BigProd(BigOp):
    kind = "prod"


@dataclass(frozen=True)
class BigSum(BigOp):
    kind = "sum"


@dataclass(frozen=True)
class VRef(Term):
    vec: str
    idx: Term


@dataclass(frozen=True)
class VLen(Term):
    vec: str


# ---------------------------------------------------------------------------
# Formulas

CMP_OPS = ("=", "<", "<=", ">", ">=")


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Cmp(Formula):
    op: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Implies(Formula):
    hyp: Formula
    concl: Formula


@dataclass(frozen=True)
class SortedRange(Formula):
    """``vec[lo..hi]`` is in non-decreasing order; empty ranges are sorted."""

    vec: str
    lo: Term
    hi: Term


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


TRUE = TrueF()
FALSE = FalseF()


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(p for p in parts if not isinstance(p, TrueF))
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out: list[Formula] = []
        for a in f.args:
            out.extend(conjuncts(a))
        return out
    if isinstance(f, TrueF):
        return []
    return [f]


# ---------------------------------------------------------------------------
# Expressions


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class StrLit(Expr):
    value: str
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class VoidLit(Expr):
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class Var(Expr):
    name: str
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class App(Expr):
    op: str
    args: tuple[Expr, ...]
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class If(Expr):
    test: Expr
    then: Expr
    orelse: Expr
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class Cond(Expr):
    clauses: tuple[tuple[Expr, Expr], ...]
    orelse: Optional[Expr] = None
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class Local(Expr):
    defs: tuple["Definition", ...]
    body: Expr
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class Begin(Expr):
    stmts: tuple[Expr, ...]
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class SetBang(Expr):
    target: str
    rhs: Expr
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class While(Expr):
    driver: Expr
    invariant: Formula
    variant: Optional[Term]
    body: tuple[Expr, ...]
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class VectorLit(Expr):
    elems: tuple[Expr, ...]
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class VectorRef(Expr):
    vec: Expr
    idx: Expr
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class VectorSetBang(Expr):
    vec: Expr
    idx: Expr
    rhs: Expr
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class VectorLength(Expr):
    vec: Expr
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class Assert(Expr):
    formula: Formula
    pos: Optional[Pos] = _pos()


# ---------------------------------------------------------------------------
# Definitions and programs


class Definition:
    __slots__ = ()


@dataclass(frozen=True)
class FunDef(Definition):
    name: str
    params: tuple[str, ...]
    body: Expr
    signature: Optional[str] = None
    purpose: Optional[str] = None
    effect: Optional[str] = None
    notes: tuple[str, ...] = ()
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class VarDef(Definition):
    name: str
    init: Expr
    type_note: Optional[str] = None
    purpose: Optional[str] = None
    notes: tuple[str, ...] = ()
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class CheckExpect(Definition):
    actual: Expr
    expected: Expr
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class Contract(Definition):
    """Declared behaviour of a function, used both at runtime and by the checker.

    ``requires`` must hold on entry, ``ensures`` on exit; ``modifies`` lists
    vectors whose contents the call may change.  For a tail-recursive helper
    ``requires`` doubles as its accumulator invariant and ``variant`` as its
    termination measure.
    """

    name: str
    requires: Formula = TRUE
    ensures: Formula = TRUE
    variant: Optional[Term] = None
    modifies: tuple[str, ...] = ()
    pos: Optional[Pos] = _pos()


@dataclass(frozen=True)
class Program:
    defs: tuple[Definition, ...]

    def functions(self) -> dict[str, FunDef]:
        return {d.name: d for d in self.defs if isinstance(d, FunDef)}

    def tests(self) -> list[CheckExpect]:
        return [d for d in self.defs if isinstance(d, CheckExpect)]


def def_name(d: Definition) -> Optional[str]:
    if isinstance(d, (FunDef, VarDef)):
        return d.name
    return None


# ---------------------------------------------------------------------------
# Free variables and substitution over terms/formulas

Logic = Union[Term, Formula]


def free_vars(x: Logic) -> set[str]:
    """Names occurring free in a term or formula (vector names included)."""
    out: set[str] = set()
    _fv(x, out)
    return out


def _fv(x, out: set[str]) -> None:
    if isinstance(x, IntConst) or isinstance(x, (TrueF, FalseF)):
        return
    if isinstance(x, TVar):
        out.add(x.name)
    elif isinstance(x, (Add, Mul)):
        for a in x.args:
            _fv(a, out)
    elif isinstance(x, Sub):
        _fv(x.left, out)
        _fv(x.right, out)
    elif isinstance(x, (Sub1, Add1)):
        _fv(x.arg, out)
    elif isinstance(x, BigOp):
        _fv(x.lo, out)
        _fv(x.hi, out)
        inner = free_vars(x.body)
        inner.discard(x.index)
        out |= inner
    elif isinstance(x, VRef):
        out.add(x.vec)
        _fv(x.idx, out)
    elif isinstance(x, VLen):
        out.add(x.vec)
    elif isinstance(x, Cmp):
        _fv(x.lhs, out)
        _fv(x.rhs, out)
    elif isinstance(x, (And, Or)):
        for a in x.args:
            _fv(a, out)
    elif isinstance(x, Not):
        _fv(x.arg, out)
    elif isinstance(x, Implies):
        _fv(x.hyp, out)
        _fv(x.concl, out)
    elif isinstance(x, SortedRange):
        out.add(x.vec)
        _fv(x.lo, out)
        _fv(x.hi, out)
    else:
        raise TypeError(f"not a term or formula: {x!r}")


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """``base`` itself if unused, else ``base`` with the smallest free numeric suffix."""
    avoid = set(avoid)
    if base not in avoid:
        return base
    n = 1
    while f"{base}{n}" in avoid:
        n += 1
    return f"{base}{n}"


def substitute(x: Logic, var: str, repl: Term) -> Logic:
    """Capture-avoiding replacement of the free occurrences of ``var`` by ``repl``.

    Vector names (in ``VRef``, ``VLen`` and ``SortedRange``) can only be
    renamed, so ``repl`` must be a :class:`TVar` when ``var`` names a vector.
    """
    if var not in free_vars(x):
        return x
    return _subst(x, var, repl, free_vars(repl))


def _rename_vec(name: str, var: str, repl: Term) -> str:
    if name != var:
        return name
    if not isinstance(repl, TVar):
        raise ValueError(f"vector name {var!r} can only be replaced by a name")
    return repl.name


def _subst(x, var: str, repl: Term, repl_fv: set[str]):
    s = lambda y: _subst(y, var, repl, repl_fv)  # noqa: E731
    if isinstance(x, (IntConst, TrueF, FalseF)):
        return x
    if isinstance(x, TVar):
        return repl if x.name == var else x
    if isinstance(x, Add):
        return Add(tuple(s(a) for a in x.args))
    if isinstance(x, Mul):
        return Mul(tuple(s(a) for a in x.args))
    if isinstance(x, Sub):
        return Sub(s(x.left), s(x.right))
    if isinstance(x, Sub1):
        return Sub1(s(x.arg))
    if isinstance(x, Add1):
        return Add1(s(x.arg))
    if isinstance(x, BigOp):
        lo, hi = s(x.lo), s(x.hi)
        if x.index == var:
            return type(x)(x.index, lo, hi, x.body)
        index, body = x.index, x.body
        if index in repl_fv and var in free_vars(body):
            new = fresh_name(index, repl_fv | free_vars(body) | {var})
            body = _subst(body, index, TVar(new), {new})
            index = new
        return type(x)(index, lo, hi, s(body))
    if isinstance(x, VRef):
        return VRef(_rename_vec(x.vec, var, repl), s(x.idx))
    if isinstance(x, VLen):
        return VLen(_rename_vec(x.vec, var, repl))
    if isinstance(x, Cmp):
        return Cmp(x.op, s(x.lhs), s(x.rhs))
    if isinstance(x, And):
        return And(tuple(s(a) for a in x.args))
    if isinstance(x, Or):
        return Or(tuple(s(a) for a in x.args))
    if isinstance(x, Not):
        return Not(s(x.arg))
    if isinstance(x, Implies):
        return Implies(s(x.hyp), s(x.concl))
    if isinstance(x, SortedRange):
        return SortedRange(_rename_vec(x.vec, var, repl), s(x.lo), s(x.hi))
    raise TypeError(f"not a term or formula: {x!r}")


def substitute_many(x: Logic, mapping: dict[str, Term]) -> Logic:
    """Simultaneous substitution, done through temporaries so targets never interfere."""
    if not mapping:
        return x
    taken = set(free_vars(x)) | set(mapping)
    for t in mapping.values():
        taken |= free_vars(t)
    temps = {}
    for v in mapping:
        tmp = fresh_name(f"{v}%", taken)
        taken.add(tmp)
        temps[v] = tmp
        x = substitute(x, v, TVar(tmp))
    for v, t in mapping.items():
        x = substitute(x, temps[v], t)
    return x


# ---------------------------------------------------------------------------
# Generic traversal of expressions


def children(e: Expr) -> Iterator[Expr]:
    """Immediate sub-expressions, including bodies of local function definitions."""
    if isinstance(e, App):
        yield from e.args
    elif isinstance(e, If):
        yield e.test
        yield e.then
        yield e.orelse
    elif isinstance(e, Cond):
        for t, b in e.clauses:
            yield t
            yield b
        if e.orelse is not None:
            yield e.orelse
    elif isinstance(e, Local):
        for d in e.defs:
            yield from def_exprs(d)
        yield e.body
    elif isinstance(e, Begin):
        yield from e.stmts
    elif isinstance(e, SetBang):
        yield e.rhs
    elif isinstance(e, While):
        yield e.driver
        yield from e.body
    elif isinstance(e, VectorLit):
        yield from e.elems
    elif isinstance(e, VectorRef):
        yield e.vec
        yield e.idx
    elif isinstance(e, VectorSetBang):
        yield e.vec
        yield e.idx
        yield e.rhs
    elif isinstance(e, VectorLength):
        yield e.vec


def def_exprs(d: Definition) -> Iterator[Expr]:
    if isinstance(d, FunDef):
        yield d.body
    elif isinstance(d, VarDef):
        yield d.init
    elif isinstance(d, CheckExpect):
        yield d.actual
        yield d.expected


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    yield e
    for c in children(e):
        yield from walk(c)


def walk_program(p: Program) -> Iterator[Expr]:
    for d in p.defs:
        for e in def_exprs(d):
            yield from walk(e)


def calls_to(e: Expr, name: str) -> list[App]:
    return [x for x in walk(e) if isinstance(x, App) and x.op == name]


def expr_names(e: Expr) -> set[str]:
    """Every identifier mentioned anywhere in ``e`` (over-approximation used for freshness)."""
    out: set[str] = set()
    for x in walk(e):
        if isinstance(x, Var):
            out.add(x.name)
        elif isinstance(x, App):
            out.add(x.op)
        elif isinstance(x, SetBang):
            out.add(x.target)
        elif isinstance(x, Local):
            for d in x.defs:
                n = def_name(d)
                if n:
                    out.add(n)
                if isinstance(d, FunDef):
                    out.update(d.params)
        elif isinstance(x, While):
            out |= free_vars(x.invariant)
            if x.variant is not None:
                out |= free_vars(x.variant)
        elif isinstance(x, Assert):
            out |= free_vars(x.formula)
    return out


def map_children(e: Expr, f: Callable[[Expr], Expr]) -> Expr:
    """Copy of ``e`` with ``f`` applied to each immediate sub-expression."""
    if isinstance(e, App):
        return replace(e, args=tuple(f(a) for a in e.args))
    if isinstance(e, If):
        return replace(e, test=f(e.test), then=f(e.then), orelse=f(e.orelse))
    if isinstance(e, Cond):
        return replace(
            e,
            clauses=tuple((f(t), f(b)) for t, b in e.clauses),
            orelse=None if e.orelse is None else f(e.orelse),
        )
    if isinstance(e, Local):
        return replace(e, defs=tuple(map_def(d, f) for d in e.defs), body=f(e.body))
    if isinstance(e, Begin):
        return replace(e, stmts=tuple(f(s) for s in e.stmts))
    if isinstance(e, SetBang):
        return replace(e, rhs=f(e.rhs))
    if isinstance(e, While):
        return replace(e, driver=f(e.driver), body=tuple(f(s) for s in e.body))
    if isinstance(e, VectorLit):
        return replace(e, elems=tuple(f(x) for x in e.elems))
    if isinstance(e, VectorRef):
        return replace(e, vec=f(e.vec), idx=f(e.idx))
    if isinstance(e, VectorSetBang):
        return replace(e, vec=f(e.vec), idx=f(e.idx), rhs=f(e.rhs))
    if isinstance(e, VectorLength):
        return replace(e, vec=f(e.vec))
    return e


def map_def(d: Definition, f: Callable[[Expr], Expr]) -> Definition:
    if isinstance(d, FunDef):
        return replace(d, body=f(d.body))
    if isinstance(d, VarDef):
        return replace(d, init=f(d.init))
    if isinstance(d, CheckExpect):
        return replace(d, actual=f(d.actual), expected=f(d.expected))
    return d


def map_expr(e: Expr, f: Callable[[Expr], Expr]) -> Expr:
    """Bottom-up rebuild: children first, then ``f`` on the rebuilt node."""
    return f(map_children(e, lambda c: map_expr(c, f)))


def vector_names(x: Logic) -> set[str]:
    """Names used as vectors (in cell references, lengths and sorted ranges)."""
    out: set[str] = set()
    _vn(x, out)
    return out


def _vn(x, out: set[str]) -> None:
    if isinstance(x, (VRef, VLen, SortedRange)):
        out.add(x.vec)
    for name in getattr(x, "__dataclass_fields__", ()):
        y = getattr(x, name)
        for z in (y if isinstance(y, tuple) else (y,)):
            if isinstance(z, (Term, Formula)):
                _vn(z, out)
