"""Program expressions to assertion-language terms, formulas and straight-line statements.

Calls to small non-recursive user functions (``empty-VINTV?``) are inlined.
Calls to functions with a contract become :class:`Call` statements.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Union

from ..printer import print_expr
from ..syntax import (
    Add, Add1, And, App, Assert, Begin, BoolLit, Cmp, Contract, Expr, FALSE,
    Formula, FunDef, If, IntConst, IntLit, Mul, Not, Or, Pos, SetBang, Sub,
    Sub1, TRUE, Term, TVar, Var, VectorLength, VectorRef, VoidLit, VLen, VRef,
    conj, substitute_many,
)

INLINE_DEPTH = 16


class Unsupported(Exception):
    def __init__(self, message: str, pos: Optional[Pos] = None):
        self.message = message
        self.pos = pos
        super().__init__(f"{pos}: {message}" if pos else message)


@dataclass(frozen=True)
class Assign:
    target: str
    value: Term
    pos: Optional[Pos] = None
    source: str = ""


@dataclass(frozen=True)
class Check:
    formula: Formula
    pos: Optional[Pos] = None
    source: str = ""


@dataclass(frozen=True)
class Call:
    name: str
    params: tuple[str, ...]
    args: tuple[Term, ...]
    contract: Contract
    pos: Optional[Pos] = None
    source: str = ""


Stmt = Union[Assign, Check, Call]

_CMP = {"=", "<", "<=", ">", ">="}


class Translator:
    def __init__(self, functions: Optional[Mapping[str, FunDef]] = None,
                 contracts: Optional[Mapping[str, Contract]] = None):
        self.functions = dict(functions or {})
        self.contracts = dict(contracts or {})
        self._depth = 0

    # -- terms --------------------------------------------------------------

    def term(self, e: Expr) -> Term:
        if isinstance(e, IntLit):
            return IntConst(e.value)
        if isinstance(e, Var):
            return TVar(e.name)
        if isinstance(e, VectorRef) and isinstance(e.vec, Var):
            return VRef(e.vec.name, self.term(e.idx))
        if isinstance(e, VectorLength) and isinstance(e.vec, Var):
            return VLen(e.vec.name)
        if isinstance(e, App):
            args = e.args
            if e.op in self.functions:
                return self._inline(e, self.term)
            if e.op == "+":
                return IntConst(0) if not args else self._fold(Add, args)
            if e.op == "*":
                return IntConst(1) if not args else self._fold(Mul, args)
            if e.op == "-" and args:
                if len(args) == 1:
                    return Sub(IntConst(0), self.term(args[0]))
                out = self.term(args[0])
                for a in args[1:]:
                    out = Sub(out, self.term(a))
                return out
            if e.op == "sub1" and len(args) == 1:
                return Sub1(self.term(args[0]))
            if e.op == "add1" and len(args) == 1:
                return Add1(self.term(args[0]))
        raise Unsupported(f"not an integer term: {_show(e)}", getattr(e, "pos", None))

    def _fold(self, cls, args) -> Term:
        ts = tuple(self.term(a) for a in args)
        return ts[0] if len(ts) == 1 else cls(ts)

    # -- formulas -----------------------------------------------------------

    def formula(self, e: Expr) -> Formula:
        if isinstance(e, BoolLit):
            return TRUE if e.value else FALSE
        if isinstance(e, If):
            c = self.formula(e.test)
            return Or((And((c, self.formula(e.then))), And((Not(c), self.formula(e.orelse)))))
        if isinstance(e, App):
            op, args = e.op, e.args
            if op in self.functions:
                return self._inline(e, self.formula)
            if op in _CMP and len(args) >= 2:
                ts = [self.term(a) for a in args]
                return conj(Cmp(op, a, b) for a, b in zip(ts, ts[1:]))
            if op == "and":
                return conj(self.formula(a) for a in args) if args else TRUE
            if op == "or":
                return Or(tuple(self.formula(a) for a in args)) if args else FALSE
            if op == "not" and len(args) == 1:
                return Not(self.formula(args[0]))
            if op == "zero?" and len(args) == 1:
                return Cmp("=", self.term(args[0]), IntConst(0))
            if op == "positive?" and len(args) == 1:
                return Cmp(">", self.term(args[0]), IntConst(0))
            if op == "negative?" and len(args) == 1:
                return Cmp("<", self.term(args[0]), IntConst(0))
        raise Unsupported(f"not a condition: {_show(e)}", getattr(e, "pos", None))

    def _inline(self, e: App, how):
        f = self.functions[e.op]
        if len(f.params) != len(e.args):
            raise Unsupported(f"{e.op}: arity mismatch", e.pos)
        if self._depth >= INLINE_DEPTH:
            raise Unsupported(f"{e.op}: cannot inline a recursive function", e.pos)
        self._depth += 1
        try:
            body = how(f.body)
        finally:
            self._depth -= 1
        return substitute_many(body, {p: self.term(a) for p, a in zip(f.params, e.args)})

    # -- statements ---------------------------------------------------------

    def stmts(self, es) -> list[Stmt]:
        out: list[Stmt] = []
        for e in es:
            out.extend(self._stmt(e))
        return out

    def _stmt(self, e: Expr) -> list[Stmt]:
        src = _show(e)
        if isinstance(e, SetBang):
            return [Assign(e.target, self.term(e.rhs), e.pos, src)]
        if isinstance(e, Assert):
            return [Check(e.formula, e.pos, src)]
        if isinstance(e, VoidLit):
            return []
        if isinstance(e, Begin):
            return self.stmts(e.stmts)
        if isinstance(e, App) and e.op in self.contracts:
            f = self.functions.get(e.op)
            if f is None or len(f.params) != len(e.args):
                raise Unsupported(f"{e.op}: contract without a matching definition", e.pos)
            args = tuple(self.term(a) for a in e.args)
            return [Call(e.op, f.params, args, self.contracts[e.op], e.pos, src)]
        raise Unsupported(f"unsupported statement in a checked loop: {src}", getattr(e, "pos", None))


def _show(e: Expr) -> str:
    text = print_expr(e)
    return " ".join(text.split())
