"""Concrete-syntax printer and the math-notation display used in traces.

``print_program`` output re-parses to a structurally equal program.
``show`` renders terms and formulas the way a hand-written assertion chain
would (``k > 0 ∧ accum = Π_{i=k+1}^{n} i``).
"""
from __future__ import annotations

from .syntax import (
    Add, Add1, And, App, Assert, Begin, BigOp, BigProd, BoolLit, CheckExpect,
    Cmp, Cond, Contract, Expr, FalseF, Formula, FunDef, If, Implies, IntConst,
    IntLit, Local, Mul, Not, Or, Program, SetBang, SortedRange, StrLit, Sub,
    Sub1, TVar, Term, TrueF, Var, VarDef, VectorLength, VectorLit, VectorRef,
    VectorSetBang, VLen, VoidLit, VRef, While,
)

WIDTH = 78

# ---------------------------------------------------------------------------
# s-expression rendering of terms and formulas


def term_sexpr(t: Term) -> str:
    if isinstance(t, IntConst):
        return str(t.value)
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, Add):
        return "(+ " + " ".join(term_sexpr(a) for a in t.args) + ")"
    if isinstance(t, Mul):
        return "(* " + " ".join(term_sexpr(a) for a in t.args) + ")"
    if isinstance(t, Sub):
        return f"(- {term_sexpr(t.left)} {term_sexpr(t.right)})"
    if isinstance(t, Sub1):
        return f"(sub1 {term_sexpr(t.arg)})"
    if isinstance(t, Add1):
        return f"(add1 {term_sexpr(t.arg)})"
    if isinstance(t, BigOp):
        return f"({t.kind} ({t.index} {term_sexpr(t.lo)} {term_sexpr(t.hi)}) {term_sexpr(t.body)})"
    if isinstance(t, VRef):
        return f"(vref {t.vec} {term_sexpr(t.idx)})"
    if isinstance(t, VLen):
        return f"(vlen {t.vec})"
    raise TypeError(t)


def formula_sexpr(f: Formula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Cmp):
        return f"({f.op} {term_sexpr(f.lhs)} {term_sexpr(f.rhs)})"
    if isinstance(f, (And, Or)):
        head = "and" if isinstance(f, And) else "or"
        return f"({head} " + " ".join(formula_sexpr(a) for a in f.args) + ")"
    if isinstance(f, Not):
        return f"(not {formula_sexpr(f.arg)})"
    if isinstance(f, Implies):
        return f"(implies {formula_sexpr(f.hyp)} {formula_sexpr(f.concl)})"
    if isinstance(f, SortedRange):
        return f"(sorted {f.vec} {term_sexpr(f.lo)} {term_sexpr(f.hi)})"
    raise TypeError(f)


# ---------------------------------------------------------------------------
# math display

_CMP_SHOW = {"=": "=", "<": "<", "<=": "≤", ">": ">", ">=": "≥"}


def _show_term(t: Term, prec: int) -> str:
    # prec: 0 sum context, 1 product context, 2 atomic context
    if isinstance(t, IntConst):
        s = str(t.value)
        return f"({s})" if t.value < 0 and prec > 0 else s
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, Add):
        parts = [_show_term(t.args[0], 0)]
        for a in t.args[1:]:
            if isinstance(a, IntConst) and a.value < 0:
                parts.append(f"- {-a.value}")
            else:
                parts.append("+ " + _show_term(a, 0))
        s = " ".join(parts)
        return f"({s})" if prec > 0 else s
    if isinstance(t, Sub):
        s = f"{_show_term(t.left, 0)} - {_show_term(t.right, 1)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, Sub1):
        return _show_term(Sub(t.arg, IntConst(1)), prec)
    if isinstance(t, Add1):
        return _show_term(Add((t.arg, IntConst(1))), prec)
    if isinstance(t, Mul):
        s = "·".join(_show_term(a, 1) for a in t.args)
        return f"({s})" if prec > 1 else s
    if isinstance(t, BigOp):
        sym = "Π" if isinstance(t, BigProd) else "Σ"
        s = f"{sym}_{{{t.index}={_show_term(t.lo, 0)}}}^{{{_show_term(t.hi, 0)}}} {_show_term(t.body, 2)}"
        return f"({s})" if prec > 0 and not _is_atomic(t.body) else s
    if isinstance(t, VRef):
        return f"{t.vec}[{_show_term(t.idx, 0)}]"
    if isinstance(t, VLen):
        return f"len({t.vec})"
    raise TypeError(t)


def _is_atomic(t: Term) -> bool:
    return isinstance(t, (IntConst, TVar, VRef, VLen))


def _show_formula(f: Formula, prec: int) -> str:
    # prec: 0 top, 1 operand of ⇒, 2 operand of ∧/∨, 3 operand of ¬
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Cmp):
        return f"{_show_term(f.lhs, 0)} {_CMP_SHOW[f.op]} {_show_term(f.rhs, 0)}"
    if isinstance(f, Not) and isinstance(f.arg, Cmp) and f.arg.op == "=":
        return f"{_show_term(f.arg.lhs, 0)} ≠ {_show_term(f.arg.rhs, 0)}"
    if isinstance(f, Not):
        return "¬" + _show_formula(f.arg, 3)
    if isinstance(f, (And, Or)):
        sep = " ∧ " if isinstance(f, And) else " ∨ "
        s = sep.join(_show_formula(a, 2) for a in f.args)
        return f"({s})" if prec >= 2 else s
    if isinstance(f, Implies):
        s = f"{_show_formula(f.hyp, 1)} ⇒ {_show_formula(f.concl, 1)}"
        return f"({s})" if prec >= 1 else s
    if isinstance(f, SortedRange):
        return f"sorted({f.vec}[{_show_term(f.lo, 0)}..{_show_term(f.hi, 0)}])"
    raise TypeError(f)


def show(x) -> str:
    """Math-notation rendering of a term or formula."""
    if isinstance(x, Term):
        return _show_term(x, 0)
    return _show_formula(x, 0)


# ---------------------------------------------------------------------------
# Program printer
#
# Expressions are first turned into a small document tree: ``Node`` is a
# parenthesised form, strings are atoms.  Layout then decides flat vs broken.


class Node:
    __slots__ = ("items", "head", "bracket", "comments")

    def __init__(self, items, head=1, bracket="(", comments=()):
        self.items = items
        self.head = head  # items kept on the opening line when broken
        self.bracket = bracket
        self.comments = comments


def _flat(d) -> str:
    if isinstance(d, str):
        return d
    close = ")" if d.bracket == "(" else "]"
    return d.bracket + " ".join(_flat(i) for i in d.items) + close


def _has_comments(d) -> bool:
    if isinstance(d, str):
        return False
    return any(isinstance(i, Node) and (i.comments or _has_comments(i)) for i in d.items)


def _layout(d, indent: int) -> list[str]:
    """Lines for ``d`` whose first line starts at column ``indent`` (not included)."""
    if isinstance(d, str):
        return [d]
    flat = _flat(d)
    if not _has_comments(d) and len(flat) + indent <= WIDTH:
        return [flat]
    close = ")" if d.bracket == "(" else "]"
    head = d.items[:d.head]
    rest = d.items[d.head:]
    if d.head == 0:
        sub_indent = indent + 1
        lines = []
        prefix = d.bracket
    else:
        sub_indent = indent + 2
        prefix = None
        first = d.bracket + "".join(_flat(h) + " " for h in head[:-1])
        tail = _layout(head[-1], indent + len(first))
        lines = [first + tail[0]] + tail[1:]
    if not rest:
        if not lines:
            return [d.bracket + close]
        lines[-1] += close
        return lines
    pad = " " * sub_indent
    for item in rest:
        comments = item.comments if isinstance(item, Node) else ()
        for c in comments:
            if prefix is not None:
                lines.append(prefix + "; " + c)
                prefix = None
            else:
                lines.append(pad + "; " + c)
        sub = _layout(item, sub_indent)
        if prefix is not None:
            lines.append(prefix + sub[0])
            prefix = None
        else:
            lines.append(pad + sub[0])
        lines.extend(sub[1:])
    lines[-1] += close
    return lines


def _term_doc(t: Term):
    return term_sexpr(t)


def _formula_doc(f: Formula):
    if isinstance(f, (And, Or)) and len(formula_sexpr(f)) > 50:
        head = "and" if isinstance(f, And) else "or"
        return Node([head] + [_formula_doc(a) for a in f.args], head=2)
    return formula_sexpr(f)


def expr_doc(e: Expr):
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, StrLit):
        body = e.value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{body}"'
    if isinstance(e, VoidLit):
        return "(void)"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, App):
        return Node([e.op] + [expr_doc(a) for a in e.args], head=2)
    if isinstance(e, If):
        return Node(["if", expr_doc(e.test), expr_doc(e.then), expr_doc(e.orelse)], head=2)
    if isinstance(e, Cond):
        clauses = [Node([expr_doc(t), expr_doc(b)], head=1, bracket="[") for t, b in e.clauses]
        if e.orelse is not None:
            clauses.append(Node(["else", expr_doc(e.orelse)], head=1, bracket="["))
        return Node(["cond"] + clauses, head=1)
    if isinstance(e, Local):
        defs = Node([def_doc(d) for d in e.defs], head=0, bracket="[")
        return Node(["local", defs, expr_doc(e.body)], head=2)
    if isinstance(e, Begin):
        return Node(["begin"] + [expr_doc(s) for s in e.stmts], head=1)
    if isinstance(e, SetBang):
        return Node(["set!", e.target, expr_doc(e.rhs)], head=2)
    if isinstance(e, While):
        items = ["while", expr_doc(e.driver), Node(["invariant", _formula_doc(e.invariant)], head=1)]
        if e.variant is not None:
            items.append(f"(variant {term_sexpr(e.variant)})")
        items.extend(expr_doc(b) for b in e.body)
        return Node(items, head=2)
    if isinstance(e, VectorLit):
        return Node(["vector"] + [expr_doc(a) for a in e.elems], head=2)
    if isinstance(e, VectorRef):
        return Node(["vector-ref", expr_doc(e.vec), expr_doc(e.idx)], head=2)
    if isinstance(e, VectorSetBang):
        return Node(["vector-set!", expr_doc(e.vec), expr_doc(e.idx), expr_doc(e.rhs)], head=2)
    if isinstance(e, VectorLength):
        return Node(["vector-length", expr_doc(e.vec)], head=2)
    if isinstance(e, Assert):
        return Node(["assert", _formula_doc(e.formula)], head=1)
    raise TypeError(e)


def _def_comments(d) -> tuple[str, ...]:
    out = []
    if isinstance(d, FunDef):
        if d.signature:
            out.append(d.signature)
        if d.purpose is not None:
            out.append(f"Purpose: {d.purpose}".rstrip())
        if d.effect is not None:
            out.append(f"Effect: {d.effect}".rstrip())
        out.extend(d.notes)
    elif isinstance(d, VarDef):
        if d.type_note:
            out.append(d.type_note)
        if d.purpose is not None:
            out.append(f"Purpose: {d.purpose}".rstrip())
        out.extend(d.notes)
    return tuple(out)


def def_doc(d):
    if isinstance(d, FunDef):
        header = "(" + " ".join((d.name,) + d.params) + ")"
        return Node(["define", header, expr_doc(d.body)], head=2, comments=_def_comments(d))
    if isinstance(d, VarDef):
        return Node(["define", d.name, expr_doc(d.init)], head=2, comments=_def_comments(d))
    if isinstance(d, CheckExpect):
        return Node(["check-expect", expr_doc(d.actual), expr_doc(d.expected)], head=2)
    if isinstance(d, Contract):
        items = ["contract", d.name]
        if not isinstance(d.requires, TrueF):
            items.append(Node(["requires", _formula_doc(d.requires)], head=1))
        if not isinstance(d.ensures, TrueF):
            items.append(Node(["ensures", _formula_doc(d.ensures)], head=1))
        if d.variant is not None:
            items.append(f"(variant {term_sexpr(d.variant)})")
        if d.modifies:
            items.append("(modifies " + " ".join(d.modifies) + ")")
        return Node(items, head=2)
    raise TypeError(d)


def print_expr(e: Expr, indent: int = 0) -> str:
    return "\n".join(_layout(expr_doc(e), indent))


def print_definition(d) -> str:
    doc = def_doc(d)
    lines = [f"; {c}" for c in _def_comments(d)]
    lines.extend(_layout(doc, 0))
    return "\n".join(lines)


def print_program(p: Program) -> str:
    chunks = []
    prev_test = False
    for d in p.defs:
        is_test = isinstance(d, CheckExpect)
        if chunks and not (is_test and prev_test):
            chunks.append("")
        chunks.append(print_definition(d))
        prev_test = is_test
    return "\n".join(chunks) + "\n"
