"""S-expression reader and the parser from s-expressions to syntax trees."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .syntax import (
    CMP_OPS, TRUE, FALSE, Add, Add1, And, App, Assert, Begin, BigProd, BigSum,
    BoolLit, CheckExpect, Cmp, Cond, Contract, Definition, Expr, Formula,
    FunDef, If, Implies, IntConst, IntLit, Local, Mul, Not, Or, Pos, Program,
    SetBang, SortedRange, StrLit, Sub, Sub1, Term, TVar, Var, VarDef,
    VectorLength, VectorLit, VectorRef, VectorSetBang, VLen, VoidLit, VRef,
    While,
)


class ParseError(Exception):
    def __init__(self, message: str, pos: Optional[Pos] = None, hint: str = ""):
        assert message
        self.message = message
        self.pos = pos
        self.hint = hint
        where = f"{pos}: " if pos else ""
        extra = f" (expected {hint})" if hint else ""
        super().__init__(f"{where}{message}{extra}")


@dataclass(frozen=True)
class Atom:
    lexeme: str
    pos: Pos
    comments: tuple[str, ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class SList:
    items: tuple["SExpr", ...]
    pos: Pos
    bracket: str = "("
    comments: tuple[str, ...] = field(default=(), compare=False)


SExpr = Union[Atom, SList]

_CLOSERS = {"(": ")", "[": "]"}
_DELIMS = set("()[];\"") | set(" \t\r\n")


def read_sexprs(text: str) -> list[SExpr]:
    """Read every datum in ``text``.

    ``;`` starts a comment running to end of line.  A comment preceded on its
    line only by whitespace or opening brackets is attached to the datum that
    follows it, which is how signature and purpose lines reach the parser.
    """
    stack: list[tuple[str, Pos, list, tuple[str, ...]]] = []
    top: list[SExpr] = []
    pending: list[str] = []
    i, line, col = 0, 1, 1
    line_blank = True  # nothing but opening brackets so far on this line
    n = len(text)

    def emit(node):
        (stack[-1][2] if stack else top).append(node)

    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col, line_blank = i + 1, line + 1, 1, True
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if c == ";":
            j = text.find("\n", i)
            j = n if j == -1 else j
            if line_blank:
                pending.append(text[i:j].lstrip(";").strip())
            col += j - i
            i = j
            continue
        pos = Pos(line, col)
        if c in "([":
            stack.append((c, pos, [], tuple(pending)))
            pending = []
            line_blank = True
            i, col = i + 1, col + 1
        elif c in ")]":
            if not stack:
                raise ParseError(f"unexpected '{c}'", pos, "a datum before the closing paren")
            opener, opos, items, comments = stack.pop()
            if _CLOSERS[opener] != c:
                raise ParseError(
                    f"'{opener}' opened at {opos} closed by '{c}'", pos, f"'{_CLOSERS[opener]}'"
                )
            pending = []
            line_blank = False
            emit(SList(tuple(items), opos, opener, comments))
            i, col = i + 1, col + 1
        elif c == '"':
            j = i + 1
            buf = ['"']
            while True:
                if j >= n:
                    raise ParseError("unterminated string", pos, 'a closing "')
                ch = text[j]
                if ch == "\\" and j + 1 < n:
                    buf.append(text[j:j + 2])
                    j += 2
                    continue
                buf.append(ch)
                j += 1
                if ch == '"':
                    break
            lexeme = "".join(buf)
            if "\n" in lexeme:
                line += lexeme.count("\n")
                col = len(lexeme) - lexeme.rfind("\n")
            else:
                col += len(lexeme)
            emit(Atom(lexeme, pos, tuple(pending)))
            pending = []
            line_blank = False
            i = j
        else:
            j = i
            while j < n and text[j] not in _DELIMS:
                j += 1
            emit(Atom(text[i:j], pos, tuple(pending)))
            pending = []
            line_blank = False
            col += j - i
            i = j
    if stack:
        opener, opos, _, _ = stack[-1]
        raise ParseError(f"unclosed '{opener}'", opos, f"'{_CLOSERS[opener]}'")
    return top


# ---------------------------------------------------------------------------
# Helpers

_INT = re.compile(r"[+-]?\d+\Z")
_BOOLS = {"true": True, "#t": True, "#true": True, "false": False, "#f": False, "#false": False}
RESERVED = {
    "define", "local", "cond", "else", "if", "begin", "set!", "while", "invariant",
    "variant", "check-expect", "assert", "contract", "requires", "ensures", "modifies",
}


def _sym(x: SExpr) -> Optional[str]:
    if isinstance(x, Atom) and not x.lexeme.startswith('"') and not _INT.match(x.lexeme):
        return x.lexeme
    return None


def _head(x: SExpr) -> Optional[str]:
    if isinstance(x, SList) and x.items:
        return _sym(x.items[0])
    return None


def _name(x: SExpr, what: str) -> str:
    s = _sym(x)
    if s is None or s in _BOOLS or s in RESERVED:
        raise ParseError(f"expected {what}", x.pos, "an identifier")
    return s


def _expect_len(x: SList, n: int, form: str) -> None:
    if len(x.items) != n:
        raise ParseError(f"{form} expects {n - 1} parts, got {len(x.items) - 1}", x.pos, form)


def _decode_string(lexeme: str) -> str:
    body = lexeme[1:-1]
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


# ---------------------------------------------------------------------------
# Terms and formulas


def parse_term(x: SExpr) -> Term:
    if isinstance(x, Atom):
        if _INT.match(x.lexeme):
            return IntConst(int(x.lexeme))
        return TVar(_name(x, "a term"))
    h = _head(x)
    args = x.items[1:]
    if h == "+" or h == "*":
        if len(args) < 2:
            raise ParseError(f"({h} ...) needs at least two terms", x.pos, f"({h} t t ...)")
        ts = tuple(parse_term(a) for a in args)
        return Add(ts) if h == "+" else Mul(ts)
    if h == "-":
        _expect_len(x, 3, "(- t t)")
        return Sub(parse_term(args[0]), parse_term(args[1]))
    if h in ("sub1", "add1"):
        _expect_len(x, 2, f"({h} t)")
        t = parse_term(args[0])
        return Sub1(t) if h == "sub1" else Add1(t)
    if h in ("prod", "sum"):
        _expect_len(x, 3, f"({h} (idx lo hi) body)")
        binder = args[0]
        if not isinstance(binder, SList) or len(binder.items) != 3:
            raise ParseError("malformed big-operator binder", binder.pos, "(idx lo hi)")
        idx = _name(binder.items[0], "an index name")
        lo, hi = parse_term(binder.items[1]), parse_term(binder.items[2])
        if idx in _free(lo) | _free(hi):
            raise ParseError(f"index {idx} may not occur in its own bounds", binder.pos)
        cls = BigProd if h == "prod" else BigSum
        return cls(idx, lo, hi, parse_term(args[1]))
    if h == "vref":
        _expect_len(x, 3, "(vref name t)")
        return VRef(_name(args[0], "a vector name"), parse_term(args[1]))
    if h == "vlen":
        _expect_len(x, 2, "(vlen name)")
        return VLen(_name(args[0], "a vector name"))
    raise ParseError(f"unknown term operator {h!r}", x.pos, "+ - * sub1 add1 prod sum vref vlen")


def _free(t: Term) -> set[str]:
    from .syntax import free_vars
    return free_vars(t)


def parse_formula(x: SExpr) -> Formula:
    if isinstance(x, Atom):
        if x.lexeme in _BOOLS:
            return TRUE if _BOOLS[x.lexeme] else FALSE
        raise ParseError(f"{x.lexeme!r} is not a formula", x.pos, "a comparison or connective")
    h = _head(x)
    args = x.items[1:]
    if h == "and" or h == "or":
        fs = tuple(parse_formula(a) for a in args)
        if not fs:
            return TRUE if h == "and" else FALSE
        return And(fs) if h == "and" else Or(fs)
    if h == "not":
        _expect_len(x, 2, "(not f)")
        return Not(parse_formula(args[0]))
    if h == "implies":
        _expect_len(x, 3, "(implies f f)")
        return Implies(parse_formula(args[0]), parse_formula(args[1]))
    if h in CMP_OPS:
        _expect_len(x, 3, f"({h} t t)")
        return Cmp(h, parse_term(args[0]), parse_term(args[1]))
    if h == "sorted":
        _expect_len(x, 4, "(sorted name t t)")
        return SortedRange(_name(args[0], "a vector name"), parse_term(args[1]), parse_term(args[2]))
    raise ParseError(f"unknown predicate {h!r}", x.pos, "and or not implies = < <= > >= sorted")


# ---------------------------------------------------------------------------
# Expressions


def parse_expr(x: SExpr) -> Expr:
    if isinstance(x, Atom):
        lx = x.lexeme
        if _INT.match(lx):
            return IntLit(int(lx), pos=x.pos)
        if lx in _BOOLS:
            return BoolLit(_BOOLS[lx], pos=x.pos)
        if lx.startswith('"'):
            return StrLit(_decode_string(lx), pos=x.pos)
        return Var(_name(x, "an expression"), pos=x.pos)
    if not x.items:
        raise ParseError("empty application", x.pos, "(operator arg ...)")
    h = _head(x)
    if h is None:
        raise ParseError("operator must be a name", x.items[0].pos, "a function name")
    parser = _FORMS.get(h)
    if parser is not None:
        return parser(x)
    if h in RESERVED:
        raise ParseError(f"{h} is not allowed here", x.pos)
    return App(h, tuple(parse_expr(a) for a in x.items[1:]), pos=x.pos)


def _p_if(x: SList) -> Expr:
    _expect_len(x, 4, "(if test then else)")
    a = x.items
    return If(parse_expr(a[1]), parse_expr(a[2]), parse_expr(a[3]), pos=x.pos)


def _p_cond(x: SList) -> Expr:
    clauses = []
    orelse = None
    body = x.items[1:]
    if not body:
        raise ParseError("cond needs at least one clause", x.pos, "[test expr]")
    for k, c in enumerate(body):
        if not isinstance(c, SList) or len(c.items) != 2:
            raise ParseError("malformed cond clause", c.pos, "[test expr]")
        if _sym(c.items[0]) == "else":
            if k != len(body) - 1:
                raise ParseError("else must be the last cond clause", c.pos)
            orelse = parse_expr(c.items[1])
        else:
            clauses.append((parse_expr(c.items[0]), parse_expr(c.items[1])))
    if not clauses:
        raise ParseError("cond needs a clause besides else", x.pos, "[test expr]")
    return Cond(tuple(clauses), orelse, pos=x.pos)


def _p_local(x: SList) -> Expr:
    _expect_len(x, 3, "(local [defs] body)")
    defs = x.items[1]
    if not isinstance(defs, SList):
        raise ParseError("local needs a bracketed definition list", defs.pos, "[(define ...) ...]")
    parsed = tuple(parse_definition(d) for d in defs.items)
    for d in parsed:
        if isinstance(d, CheckExpect):
            raise ParseError("check-expect is only allowed at top level", d.pos)
    _check_distinct(parsed)
    return Local(parsed, parse_expr(x.items[2]), pos=x.pos)


def _p_begin(x: SList) -> Expr:
    if len(x.items) < 2:
        raise ParseError("begin needs at least one expression", x.pos, "(begin e ...)")
    return Begin(tuple(parse_expr(a) for a in x.items[1:]), pos=x.pos)


def _p_set(x: SList) -> Expr:
    _expect_len(x, 3, "(set! name expr)")
    return SetBang(_name(x.items[1], "a variable to mutate"), parse_expr(x.items[2]), pos=x.pos)


def _p_while(x: SList) -> Expr:
    a = x.items
    if len(a) < 3 or _head(a[2]) != "invariant":
        raise ParseError("while requires (invariant ...)", x.pos,
                         "(while driver (invariant f) [(variant t)] body ...)")
    inv = a[2]
    _expect_len(inv, 2, "(invariant f)")
    invariant = parse_formula(inv.items[1])
    rest = list(a[3:])
    variant = None
    if rest and _head(rest[0]) == "variant":
        _expect_len(rest[0], 2, "(variant t)")
        variant = parse_term(rest[0].items[1])
        rest = rest[1:]
    if not rest:
        raise ParseError("while needs a body", x.pos, "at least one body expression")
    return While(parse_expr(a[1]), invariant, variant, tuple(parse_expr(b) for b in rest), pos=x.pos)


def _p_void(x: SList) -> Expr:
    _expect_len(x, 1, "(void)")
    return VoidLit(pos=x.pos)


def _p_vector(x: SList) -> Expr:
    return VectorLit(tuple(parse_expr(a) for a in x.items[1:]), pos=x.pos)


def _p_vref(x: SList) -> Expr:
    _expect_len(x, 3, "(vector-ref v i)")
    return VectorRef(parse_expr(x.items[1]), parse_expr(x.items[2]), pos=x.pos)


def _p_vset(x: SList) -> Expr:
    _expect_len(x, 4, "(vector-set! v i e)")
    a = x.items
    return VectorSetBang(parse_expr(a[1]), parse_expr(a[2]), parse_expr(a[3]), pos=x.pos)


def _p_vlen(x: SList) -> Expr:
    _expect_len(x, 2, "(vector-length v)")
    return VectorLength(parse_expr(x.items[1]), pos=x.pos)


def _p_assert(x: SList) -> Expr:
    _expect_len(x, 2, "(assert f)")
    return Assert(parse_formula(x.items[1]), pos=x.pos)


_FORMS = {
    "if": _p_if, "cond": _p_cond, "local": _p_local, "begin": _p_begin, "set!": _p_set,
    "while": _p_while, "void": _p_void, "vector": _p_vector, "vector-ref": _p_vref,
    "vector-set!": _p_vset, "vector-length": _p_vlen, "assert": _p_assert,
}


# ---------------------------------------------------------------------------
# Definitions


def _classify_comments(lines: tuple[str, ...], fun: bool):
    first = None
    purpose = effect = None
    notes = []
    for ln in lines:
        low = ln.lower()
        if low.startswith("purpose:") and purpose is None:
            purpose = ln.split(":", 1)[1].strip()
        elif low.startswith("effect:") and effect is None:
            effect = ln.split(":", 1)[1].strip()
        elif first is None and (("->" in ln or "→" in ln) if fun else not low.startswith("invariant")):
            first = ln
        elif ln:
            notes.append(ln)
    return first, purpose, effect, tuple(notes)


def parse_definition(x: SExpr) -> Definition:
    h = _head(x)
    if h == "define":
        _expect_len(x, 3, "(define header body)")
        header, body = x.items[1], x.items[2]
        if isinstance(header, SList):
            if not header.items:
                raise ParseError("empty function header", header.pos, "(name param ...)")
            name = _name(header.items[0], "a function name")
            params = tuple(_name(p, "a parameter name") for p in header.items[1:])
            if len(set(params)) != len(params):
                raise ParseError(f"duplicate parameter in {name}", header.pos)
            sig, purpose, effect, notes = _classify_comments(x.comments, fun=True)
            return FunDef(name, params, parse_expr(body), sig, purpose, effect, notes, pos=x.pos)
        name = _name(header, "a variable name")
        tnote, purpose, effect, notes = _classify_comments(x.comments, fun=False)
        if effect:
            notes = (f"Effect: {effect}",) + notes
        return VarDef(name, parse_expr(body), tnote, purpose, notes, pos=x.pos)
    if h == "check-expect":
        _expect_len(x, 3, "(check-expect actual expected)")
        return CheckExpect(parse_expr(x.items[1]), parse_expr(x.items[2]), pos=x.pos)
    if h == "contract":
        return _p_contract(x)
    raise ParseError("expected a definition", x.pos, "(define ...), (check-expect ...) or (contract ...)")


def _p_contract(x: SList) -> Contract:
    if len(x.items) < 2:
        raise ParseError("contract needs a function name", x.pos, "(contract name clause ...)")
    name = _name(x.items[1], "a function name")
    kw: dict = {}
    for c in x.items[2:]:
        h = _head(c)
        if h in kw:
            raise ParseError(f"duplicate {h} clause", c.pos)
        if h in ("requires", "ensures"):
            _expect_len(c, 2, f"({h} f)")
            kw[h] = parse_formula(c.items[1])
        elif h == "variant":
            _expect_len(c, 2, "(variant t)")
            kw[h] = parse_term(c.items[1])
        elif h == "modifies":
            kw[h] = tuple(_name(v, "a vector name") for v in c.items[1:])
        else:
            raise ParseError("unknown contract clause", c.pos, "requires, ensures, variant or modifies")
    return Contract(name, pos=x.pos, **kw)


def _check_distinct(defs) -> None:
    seen: set[str] = set()
    contracts: set[str] = set()
    for d in defs:
        if isinstance(d, (FunDef, VarDef)):
            if d.name in seen:
                raise ParseError(f"duplicate definition of {d.name}", d.pos)
            seen.add(d.name)
        elif isinstance(d, Contract):
            if d.name in contracts:
                raise ParseError(f"duplicate contract for {d.name}", d.pos)
            contracts.add(d.name)


def parse_program(sexprs: list[SExpr]) -> Program:
    defs = tuple(parse_definition(x) for x in sexprs)
    _check_distinct(defs)
    return Program(defs)


def parse_source(text: str) -> Program:
    return parse_program(read_sexprs(text))


def formula_from_text(text: str) -> Formula:
    (x,) = read_sexprs(text)
    return parse_formula(x)


def term_from_text(text: str) -> Term:
    (x,) = read_sexprs(text)
    return parse_term(x)


def expr_from_text(text: str) -> Expr:
    (x,) = read_sexprs(text)
    return parse_expr(x)
