"""Evaluator with dynamic monitoring of loop invariants, variants and assertions.

Integers are Python ints (arbitrary precision).  Booleans and strings map to
Python values, ``(void)`` to :data:`VOID`, vectors to :class:`Vector`.
"""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

from .printer import formula_sexpr, show
from .syntax import (
    Add, Add1, And, App, Assert, Begin, BigOp, BigProd, BoolLit, CheckExpect,
    Cmp, Cond, Contract, Expr, FalseF, Formula, FunDef, If, Implies, IntConst,
    IntLit, Local, Mul, Not, Or, Pos, Program, SetBang, SortedRange, StrLit,
    Sub, Sub1, Term, TrueF, TVar, Var, VarDef, VectorLength, VectorLit,
    VectorRef, VectorSetBang, VLen, VoidLit, VRef, While,
)

DEFAULT_CAP = 10**6


def default_cap() -> int:
    env = os.environ.get("LOOPSMITH_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_CAP


class _Void:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "VOID"


VOID = _Void()


class Vector:
    """Fixed-length mutable vector; equality is identity, like the language's ``eq?``."""

    __slots__ = ("items",)

    def __init__(self, items):
        self.items = list(items)

    def __len__(self):
        return len(self.items)

    def __repr__(self):
        return f"Vector({self.items!r})"


class Closure:
    __slots__ = ("fundef", "env", "contract")

    def __init__(self, fundef: FunDef, env: "Env", contract: Optional[Contract] = None):
        self.fundef = fundef
        self.env = env
        self.contract = contract


Value = Union[int, bool, str, _Void, Vector, Closure]


class EvalError(Exception):
    def __init__(self, message: str, pos: Optional[Pos] = None):
        self.message = message
        self.pos = pos
        super().__init__(f"{pos}: {message}" if pos else message)


class MonitorHalt(EvalError):
    """Raised in strict mode on the first monitor event."""


class Env:
    __slots__ = ("vars", "parent")

    def __init__(self, parent: Optional["Env"] = None, vars: Optional[dict] = None):
        self.vars = {} if vars is None else vars
        self.parent = parent

    def define(self, name: str, value) -> None:
        self.vars[name] = value

    def find(self, name: str) -> Optional["Env"]:
        env = self
        while env is not None:
            if name in env.vars:
                return env
            env = env.parent
        return None

    def lookup(self, name: str, pos: Optional[Pos] = None):
        frame = self.find(name)
        if frame is None:
            raise EvalError(f"unbound name {name}", pos)
        return frame.vars[name]

    def assign(self, name: str, value, pos: Optional[Pos] = None) -> None:
        frame = self.find(name)
        if frame is None:
            raise EvalError(f"set!: {name} is not defined", pos)
        frame.vars[name] = value

    def snapshot(self) -> dict[str, str]:
        """Printed values of the non-function bindings below the global frame."""
        frames = []
        env = self
        while env is not None and env.parent is not None:
            frames.append(env)
            env = env.parent
        out: dict[str, str] = {}
        for frame in reversed(frames):
            for k, v in frame.vars.items():
                if not isinstance(v, Closure):
                    out[k] = print_value(v)
        return out


# ---------------------------------------------------------------------------
# values


def print_value(v) -> str:
    if v is True:
        return "#true"
    if v is False:
        return "#false"
    if type(v) is int:
        return str(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if v is VOID:
        return "(void)"
    if isinstance(v, Vector):
        return "(vector" + "".join(" " + print_value(x) for x in v.items) + ")"
    if isinstance(v, Closure):
        return f"#<procedure:{v.fundef.name}>"
    return repr(v)


def values_equal(a, b) -> bool:
    if isinstance(a, Vector) and isinstance(b, Vector):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a.items, b.items))
    if type(a) is not type(b):
        return False
    if isinstance(a, Closure):
        return a is b
    return a == b


def _int(v, what: str, pos=None) -> int:
    if type(v) is int:
        return v
    if v is VOID:
        raise EvalError(f"{what}: uninitialized state variable (value is (void))", pos)
    raise EvalError(f"{what}: expected an integer, got {print_value(v)}", pos)


def _bool(v, what: str, pos=None) -> bool:
    if v is True or v is False:
        return v
    if v is VOID:
        raise EvalError(f"{what}: uninitialized state variable (value is (void))", pos)
    raise EvalError(f"{what}: expected a boolean, got {print_value(v)}", pos)


def _vec(v, what: str, pos=None) -> Vector:
    if isinstance(v, Vector):
        return v
    raise EvalError(f"{what}: expected a vector, got {print_value(v)}", pos)


def _index(vec: Vector, i: int, what: str, pos=None) -> int:
    if not 0 <= i < len(vec):
        raise EvalError(f"{what}: index {i} out of range for vector of length {len(vec)}", pos)
    return i


# ---------------------------------------------------------------------------
# terms and formulas over a store

Lookup = Callable[[str], object]


def _lookup_fn(env) -> Lookup:
    if isinstance(env, Env):
        return env.lookup

    def get(name):
        try:
            return env[name]
        except KeyError:
            raise EvalError(f"unbound name {name}") from None

    return get


def eval_term(t: Term, env: Union[Env, Mapping]) -> int:
    return _term(t, _lookup_fn(env))


def _term(t: Term, look: Lookup) -> int:
    if isinstance(t, IntConst):
        return t.value
    if isinstance(t, TVar):
        return _int(look(t.name), t.name)
    if isinstance(t, Add):
        return sum(_term(a, look) for a in t.args)
    if isinstance(t, Sub):
        return _term(t.left, look) - _term(t.right, look)
    if isinstance(t, Mul):
        out = 1
        for a in t.args:
            out *= _term(a, look)
        return out
    if isinstance(t, Sub1):
        return _term(t.arg, look) - 1
    if isinstance(t, Add1):
        return _term(t.arg, look) + 1
    if isinstance(t, BigOp):
        lo, hi = _term(t.lo, look), _term(t.hi, look)
        prod = isinstance(t, BigProd)
        acc = 1 if prod else 0
        idx = t.index
        for i in range(lo, hi + 1):
            inner = (lambda i: lambda n: i if n == idx else look(n))(i)
            v = _term(t.body, inner)
            acc = acc * v if prod else acc + v
        return acc
    if isinstance(t, VRef):
        vec = _vec(look(t.vec), t.vec)
        i = _term(t.idx, look)
        return _int(vec.items[_index(vec, i, f"{t.vec}[{i}]")], f"{t.vec}[{i}]")
    if isinstance(t, VLen):
        return len(_vec(look(t.vec), t.vec))
    raise TypeError(t)


def eval_formula(f: Formula, env: Union[Env, Mapping]) -> bool:
    """Decide ``f`` in a concrete store (an :class:`Env` or a plain mapping)."""
    return _formula(f, _lookup_fn(env))


_CMP = {
    "=": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _formula(f: Formula, look: Lookup) -> bool:
    if isinstance(f, Cmp):
        return _CMP[f.op](_term(f.lhs, look), _term(f.rhs, look))
    if isinstance(f, And):
        return all(_formula(a, look) for a in f.args)
    if isinstance(f, Or):
        return any(_formula(a, look) for a in f.args)
    if isinstance(f, Not):
        return not _formula(f.arg, look)
    if isinstance(f, Implies):
        return (not _formula(f.hyp, look)) or _formula(f.concl, look)
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, SortedRange):
        lo, hi = _term(f.lo, look), _term(f.hi, look)
        if lo > hi:
            return True
        vec = _vec(look(f.vec), f.vec)
        if lo < 0 or hi >= len(vec):
            raise EvalError(f"sorted {f.vec}[{lo}..{hi}]: range outside vector of length {len(vec)}")
        xs = [_int(x, f.vec) for x in vec.items[lo:hi + 1]]
        return all(a <= b for a, b in zip(xs, xs[1:]))
    raise TypeError(f)


# ---------------------------------------------------------------------------
# results


@dataclass
class MonitorOptions:
    enabled: bool = True
    cap: int = field(default_factory=default_cap)
    strict: bool = False
    record_heads: bool = False


MONITOR_KINDS = (
    "invariant-violation", "variant-nonpositive", "variant-nondecreasing",
    "assert-failure", "iteration-cap",
)


@dataclass
class MonitorEvent:
    kind: str
    pos: Optional[Pos]
    iteration: int
    formula: str
    env: dict[str, str]
    function: Optional[str] = None
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "position": str(self.pos) if self.pos else None,
            "function": self.function,
            "iteration": self.iteration,
            "formula": self.formula,
            "env": dict(self.env),
            "detail": self.detail,
        }

    def __str__(self) -> str:
        where = f" at {self.pos}" if self.pos else ""
        state = ", ".join(f"{k}={v}" for k, v in self.env.items())
        extra = f" ({self.detail})" if self.detail else ""
        return f"{self.kind}{where}, iteration {self.iteration}: {self.formula}{extra} [{state}]"


@dataclass
class LoopHead:
    pos: Optional[Pos]
    iteration: int
    env: dict[str, str]


@dataclass
class TestResult:
    actual: str
    expected: str
    passed: bool
    pos: Optional[Pos]
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "position": str(self.pos) if self.pos else None,
            "passed": self.passed,
            "actual": self.actual,
            "expected": self.expected,
            "error": self.error,
        }


@dataclass
class RunResult:
    tests: list[TestResult] = field(default_factory=list)
    events: list[MonitorEvent] = field(default_factory=list)
    heads: list[LoopHead] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return bool(self.tests) and all(t.passed for t in self.tests) and not self.errors


# ---------------------------------------------------------------------------
# the evaluator


def _arith(name, fn, min_args=0):
    def prim(args, pos):
        if len(args) < min_args:
            raise EvalError(f"{name}: expects at least {min_args} arguments", pos)
        return fn([_int(a, name, pos) for a in args])
    return prim


def _fixed(name, n, fn):
    def prim(args, pos):
        if len(args) != n:
            raise EvalError(f"{name}: expects {n} argument{'s' if n != 1 else ''}, got {len(args)}", pos)
        return fn(*args)
    return prim


def _chain(name, op):
    def prim(args, pos):
        if len(args) < 2:
            raise EvalError(f"{name}: expects at least 2 arguments", pos)
        xs = [_int(a, name, pos) for a in args]
        return all(op(a, b) for a, b in zip(xs, xs[1:]))
    return prim


def _minus(xs):
    return -xs[0] if len(xs) == 1 else xs[0] - sum(xs[1:])


def _product(xs):
    out = 1
    for x in xs:
        out *= x
    return out


def _div(name, fn):
    def run(a, b):
        a, b = _int(a, name), _int(b, name)
        if b == 0:
            raise EvalError(f"{name}: division by zero")
        return fn(a, b)
    return run


def _quotient(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def _make_vector(n, v):
    n = _int(n, "make-vector")
    if n < 0:
        raise EvalError("make-vector: negative length")
    return Vector([v] * n)


PRIMITIVES: dict[str, Callable] = {
    "+": _arith("+", sum),
    "-": _arith("-", _minus, 1),
    "*": _arith("*", _product),
    "max": _arith("max", max, 1),
    "min": _arith("min", min, 1),
    "=": _chain("=", lambda a, b: a == b),
    "<": _chain("<", lambda a, b: a < b),
    "<=": _chain("<=", lambda a, b: a <= b),
    ">": _chain(">", lambda a, b: a > b),
    ">=": _chain(">=", lambda a, b: a >= b),
    "sub1": _fixed("sub1", 1, lambda a: _int(a, "sub1") - 1),
    "add1": _fixed("add1", 1, lambda a: _int(a, "add1") + 1),
    "abs": _fixed("abs", 1, lambda a: abs(_int(a, "abs"))),
    "quotient": _fixed("quotient", 2, _div("quotient", _quotient)),
    "remainder": _fixed("remainder", 2, _div("remainder", lambda a, b: a - b * _quotient(a, b))),
    "modulo": _fixed("modulo", 2, _div("modulo", lambda a, b: a % b)),
    "expt": _fixed("expt", 2, lambda a, b: _int(a, "expt") ** _int(b, "expt")),
    "zero?": _fixed("zero?", 1, lambda a: _int(a, "zero?") == 0),
    "positive?": _fixed("positive?", 1, lambda a: _int(a, "positive?") > 0),
    "negative?": _fixed("negative?", 1, lambda a: _int(a, "negative?") < 0),
    "even?": _fixed("even?", 1, lambda a: _int(a, "even?") % 2 == 0),
    "odd?": _fixed("odd?", 1, lambda a: _int(a, "odd?") % 2 == 1),
    "not": _fixed("not", 1, lambda a: not _bool(a, "not")),
    "equal?": _fixed("equal?", 2, values_equal),
    "integer?": _fixed("integer?", 1, lambda a: type(a) is int),
    "number?": _fixed("number?", 1, lambda a: type(a) is int),
    "boolean?": _fixed("boolean?", 1, lambda a: a is True or a is False),
    "vector?": _fixed("vector?", 1, lambda a: isinstance(a, Vector)),
    "void?": _fixed("void?", 1, lambda a: a is VOID),
    "make-vector": _fixed("make-vector", 2, _make_vector),
}


class Interpreter:
    """One evaluation context: a global frame, monitor options and collected events."""

    def __init__(self, options: Optional[MonitorOptions] = None):
        self.options = options or MonitorOptions()
        self.events: list[MonitorEvent] = []
        self.heads: list[LoopHead] = []
        self.globals = Env()
        self._fn_stack: list[str] = []
        self._dispatch = {
            IntLit: lambda e, env: e.value,
            BoolLit: lambda e, env: e.value,
            StrLit: lambda e, env: e.value,
            VoidLit: lambda e, env: VOID,
            Var: self._var,
            App: self._app,
            If: self._if,
            Cond: self._cond,
            Local: self._local,
            Begin: self._begin,
            SetBang: self._set,
            While: self._while,
            VectorLit: lambda e, env: Vector(self.eval(x, env) for x in e.elems),
            VectorRef: self._vref,
            VectorSetBang: self._vset,
            VectorLength: lambda e, env: len(_vec(self.eval(e.vec, env), "vector-length", e.pos)),
            Assert: self._assert,
        }

    # -- definitions --------------------------------------------------------

    def load(self, defs, env: Env, errors: Optional[list] = None) -> None:
        contracts = {d.name: d for d in defs if isinstance(d, Contract)}
        for d in defs:
            if isinstance(d, FunDef):
                env.define(d.name, Closure(d, env, contracts.get(d.name)))
        for d in defs:
            if isinstance(d, VarDef):
                try:
                    env.define(d.name, self.eval(d.init, env))
                except EvalError as exc:
                    if errors is None:
                        raise
                    errors.append(f"define {d.name}: {exc}")

    def call(self, name: str, *args):
        """Apply a globally defined function to Python-level values."""
        fn = self.globals.lookup(name)
        if not isinstance(fn, Closure):
            raise EvalError(f"{name} is not a function")
        return self._apply(fn, list(args), None)

    # -- monitoring ---------------------------------------------------------

    def _event(self, kind, pos, iteration, formula, env, detail=""):
        ev = MonitorEvent(
            kind, pos, iteration, formula, env.snapshot(),
            self._fn_stack[-1] if self._fn_stack else None, detail,
        )
        self.events.append(ev)
        if self.options.strict:
            raise MonitorHalt(str(ev), pos)

    def _check(self, f: Formula, env: Env, kind: str, pos, iteration: int, detail="") -> None:
        if isinstance(f, TrueF):
            return
        if not _formula(f, env.lookup):
            self._event(kind, pos, iteration, show(f), env, detail)

    # -- expressions --------------------------------------------------------

    def eval(self, e: Expr, env: Env):
        return self._dispatch[type(e)](e, env)

    def _var(self, e: Var, env: Env):
        frame = env.find(e.name)
        if frame is not None:
            return frame.vars[e.name]
        if e.name in PRIMITIVES:
            raise EvalError(f"{e.name}: primitive used as a value", e.pos)
        raise EvalError(f"unbound name {e.name}", e.pos)

    def _app(self, e: App, env: Env):
        op = e.op
        frame = env.find(op)
        if frame is not None:
            fn = frame.vars[op]
            if not isinstance(fn, Closure):
                raise EvalError(f"{op} is not a function", e.pos)
            return self._apply(fn, [self.eval(a, env) for a in e.args], e.pos)
        if op == "and" or op == "or":
            want = op == "or"
            for a in e.args:
                if _bool(self.eval(a, env), op, a.pos) == want:
                    return want
            return not want
        prim = PRIMITIVES.get(op)
        if prim is None:
            raise EvalError(f"unbound function {op}", e.pos)
        args = [self.eval(a, env) for a in e.args]
        try:
            return prim(args, e.pos)
        except EvalError as exc:
            if exc.pos is None:
                raise EvalError(exc.message, e.pos) from None
            raise

    def _apply(self, fn: Closure, args: list, pos):
        d = fn.fundef
        if len(args) != len(d.params):
            n = len(d.params)
            raise EvalError(f"{d.name}: expects {n} argument{'s' if n != 1 else ''}, got {len(args)}", pos)
        env = Env(fn.env, dict(zip(d.params, args)))
        c = fn.contract
        monitor = self.options.enabled and c is not None
        self._fn_stack.append(d.name)
        try:
            if monitor:
                self._check(c.requires, env, "assert-failure", pos, 0, f"requires of {d.name}")
            result = self.eval(d.body, env)
            if monitor:
                self._check(c.ensures, env, "assert-failure", pos, 0, f"ensures of {d.name}")
            return result
        except RecursionError:
            raise EvalError(f"{d.name}: recursion too deep", pos) from None
        finally:
            self._fn_stack.pop()

    def _if(self, e: If, env: Env):
        if _bool(self.eval(e.test, env), "if", e.pos):
            return self.eval(e.then, env)
        return self.eval(e.orelse, env)

    def _cond(self, e: Cond, env: Env):
        for test, body in e.clauses:
            if _bool(self.eval(test, env), "cond", test.pos):
                return self.eval(body, env)
        if e.orelse is None:
            raise EvalError("cond: all question results were false", e.pos)
        return self.eval(e.orelse, env)

    def _local(self, e: Local, env: Env):
        inner = Env(env)
        self.load(e.defs, inner)
        return self.eval(e.body, inner)

    def _begin(self, e: Begin, env: Env):
        v = VOID
        for s in e.stmts:
            v = self.eval(s, env)
        return v

    def _set(self, e: SetBang, env: Env):
        env.assign(e.target, self.eval(e.rhs, env), e.pos)
        return VOID

    def _vref(self, e: VectorRef, env: Env):
        vec = _vec(self.eval(e.vec, env), "vector-ref", e.pos)
        i = _int(self.eval(e.idx, env), "vector-ref", e.pos)
        return vec.items[_index(vec, i, "vector-ref", e.pos)]

    def _vset(self, e: VectorSetBang, env: Env):
        vec = _vec(self.eval(e.vec, env), "vector-set!", e.pos)
        i = _int(self.eval(e.idx, env), "vector-set!", e.pos)
        vec.items[_index(vec, i, "vector-set!", e.pos)] = self.eval(e.rhs, env)
        return VOID

    def _assert(self, e: Assert, env: Env):
        if self.options.enabled:
            self._check(e.formula, env, "assert-failure", e.pos, 0)
        return VOID

    def _while(self, e: While, env: Env):
        opts = self.options
        monitor = opts.enabled
        inv = e.invariant
        check_inv = monitor and not isinstance(inv, TrueF)
        variant = e.variant if monitor else None
        body = e.body
        ev = self.eval
        look = env.lookup
        iteration = 0
        previous = None
        reported: set[str] = set()  # variant problems are reported once per loop run
        while True:
            try:
                if check_inv and not _formula(inv, look):
                    self._event("invariant-violation", e.pos, iteration, show(inv), env)
                if variant is not None:
                    v = _term(variant, look)
                    if v < 0 and "neg" not in reported:
                        reported.add("neg")
                        self._event("variant-nonpositive", e.pos, iteration, show(variant), env,
                                    f"value {v}")
                    if previous is not None and v >= previous and "dec" not in reported:
                        reported.add("dec")
                        self._event("variant-nondecreasing", e.pos, iteration, show(variant), env,
                                    f"{previous} -> {v}")
                    previous = v
            except MonitorHalt:
                raise
            except EvalError as exc:
                raise EvalError(f"while monitor: {exc.message}", e.pos) from None
            if opts.record_heads:
                self.heads.append(LoopHead(e.pos, iteration, env.snapshot()))
            if not _bool(ev(e.driver, env), "while", e.pos):
                return VOID
            iteration += 1
            if iteration > opts.cap:
                self.events.append(MonitorEvent(
                    "iteration-cap", e.pos, iteration - 1, f"more than {opts.cap} iterations",
                    env.snapshot(), self._fn_stack[-1] if self._fn_stack else None,
                ))
                raise EvalError(f"while: iteration cap of {opts.cap} exceeded", e.pos)
            for b in body:
                ev(b, env)


def eval_expr(e: Expr, env: Optional[Env] = None, options: Optional[MonitorOptions] = None):
    interp = Interpreter(options)
    if env is None:
        env = interp.globals
    return interp.eval(e, env)


def run_program(p: Program, options: Optional[MonitorOptions] = None) -> RunResult:
    """Evaluate definitions in order, then every ``check-expect``.

    An error inside one test is recorded on that test and the rest still run.
    """
    interp = Interpreter(options)
    result = RunResult()
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    try:
        interp.load(p.defs, interp.globals, result.errors)
        for t in p.tests():
            result.tests.append(_run_test(interp, t))
    finally:
        sys.setrecursionlimit(limit)
    result.events = interp.events
    result.heads = interp.heads
    return result


def _run_test(interp: Interpreter, t: CheckExpect) -> TestResult:
    try:
        expected = interp.eval(t.expected, interp.globals)
    except EvalError as exc:
        return TestResult("", "", False, t.pos, f"expected value: {exc}")
    try:
        actual = interp.eval(t.actual, interp.globals)
    except EvalError as exc:
        return TestResult("", print_value(expected), False, t.pos, str(exc))
    return TestResult(print_value(actual), print_value(expected), values_equal(actual, expected), t.pos)
