import math

import pytest

from conftest import load
from loopsmith.interp import (
    EvalError, Interpreter, MonitorOptions, VOID, Vector, eval_expr, eval_formula,
    print_value, run_program,
)
from loopsmith.reader import expr_from_text, formula_from_text, parse_source


def ev(text, **options):
    return eval_expr(expr_from_text(text), options=MonitorOptions(**options))


@pytest.mark.parametrize("text, value", [
    ("(+ 1 2 3)", 6),
    ("(- 10 4 1)", 5),
    ("(* 2 (sub1 4))", 6),
    ("(quotient 7 2)", 3),
    ("(and (< 1 2) (<= 2 2 3))", True),
    ("(or #f (zero? 0))", True),
    ("(if (> 1 2) 1 2)", 2),
    ("(cond [(= 1 2) 1] [(= 1 1) 7] [else 9])", 7),
    ("(local [(define k 3)] (begin (set! k (add1 k)) k))", 4),
    ("(vector-length (make-vector 3 0))", 3),
])
def test_evaluation(text, value):
    assert ev(text) == value


def test_integers_are_exact():
    p = load("fact-while")
    interp = Interpreter()
    interp.load(p.defs, interp.globals)
    assert interp.call("fact", 30) == math.factorial(30)


def test_while_returns_void_and_set_rebinds():
    assert ev("(local [(define k 2)] (while (> k 0) (invariant true) (set! k (sub1 k))))") is VOID
    assert ev("(local [(define k 2)] (begin (while (> k 0) (invariant true) (set! k (sub1 k))) k))") == 0


@pytest.mark.parametrize("text, fragment", [
    ("(vector-ref (vector 1 2) 5)", "out of range"),
    ("(+ 1 (void))", "uninitialized state variable"),
    ("(local [(define k (void))] (* k 2))", "uninitialized state variable"),
    ("(nope 3)", "unbound"),
    ("(sub1 #t)", "expected an integer"),
    ("(local [(define (f a) a)] (f 1 2))", "expects 1 argument,"),
    ("(quotient 7 0)", "division by zero"),
])
def test_errors(text, fragment):
    with pytest.raises(EvalError) as info:
        ev(text)
    assert fragment in str(info.value)
    assert info.value.pos is not None


def test_iteration_cap():
    interp = Interpreter(MonitorOptions(cap=50))
    with pytest.raises(EvalError, match="iteration cap of 50"):
        interp.eval(expr_from_text("(while #t (invariant true) (void))"), interp.globals)
    assert [e.kind for e in interp.events] == ["iteration-cap"]


def test_invariant_checked_at_every_head_and_at_exit():
    interp = Interpreter()
    text = "(local [(define k 3)] (begin (while (> k 0) (invariant (>= k 1)) (set! k (sub1 k))) k))"
    assert interp.eval(expr_from_text(text), interp.globals) == 0
    (e,) = interp.events
    assert e.kind == "invariant-violation" and e.iteration == 3 and e.env == {"k": "0"}


def test_variant_events_reported_once_per_run():
    interp = Interpreter()
    text = "(local [(define k 5)] (begin (while (> k 0) (invariant true) (variant (- 3 k)) (set! k (sub1 k))) k))"
    interp.eval(expr_from_text(text), interp.globals)
    kinds = sorted(e.kind for e in interp.events)
    assert kinds == ["variant-nondecreasing", "variant-nonpositive"]


def test_monitor_off_records_nothing():
    interp = Interpreter(MonitorOptions(enabled=False))
    text = "(local [(define k 3)] (begin (while (> k 0) (invariant (> k 5)) (set! k (sub1 k))) k))"
    assert interp.eval(expr_from_text(text), interp.globals) == 0
    assert interp.events == []


def test_strict_mode_stops_the_test():
    p = load("fact-wrong-order")
    lax = run_program(p)
    strict = run_program(p, MonitorOptions(strict=True))
    assert lax.events
    assert all(not t.passed for t in strict.tests if t.error)
    assert any(t.error for t in strict.tests)


def test_errors_are_per_test_and_requires_is_monitored():
    p = parse_source(
        "(define (f x) (+ x 1)) (contract f (requires (> x 0)))"
        "(check-expect (f 0) 1) (check-expect (f (vector-ref (vector) 0)) 1) (check-expect (f 2) 3)"
    )
    r = run_program(p)
    assert [t.passed for t in r.tests] == [True, False, True]
    assert "out of range" in r.tests[1].error
    (e,) = r.events
    assert e.kind == "assert-failure" and "requires of f" in e.detail


def test_assert_failure_event():
    interp = Interpreter()
    interp.eval(expr_from_text("(local [(define k 1)] (assert (> k 2)))"), interp.globals)
    assert [e.kind for e in interp.events] == ["assert-failure"]


def test_vectors_print_and_compare_structurally_in_tests():
    assert print_value(Vector([1, 2])) == "(vector 1 2)"
    r = run_program(parse_source("(check-expect (vector 1 2) (vector 1 2))"))
    assert r.all_passed


def test_eval_formula_sorted_and_bigops():
    store = {"V": Vector([1, 3, 3, 2]), "n": 4}
    assert eval_formula(formula_from_text("(sorted V 0 2)"), store)
    assert not eval_formula(formula_from_text("(sorted V 0 3)"), store)
    assert eval_formula(formula_from_text("(sorted V 3 2)"), store)
    assert eval_formula(formula_from_text("(= (prod (i 1 n) i) 24)"), store)
    assert eval_formula(formula_from_text("(= (sum (i 1 0) i) 0)"), store)


def test_loop_head_trace_on_state_helper_free_program():
    interp = Interpreter(MonitorOptions(record_heads=True))
    interp.load(load("fact-while").defs, interp.globals)
    interp.call("fact", 2)
    assert [h.iteration for h in interp.heads] == [0, 1, 2]


def test_env_cap_variable(monkeypatch):
    from loopsmith.interp import default_cap
    monkeypatch.setenv("LOOPSMITH_CAP", "123")
    assert default_cap() == 123
    assert MonitorOptions().cap == 123
