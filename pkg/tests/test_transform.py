import random

import pytest

from conftest import load
from loopsmith.interp import Interpreter, run_program
from loopsmith.printer import print_program
from loopsmith.reader import expr_from_text, parse_source
from loopsmith.syntax import Local, SetBang, While, walk
from loopsmith.transform import (
    TransformError, analyze_tail, derive_driver, find_function, parse_ordering,
    registerize, to_state, to_while, whileify,
)


def _calls(p, fn, args):
    interp = Interpreter()
    interp.load(p.defs, interp.globals)
    return [interp.call(fn, *a) for a in args]


def test_tail_analysis():
    assert analyze_tail(load("fact-accum"), "fact-accum").iterative
    t = analyze_tail(load("fact-structural"), "fact")
    assert not t.iterative and t.delayed_ops == ("*",)


def test_registerize_names_and_updates():
    q = registerize(load("fact-accum"), "fact-accum", "safe")
    helper = find_function(q, "fact-state")
    assert helper.params == ()
    text = print_program(q)
    assert "(define k (void))" in text and "(define accum (void))" in text
    assert run_program(q).all_passed


def test_state_variables_get_type_notes_from_signature():
    q = registerize(load("fact-accum"), "fact-accum")
    local = q.defs[0].body
    notes = {d.name: d.type_note for d in local.defs if hasattr(d, "type_note")}
    assert notes == {"k": "natnum", "accum": "natnum"}


def test_naive_ordering_breaks_factorial_and_safe_does_not():
    p = load("fact-accum")
    safe, _ = to_while(p, "fact-accum", "safe")
    naive, _ = to_while(p, "fact-accum", "naive")
    assert _calls(safe, "fact", [(3,)]) == [6]
    assert _calls(naive, "fact", [(3,)]) != [6]


def test_explicit_ordering_matches_left_and_right_versions():
    p = load("fact-accum")
    right = registerize(p, "fact-accum", ["accum", "k"])
    left = registerize(p, "fact-accum", ["k", "accum"])
    assert _calls(right, "fact", [(4,)]) == [24]
    assert _calls(left, "fact", [(4,)]) != [24]


def test_whileify_shape():
    q = whileify(registerize(load("fact-accum"), "fact-accum"), "fact-state")
    loops = [x for d in q.defs if hasattr(d, "body") for x in walk(d.body) if isinstance(x, While)]
    (loop,) = loops
    assert print_program(parse_source(print_program(q))) == print_program(q)
    assert loop.driver == expr_from_text("(not (= k 0))")
    # the accumulator invariant travels with the loop
    assert "prod" in print_program(q)
    assert loop.variant is not None


def test_to_while_on_state_program():
    q, name = to_while(load("fact-state-right"), "fact-state")
    assert name == "fact-while"
    assert run_program(q).all_passed


def test_driver_derivation():
    assert derive_driver([expr_from_text("(= k 0)")]) == expr_from_text("(not (= k 0))")
    assert derive_driver([expr_from_text("(not (< h l))")]) == expr_from_text("(< h l)")
    both = derive_driver([expr_from_text("(= k 0)"), expr_from_text("(> j 9)")])
    assert both == expr_from_text("(not (or (= k 0) (> j 9)))")


def test_refuses_non_tail_recursion():
    with pytest.raises(TransformError, match="delayed operation"):
        to_while(load("fact-structural"), "fact")


def test_refuses_two_recursive_branches_and_names_one():
    p = parse_source("(define (h a) (cond [(= a 0) 0] [(= a 1) (h 0)] [else (h (- a 2))]))")
    with pytest.raises(TransformError) as info:
        to_while(p, "h")
    assert "recursive branch" in str(info.value)


def test_unknown_function_and_bad_ordering():
    with pytest.raises(TransformError):
        to_state(load("fact-accum"), "nope")
    with pytest.raises(TransformError):
        parse_ordering(" , ")
    assert parse_ordering("accum,k") == ["accum", "k"]


def test_top_level_helper_is_wrapped():
    p = parse_source(
        "(define (fib-acc n a b) (if (= n 0) a (fib-acc (sub1 n) b (+ a b))))"
        "(check-expect (fib-acc 10 0 1) 55)"
    )
    q, _ = to_while(p, "fib-acc")
    assert run_program(q).all_passed
    assert any(isinstance(x, Local) for x in walk(q.defs[0].body))


def test_cycles_use_a_temporary():
    p = parse_source("(define (swap n a b) (if (= n 0) (- a b) (swap (sub1 n) b a)))")
    q, _ = to_state(p, "swap")
    sets = [x for x in walk(q.defs[0].body) if isinstance(x, SetBang)]
    assert any(s.target.endswith("-old") for s in sets)
    assert _calls(q, "swap", [(n, 5, 2) for n in range(4)]) == _calls(p, "swap", [(n, 5, 2) for n in range(4)])


# ---------------------------------------------------------------------------
# property: safe registerization preserves meaning


def _random_helper(rng):
    nparams = rng.randint(1, 3)
    params = ["a", "b", "c"][:nparams]
    terms = params + ["1", "2"]

    def lin():
        x, y = rng.choice(terms), rng.choice(terms)
        return rng.choice([x, f"(+ {x} {y})", f"(- {x} {y})", f"(* 2 {x})"])

    updates = ["(sub1 n)"] + [lin() for _ in params]
    result = rng.choice(params + [f"(+ {params[0]} {params[-1]})"])
    src = (
        f"(define (h n {' '.join(params)}) "
        f"(if (<= n 0) {result} (h {' '.join(updates)})))"
    )
    return parse_source(src), nparams


@pytest.mark.parametrize("seed", range(60))
def test_safe_registerize_agrees_with_recursion(seed):
    rng = random.Random(seed)
    p, nparams = _random_helper(rng)
    args = [(n, *[rng.randint(-3, 3) for _ in range(nparams)]) for n in range(9)]
    want = _calls(p, "h", args)
    state, _ = to_state(p, "h")
    loop, _ = to_while(p, "h")
    assert _calls(state, "h", args) == want
    assert _calls(loop, "h", args) == want
