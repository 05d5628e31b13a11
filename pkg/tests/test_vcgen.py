import json

import pytest

from conftest import load
from loopsmith.hoare import (
    Translator, check_program, find_loops, simplify, sp_trace, verify_loop, wp,
)
from loopsmith.hoare.translate import Unsupported
from loopsmith.printer import show
from loopsmith.reader import expr_from_text as E, formula_from_text as F, parse_source
from loopsmith.syntax import TRUE


def test_wp_of_assignments_is_right_to_left():
    stmts = [E("(set! accum (* k accum))"), E("(set! k (sub1 k))")]
    got = wp(stmts, F("(= accum (prod (i (+ k 1) n) i))"))
    assert got == F("(= (* k accum) (prod (i (+ (sub1 k) 1) n) i))")


def test_wp_of_assert_and_contract_call():
    assert wp([E("(assert (> x 0))")], F("(= y 1)")) == F("(and (> x 0) (= y 1))")
    p = load("insertion-sort")
    from loopsmith.hoare import program_translator
    tr = program_translator(p)
    pre = wp([E("(insert! h (sub1 high))")], F("(sorted V h high)"), tr)
    text = show(simplify(pre))
    assert text.startswith("sorted(V[h + 1..high])") and "V#" in text


def test_translator_rejects_vector_mutation():
    with pytest.raises(Unsupported):
        Translator().stmts([E("(vector-set! V 0 1)")])


def test_drag_trace_reproduces_hand_written_chain():
    body = [E("(set! accum (* k accum))"), E("(set! k (sub1 k))")]
    pre = F("(and (>= k 0) (= accum (prod (i (+ k 1) n) i)) (not (= k 0)))")
    trace = sp_trace(pre, body)
    shown = [show(p.formula) for p in trace.points]
    assert shown == [
        "k > 0 ∧ accum = Π_{i=k + 1}^{n} i",
        "k > 0 ∧ accum = Π_{i=k}^{n} i",
        "k ≥ 0 ∧ accum = Π_{i=k + 1}^{n} i",
    ]
    lines = trace.text().splitlines()
    assert lines[1] == "(set! accum (* k accum))" and lines[0].startswith(";; ")
    assert len(trace.to_json()) == 3


def test_wrong_order_chain_ends_with_k_plus_2():
    body = [E("(set! k (sub1 k))"), E("(set! accum (* k accum))")]
    pre = F("(and (>= k 0) (= accum (prod (i (+ k 1) n) i)) (not (= k 0)))")
    last = sp_trace(pre, body).points[-1]
    assert show(last.formula) == "k ≥ 0 ∧ accum = k·Π_{i=k + 2}^{n} i"


def _loop(name):
    (site,) = [s for s in find_loops(load(name)) if s.loop is not None][:1]
    return site


def test_verify_loop_modes():
    site = _loop("fact-while")
    lenient = verify_loop(site.init, site.loop, site.post, "lenient", site.hypothesis)
    sound = verify_loop(site.init, site.loop, site.post, "sound", site.hypothesis)
    assert lenient.verified and lenient.advisories
    assert sound.verdict("preservation") == "refuted"
    strong = _loop("fact-while-strong")
    r = verify_loop(strong.init, strong.loop, strong.post, "sound", strong.hypothesis)
    assert r.verified and not r.advisories


def test_vc_origins_are_complete():
    (r,) = check_program(load("fact-while"))
    assert [v.origin for v in r.vcs] == [
        "initialization", "preservation", "preservation", "postcondition",
        "variant-decrease", "variant-bounded",
    ]


def test_pinpoint_and_residual_on_state_helper():
    (r,) = check_program(load("fact-state-left"))
    assert r.kind == "state"
    (bad,) = [v for v in r.vcs if v.verdict != "proved"]
    assert bad.statement == 2 and bad.statement_text == "(set! accum (* k accum))"
    assert show(bad.residual) == "k·Π_{i=k + 2}^{n} i = Π_{i=k + 1}^{n} i"


def test_loop_discovery():
    kinds = {(s.function, s.kind) for s in find_loops(load("insertion-sort"))}
    assert kinds == {("sort!", "while"), ("insert!", "while")}
    assert find_loops(load("fact-structural")) == []
    assert [s.kind for s in find_loops(load("fact-state-right"))] == ["state"]


def test_insert_loop_is_not_checkable_but_sort_loop_is():
    reports = {r.function: r for r in check_program(load("insertion-sort"))}
    assert not reports["insert!"].checkable
    assert "vector-set!" in reports["insert!"].unsupported
    assert reports["sort!"].verified


def test_function_filter():
    assert [r.function for r in check_program(load("insertion-sort"), function="sort!")] == ["sort!"]
    assert check_program(load("insertion-sort"), function="nope") == []


def test_report_serialization_is_stable():
    (r,) = check_program(load("fact-wrong-order"))
    a = json.dumps(r.to_json(), ensure_ascii=False)
    (r2,) = check_program(load("fact-wrong-order"))
    assert a == json.dumps(r2.to_json(), ensure_ascii=False)
    doc = json.loads(a)
    assert doc["verified"] is False
    refuted = [v for v in doc["vcs"] if v["verdict"] == "refuted"]
    assert refuted[0]["statement"] == 2 and refuted[0]["counterexample"]


def test_missing_precondition_breaks_initialization_only():
    p = parse_source(
        "(define (f n) (local [(define k (void))]"
        " (begin (set! k n) (while (> k 0) (invariant (>= k 0)) (set! k (sub1 k)))"
        " (assert (= k 0)) k)))"
    )
    (r,) = check_program(p)
    assert r.verdict("postcondition") == "proved"
    assert r.verdict("initialization") == "refuted"
    p_ok = parse_source(
        "(define (f n) (local [(define k (void))]"
        " (begin (set! k n) (while (> k 0) (invariant (>= k 0)) (set! k (sub1 k))) k)))"
        "(contract f (requires (>= n 0)))"
    )
    (r,) = check_program(p_ok)
    assert r.verified
