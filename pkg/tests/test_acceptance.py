"""Acceptance criteria AC1-AC8; the terminal summary prints one PASS/FAIL line for each."""
import json
import math
import random

import pytest

from conftest import load
from strategies import assignments, formula, stores
from loopsmith.cli import main
from loopsmith.hoare import check_program, simplify, wp
from loopsmith.hoare.simplify import Simplifier
from loopsmith.interp import Env, Interpreter, MonitorOptions, Vector, eval_expr, eval_formula, run_program
from loopsmith.printer import term_sexpr
from loopsmith.reader import expr_from_text, formula_from_text, term_from_text
from loopsmith.syntax import Begin, BigProd
from loopsmith.transform import registerize, whileify

FACTORIAL_CORPUS = ("fact-while", "fact-while-strong", "fact-state-right", "fact-homework")


# ---------------------------------------------------------------------------
# AC1


@pytest.mark.acceptance("AC1", "factorial while loop: tests pass, no monitor events, loop-head trace")
def test_ac1_factorial_while_tests_and_trace():
    p = load("fact-while")
    result = run_program(p)
    assert [t.passed for t in result.tests] == [True, True, True]
    assert [t.actual for t in result.tests] == ["1", "6", "24"]
    assert result.events == []

    interp = Interpreter(MonitorOptions(record_heads=True))
    interp.load(p.defs, interp.globals)
    assert interp.call("fact", 4) == 24
    assert interp.events == []
    ks = [h.env["k"] for h in interp.heads]
    accums = [h.env["accum"] for h in interp.heads]
    assert ks == ["4", "3", "2", "1", "0"]
    assert accums == ["1", "4", "12", "24", "24"]


# ---------------------------------------------------------------------------
# AC2


def _preservation(name, mode="lenient"):
    (r,) = check_program(load(name), mode=mode)
    return r


@pytest.mark.acceptance("AC2", "ordering discrimination: right proved, left refuted at k+2, homework proved")
def test_ac2_right_ordering_proved():
    for name in ("fact-state-right", "fact-while"):
        r = _preservation(name)
        assert r.verdict("preservation") == "proved", name


@pytest.mark.acceptance("AC2", "ordering discrimination: right proved, left refuted at k+2, homework proved")
def test_ac2_left_ordering_refuted_with_k_plus_2_residual():
    for name in ("fact-state-left", "fact-wrong-order"):
        r = _preservation(name)
        assert r.verdict("preservation") == "refuted", name
        bad = [v for v in r.by_origin("preservation") if v.verdict == "refuted"]
        assert len(bad) == 1
        vc = bad[0]
        assert vc.statement == 2
        products = [t for t in _bigops(vc.residual) if isinstance(t, BigProd)]
        assert any(term_sexpr(t.lo) == "(+ k 2)" for t in products)
        assert "Π_{i=k + 2}^{n} i" in r.text()
        # the witness really breaks the conjunct
        cex = vc.counterexample
        assert eval_formula(vc.hypothesis, cex) and not eval_formula(vc.goal, cex)


@pytest.mark.acceptance("AC2", "ordering discrimination: right proved, left refuted at k+2, homework proved")
def test_ac2_homework_fix_proved():
    r = _preservation("fact-homework")
    assert r.verified


def _bigops(f):
    from loopsmith.syntax import BigOp
    out = []

    def visit(x):
        if isinstance(x, BigOp):
            out.append(x)
        if hasattr(x, "__dataclass_fields__"):
            for name in x.__dataclass_fields__:
                v = getattr(x, name)
                for y in v if isinstance(v, tuple) else (v,):
                    if hasattr(y, "__dataclass_fields__"):
                        visit(y)
    visit(f)
    return out


# ---------------------------------------------------------------------------
# AC3


@pytest.mark.acceptance("AC3", "transformation fidelity: whileify(registerize(accumulative, [accum, k]))")
def test_ac3_transformation_matches_structural_factorial():
    p = load("fact-accum")
    q = whileify(registerize(p, "fact-accum", ["accum", "k"]), "fact-state")
    result = run_program(q)
    assert result.all_passed and result.events == []

    loop = Interpreter()
    loop.load(q.defs, loop.globals)
    ref = Interpreter()
    ref.load(load("fact-structural").defs, ref.globals)
    for n in range(13):
        got = loop.call("fact", n)
        assert got == ref.call("fact", n) == math.factorial(n)
    assert loop.events == []


# ---------------------------------------------------------------------------
# AC4


@pytest.mark.acceptance("AC4", "rewrite kernel: empty range, absorption, sound simplify on 1000+ stores")
def test_ac4_empty_range_product_is_one():
    assert simplify(term_from_text("(prod (i (+ n 1) n) i)")) == term_from_text("1")
    assert simplify(term_from_text("(prod (i (+ n 1) n) i)"), mode="sound") == term_from_text("1")


@pytest.mark.acceptance("AC4", "rewrite kernel: empty range, absorption, sound simplify on 1000+ stores")
def test_ac4_absorption_side_condition():
    lhs = formula_from_text("(= accum (* k (prod (i (+ k 1) n) i)))")
    want = simplify(formula_from_text("(= accum (prod (i k n) i))"))
    ctx = formula_from_text("(<= k n)")
    assert simplify(lhs, mode="sound", context=ctx) == want
    assert simplify(lhs, mode="sound") != want
    notes = []
    assert simplify(lhs, mode="lenient", notes=notes) == want
    assert notes == [formula_from_text("(<= k n)")]


@pytest.mark.acceptance("AC4", "rewrite kernel: empty range, absorption, sound simplify on 1000+ stores")
def test_ac4_sound_simplify_preserves_meaning():
    rng = random.Random(4)
    checked = 0
    names = ("x", "y", "z")
    for _ in range(400):
        f = formula(rng, 2, names)
        g = Simplifier("sound").formula(f)
        for _ in range(3):
            store = {v: rng.randint(-3, 6) for v in names}
            assert eval_formula(f, store) == eval_formula(g, store), (f, g, store)
            checked += 1
    assert checked >= 1000


# ---------------------------------------------------------------------------
# AC5


def _exec(program, store):
    env = Env(Env(), dict(store))
    eval_expr(program, env)
    return env.vars


@pytest.mark.acceptance("AC5", "wp agrees with execution on 500+ random straight-line programs")
def test_ac5_wp_matches_execution():
    rng = random.Random(5)
    programs = 0
    for _ in range(500):
        pairs = assignments(rng)
        q = formula(rng, 1, bigops=False)
        stmts = [expr_from_text(f"(set! {x} {term_sexpr(t)})") for x, t in pairs]
        program = Begin(tuple(stmts))
        pre = wp(stmts, q)
        for store in stores():
            assert eval_formula(pre, store) == eval_formula(q, _exec(program, store)), (pairs, q, store)
        programs += 1
    assert programs >= 500


# ---------------------------------------------------------------------------
# AC6


@pytest.mark.acceptance("AC6", "insertion sort: tests, 200 random vectors, sort! VCs via the insert! contract")
def test_ac6_insertion_sort_tests_pass():
    result = run_program(load("insertion-sort"))
    assert len(result.tests) == 4 and result.all_passed
    assert result.events == []


@pytest.mark.acceptance("AC6", "insertion sort: tests, 200 random vectors, sort! VCs via the insert! contract")
def test_ac6_random_vectors_match_reference_sort():
    rng = random.Random(6)
    interp = Interpreter()
    interp.load(load("insertion-sort").defs, interp.globals)
    for _ in range(200):
        pool = [rng.randint(-50, 100) for _ in range(4)]
        xs = [rng.choice(pool) if rng.random() < 0.3 else rng.randint(-50, 100)
              for _ in range(rng.randint(0, 16))]
        v = Vector(xs)
        interp.call("ins-vector!", v)
        assert v.items == sorted(xs)
    assert interp.events == []


@pytest.mark.acceptance("AC6", "insertion sort: tests, 200 random vectors, sort! VCs via the insert! contract")
def test_ac6_sort_loop_verified_with_insert_contract():
    (r,) = check_program(load("insertion-sort"), function="sort!")
    assert r.verdict("initialization") == "proved"
    assert r.verdict("postcondition") == "proved"
    assert r.verdict("preservation") == "proved"


# ---------------------------------------------------------------------------
# AC7


@pytest.mark.acceptance("AC7", "termination: stuck sorter diagnosed within the cap, intact variant proved")
def test_ac7_stuck_sorter_diagnosed_within_cap():
    cap = 500
    result = run_program(load("insertion-sort-stuck"), MonitorOptions(cap=cap))
    kinds = {e.kind for e in result.events}
    assert kinds & {"variant-nondecreasing", "iteration-cap"}
    for e in result.events:
        assert e.iteration <= cap
    assert not result.all_passed


@pytest.mark.acceptance("AC7", "termination: stuck sorter diagnosed within the cap, intact variant proved")
def test_ac7_intact_variant_proved():
    (r,) = check_program(load("insertion-sort"), function="sort!")
    assert r.verdict("variant-decrease") == "proved"
    assert r.verdict("variant-bounded") == "proved"
    (stuck,) = check_program(load("insertion-sort-stuck"), function="sort!")
    assert stuck.verdict("variant-decrease") != "proved"


# ---------------------------------------------------------------------------
# AC8


@pytest.mark.acceptance("AC8", "recipe report: 8 steps, machine-checked steps satisfied, exit codes")
@pytest.mark.parametrize("name", FACTORIAL_CORPUS)
def test_ac8_report_on_factorial_corpus(name, tmp_path, capsys):
    from conftest import CORPUS
    out = tmp_path / "report.json"
    code = main(["report", str(CORPUS / f"{name}.rkt"), "--json", str(out)])
    capsys.readouterr()
    assert code == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["version"] == "1.0"
    (fn,) = doc["functions"]
    assert [s["step"] for s in fn["steps"]] == list(range(1, 9))
    status = {s["step"]: s["status"] for s in fn["steps"]}
    for step in (3, 4, 6, 7, 8):
        assert status[step] == "satisfied", (step, fn["steps"][step - 1])


@pytest.mark.acceptance("AC8", "recipe report: 8 steps, machine-checked steps satisfied, exit codes")
def test_ac8_report_on_wrong_ordering(tmp_path, capsys):
    from conftest import CORPUS
    out = tmp_path / "report.json"
    code = main(["report", str(CORPUS / "fact-wrong-order.rkt"), "--json", str(out)])
    capsys.readouterr()
    assert code == 1
    doc = json.loads(out.read_text(encoding="utf-8"))
    steps = doc["functions"][0]["steps"]
    assert len(steps) == 8
    assert steps[5]["status"] == "violated"
