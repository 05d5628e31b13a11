import random

import pytest

from strategies import formula
from loopsmith.hoare import check_entailment, entails, find_counterexample
from loopsmith.interp import eval_formula
from loopsmith.reader import formula_from_text as F


@pytest.mark.parametrize("hyp, goal", [
    ("(and (>= x 0) (<= x 5))", "(< x 6)"),
    ("(and (> k 0) (= accum (prod (i (+ k 1) n) i)) (<= k n))", "(= (* k accum) (prod (i k n) i))"),
    ("(and (= a (+ b 1)) (> b 3))", "(> a 4)"),
    ("(and (sorted V lo hi) (<= lo m))", "(sorted V m hi)"),
    ("(< h l)", "(sorted V l h)"),
    ("(or (= x 1) (= x 2))", "(and (>= x 1) (<= x 2))"),
    ("(>= x 0)", "(or (> x 0) (= x 0))"),
    ("(= x 3)", "(implies (> y x) (> y 3))"),
    ("(and (> k 0) (= v@pre k))", "(< (sub1 k) v@pre)"),
])
def test_proved(hyp, goal):
    assert entails(F(hyp), F(goal), "sound") == "proved"


@pytest.mark.parametrize("hyp, goal", [
    ("(>= x 0)", "(> x 0)"),
    ("(and (> k 0) (= accum (prod (i (+ k 1) n) i)))", "(= (* (sub1 k) accum) (prod (i k n) i))"),
    ("true", "(< x y)"),
])
def test_refuted_with_witness(hyp, goal):
    r = check_entailment(F(hyp), F(goal))
    assert r.verdict == "refuted"
    cex = r.counterexample
    assert eval_formula(F(hyp), cex) and not eval_formula(F(goal), cex)


def test_lenient_records_side_conditions():
    hyp = F("(and (> k 0) (= accum (prod (i (+ k 1) n) i)))")
    goal = F("(= (* k accum) (prod (i k n) i))")
    assert entails(hyp, goal, "sound") != "proved"
    r = check_entailment(hyp, goal, "lenient")
    assert r.verdict == "proved"
    assert r.side_conditions == [F("(<= k n)")]


def test_unknown_when_no_small_witness():
    r = check_entailment(F("(>= x 0)"), F("(>= (* x x) 0)"))
    assert r.verdict in ("proved", "unknown")
    assert check_entailment(F("(sorted V 0 h)"), F("(sorted V 0 (+ h 1))")).verdict == "unknown"


def test_counterexample_search_bounds():
    assert find_counterexample(F("(> x 100)"), F("false")) is None
    assert find_counterexample(F("true"), F("(< (+ a b c d) 100)")) is None  # too many variables
    assert find_counterexample(F("true"), F("(> x 0)")) == {"x": 0}


def test_refuted_is_always_backed_by_a_witness():
    rng = random.Random(21)
    names = ("x", "y")
    refuted = 0
    for _ in range(300):
        hyp, goal = formula(rng, 1, names, bigops=False), formula(rng, 1, names, bigops=False)
        r = check_entailment(hyp, goal, "sound")
        if r.verdict == "refuted":
            refuted += 1
            assert eval_formula(hyp, r.counterexample) and not eval_formula(goal, r.counterexample)
    assert refuted > 20


def test_proved_is_never_contradicted_on_small_stores():
    rng = random.Random(22)
    names = ("x", "y")
    proved = 0
    for _ in range(300):
        hyp, goal = formula(rng, 1, names, bigops=True), formula(rng, 1, names, bigops=True)
        if check_entailment(hyp, goal, "sound").verdict != "proved":
            continue
        proved += 1
        for a in range(-3, 5):
            for b in range(-3, 5):
                s = {"x": a, "y": b}
                if eval_formula(hyp, s):
                    assert eval_formula(goal, s)
    assert proved > 20
