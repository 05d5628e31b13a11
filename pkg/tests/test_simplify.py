import itertools
import random

import pytest

from strategies import formula, term
from loopsmith.hoare import simplify
from loopsmith.hoare.fm import infeasible
from loopsmith.hoare.poly import Poly, make_lit, to_poly, to_term
from loopsmith.hoare.simplify import Simplifier
from loopsmith.interp import eval_formula, eval_term
from loopsmith.printer import show
from loopsmith.reader import formula_from_text as F, term_from_text as T
from loopsmith.syntax import TVar


# -- polynomials and literals ----------------------------------------------

def test_polynomial_normal_form():
    assert show(simplify(T("(+ (* 2 x) (- x 3) 1)"))) == "3·x - 2"
    assert simplify(T("(* (+ x 1) (- x 1))")) == simplify(T("(- (* x x) 1)"))
    assert to_term(to_poly(T("(- 0 x)"))) == simplify(T("(- 5 (+ x 5))"))


def test_literal_tightening():
    assert make_lit(">=", to_poly(T("(- (* 2 x) 3)"))) == make_lit(">=", to_poly(T("(- x 2)")))
    assert make_lit("=", to_poly(T("(- (* 2 x) 3)"))) is False
    assert make_lit("<", Poly.const(-1)) is True


def test_fourier_motzkin_integer_reasoning():
    x = Poly.atom(TVar("x"))
    lits = [make_lit(">", x - Poly.const(2)), make_lit("<", x - Poly.const(3))]
    assert infeasible(lits)
    assert not infeasible([make_lit(">=", x)])
    y = Poly.atom(TVar("y"))
    chain = [make_lit("<", x - y), make_lit("<", y - x)]
    assert infeasible(chain)


# -- big operators ------------------------------------------------------------

@pytest.mark.parametrize("src, want", [
    ("(prod (i (+ n 1) n) i)", "1"),
    ("(sum (i 3 2) i)", "0"),
    ("(prod (i 4 4) (+ i 1))", "5"),
    ("(sum (j 1 n) j)", "(sum (i 1 n) i)"),
])
def test_range_rules(src, want):
    assert simplify(T(src), mode="sound") == simplify(T(want), mode="sound")


def test_absorption_needs_range_in_sound_mode():
    t = T("(* k (prod (i (+ k 1) n) i))")
    grown = simplify(T("(prod (i k n) i)"))
    assert simplify(t, mode="sound") != grown
    assert simplify(t, mode="sound", context=F("(<= k n)")) == grown
    assert simplify(t, mode="sound", context=F("(and (> k 0) (< k n))")) == grown
    notes = []
    assert simplify(t, mode="lenient", notes=notes) == grown
    assert [show(n) for n in notes] == ["k ≤ n"]


def test_absorption_repeats_and_divides_polynomials():
    t = T("(* (+ k 1) k (prod (i (+ k 2) n) i))")
    assert simplify(t) == simplify(T("(prod (i k n) i)"))


def test_unfold_cancels_neighbouring_products():
    ctx = F("(and (>= k 1) (<= (+ k 2) n))")
    t = T("(- (prod (i k n) i) (* k (+ k 1) (prod (i (+ k 2) n) i)))")
    assert simplify(t, mode="sound", context=ctx) == T("0")


def test_sorted_trivial_ranges():
    assert simplify(F("(sorted V 3 3)")) == F("true")
    assert simplify(F("(sorted V (+ h 1) h)")) == F("true")
    assert simplify(F("(sorted V lo hi)")) == F("(sorted V lo hi)")


# -- boolean structure ----------------------------------------------------------

@pytest.mark.parametrize("src, want", [
    ("(and (>= x 3) (<= x 3))", "(= x 3)"),
    ("(and (> x 2) (< x 3))", "false"),
    ("(or (> x 2) (<= x 2))", "true"),
    ("(not (not (= x 1)))", "(= x 1)"),
    ("(and (>= (* 2 x) 3) (<= x 1))", "false"),
    ("(implies (= k 0) (= k 0))", "true"),
    ("(and (>= x 0) (not (= x 0)))", "(> x 0)"),
    ("(not (< x 1))", "(>= x 1)"),
])
def test_boolean_rules(src, want):
    assert simplify(F(src)) == simplify(F(want))


def test_idempotent_on_random_formulas():
    rng = random.Random(8)
    for _ in range(300):
        f = Simplifier("sound").formula(formula(rng, 2))
        assert Simplifier("sound").formula(f) == f


# -- semantic preservation -------------------------------------------------------

def test_sound_simplify_agrees_on_exhaustive_small_stores():
    rng = random.Random(12)
    stores = [dict(zip("xyz", v)) for v in itertools.product(range(-2, 4), repeat=3)]
    checked = 0
    for _ in range(150):
        f = formula(rng, 2)
        g = simplify(f, mode="sound")
        for s in stores[::7]:
            assert eval_formula(f, s) == eval_formula(g, s), (show(f), show(g), s)
            checked += 1
    assert checked >= 1000


def test_term_simplification_agrees():
    rng = random.Random(13)
    for _ in range(400):
        t = term(rng, 3)
        u = simplify(t, mode="sound")
        s = {v: rng.randint(-3, 6) for v in "xyz"}
        assert eval_term(t, s) == eval_term(u, s), (show(t), show(u), s)


def test_lenient_simplify_agrees_where_side_conditions_hold():
    rng = random.Random(14)
    hits = 0
    for _ in range(400):
        f = formula(rng, 2)
        notes = []
        g = simplify(f, mode="lenient", notes=notes)
        for _ in range(4):
            s = {v: rng.randint(-3, 6) for v in "xyz"}
            if all(eval_formula(n, s) for n in notes):
                assert eval_formula(f, s) == eval_formula(g, s)
                hits += 1
    assert hits > 500
