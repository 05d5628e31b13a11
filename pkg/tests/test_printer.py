import random

import pytest

from conftest import CORPUS
from strategies import formula, term
from loopsmith.printer import formula_sexpr, print_program, show, term_sexpr
from loopsmith.reader import formula_from_text, parse_source, term_from_text


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.rkt")), ids=lambda p: p.stem)
def test_program_round_trip(path):
    p = parse_source(path.read_text(encoding="utf-8"))
    text = print_program(p)
    q = parse_source(text)
    assert q == p
    assert print_program(q) == text


def test_comments_survive_printing():
    text = print_program(parse_source((CORPUS / "fact-while.rkt").read_text()))
    assert "; Purpose: To compute the factorial" in text
    assert "; natnum" in text


def test_random_terms_and_formulas_round_trip():
    rng = random.Random(11)
    for _ in range(300):
        t = term(rng, 3)
        assert term_from_text(term_sexpr(t)) == t
        f = formula(rng, 2)
        assert formula_from_text(formula_sexpr(f)) == f


@pytest.mark.parametrize("src, shown", [
    ("(prod (i (+ k 1) n) i)", "Π_{i=k + 1}^{n} i"),
    ("(sum (j 1 n) (* j j))", "Σ_{j=1}^{n} (j·j)"),
    ("(- a (- b c))", "a - (b - c)"),
    ("(* (+ a 1) b)", "(a + 1)·b"),
    ("(vref V (add1 i))", "V[i + 1]"),
])
def test_math_notation_terms(src, shown):
    assert show(term_from_text(src)) == shown


def test_math_notation_formulas():
    f = formula_from_text("(and (>= k 0) (implies (not (= k 0)) (sorted V lo hi)))")
    assert show(f) == "k ≥ 0 ∧ (k ≠ 0 ⇒ sorted(V[lo..hi]))"
