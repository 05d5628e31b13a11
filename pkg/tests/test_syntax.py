import random

import pytest
from hypothesis import given, settings, strategies as st

from strategies import term
from loopsmith.interp import eval_term
from loopsmith.reader import expr_from_text, formula_from_text, term_from_text
from loopsmith.syntax import (
    IntLit, TRUE, TVar, conj, conjuncts, free_vars, fresh_name, map_expr,
    substitute, substitute_many, vector_names,
)


def test_free_vars_respect_binders():
    t = term_from_text("(prod (i (+ k 1) n) (+ i m))")
    assert free_vars(t) == {"k", "n", "m"}
    assert free_vars(formula_from_text("(sorted V lo (vref W i))")) == {"V", "W", "lo", "i"}


def test_substitution_avoids_capture():
    t = term_from_text("(sum (i 1 n) (* i k))")
    out = substitute(t, "k", TVar("i"))
    assert out.index != "i"
    store = {"n": 3, "i": 5}
    assert eval_term(out, store) == sum(j * 5 for j in range(1, 4))


def test_substitution_leaves_bound_index_alone():
    t = term_from_text("(prod (i 1 i2) i)")
    assert substitute(t, "i", TVar("z")) == t


def test_vector_names_only_rename():
    f = formula_from_text("(sorted V 0 (vlen V))")
    assert substitute(f, "V", TVar("V#")) == formula_from_text("(sorted V# 0 (vlen V#))")
    with pytest.raises(ValueError):
        substitute(f, "V", term_from_text("(+ a 1)"))
    assert vector_names(f) == {"V"}


def test_simultaneous_substitution_swaps():
    f = formula_from_text("(< x y)")
    assert substitute_many(f, {"x": TVar("y"), "y": TVar("x")}) == formula_from_text("(< y x)")


def test_fresh_name():
    assert fresh_name("k", {"n"}) == "k"
    assert fresh_name("k", {"k", "k1"}) == "k2"


def test_conj_and_conjuncts():
    a, b = formula_from_text("(> k 0)"), formula_from_text("(= a 1)")
    assert conj([]) == TRUE
    assert conj([TRUE, a]) == a
    assert conjuncts(conj([a, conj([b, TRUE])])) == [a, b]


def test_map_expr_bottom_up():
    e = expr_from_text("(+ 1 (* 2 3))")
    bumped = map_expr(e, lambda x: IntLit(x.value + 1) if isinstance(x, IntLit) else x)
    assert bumped == expr_from_text("(+ 2 (* 3 4))")


def test_positions_do_not_affect_equality():
    assert expr_from_text("(f  x)") == expr_from_text("\n\n(f x)")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3))
def test_substitution_is_semantic(seed, x, y, z):
    rng = random.Random(seed)
    t, r = term(rng, 2), term(rng, 1, bigops=False)
    store = {"x": x, "y": y, "z": z}
    inner = dict(store, x=eval_term(r, store))
    assert eval_term(substitute(t, "x", r), store) == eval_term(t, inner)
