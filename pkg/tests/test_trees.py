from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from freedyn import currents as cur
from freedyn.automorphism import apply, compose, identity
from freedyn.errors import DomainError, MalformedInputError
from freedyn.freegroup import GroupContext, Word, cyclic_length, cyclic_word
from freedyn.trees import (
    MarkedMetricRose,
    act,
    cayley_tree,
    default_test_set,
    length_spectrum,
    pair,
    spectrum_distance,
    translation_length,
    tree_from_document,
    tree_to_document,
)

from .conftest import nontrivial_words


def test_translation_length_examples(F2):
    p = F2.parse
    assert translation_length(cayley_tree(F2), p("a b a b")) == 4
    assert translation_length(MarkedMetricRose(F2, (2, 1)), p("a b a b")) == 6
    assert translation_length(MarkedMetricRose(F2, (2, 1)), Word(())) == 0


def test_rose_validation(F2):
    with pytest.raises(DomainError):
        MarkedMetricRose(F2, (1, 0))
    with pytest.raises(DomainError):
        MarkedMetricRose(F2, (1, 1, 1))


def test_act_examples(F2, fib, shear):
    p = F2.parse
    T = cayley_tree(F2)
    assert translation_length(act(T, identity(F2)), p("a b'")) == 2
    assert translation_length(act(T, fib), p("a")) == 2
    T2 = MarkedMetricRose(F2, (3, 2))
    left = act(act(T2, fib), shear)
    right = act(T2, compose(fib, shear))
    for s in ("a", "b", "a b", "a b'", "a a b'"):
        assert translation_length(left, p(s)) == translation_length(right, p(s))


def test_pair_examples(F2):
    p = F2.parse
    assert pair(MarkedMetricRose(F2, (2, 1)), cur.counting_current(F2, p("a b a b"), 2)) == 6
    assert pair(cayley_tree(F2), cur.uniform_current(F2, 2)) == Fraction(1, 2)


@given(nontrivial_words(3, 40))
def test_pair_is_cyclic_length(w):
    ctx = GroupContext(("a", "b", "c"))
    assert pair(cayley_tree(ctx), cur.counting_current(ctx, w, 1)) == cyclic_length(w)


@given(nontrivial_words(2, 20), st.tuples(st.integers(1, 9), st.integers(1, 9)))
def test_equivariance(w, lengths):
    ctx = GroupContext(("a", "b"))
    from freedyn.automorphism import Automorphism

    f = Automorphism.from_strings(ctx, {"a": "a b", "b": "a"}, {"a": "b", "b": "b' a"})
    T = MarkedMetricRose(ctx, lengths)
    eta = cur.counting_current(ctx, w, 2)
    assert pair(act(T, f), eta) == pair(T, cur.push_rational(f, eta))


def test_length_spectrum_examples(F2, fib):
    p = F2.parse
    tests = [p("a"), p("b"), p("a b")]
    s = length_spectrum(cayley_tree(F2), tests)
    assert s.values == (1, 1, 2) and s.scale == 2
    s3 = length_spectrum(cayley_tree(F2).scaled(3), tests)
    assert spectrum_distance(s, s3) == 0
    moved = length_spectrum(act(cayley_tree(F2), fib), tests)
    assert moved.values == tuple(cyclic_length(apply(fib, w)) for w in tests)


def test_default_test_set_drops_inverse_classes(F2):
    ts = default_test_set(F2)
    assert len(set(ts)) == len(ts)
    assert all(w.inverse() not in ts or w.inverse() == w for w in ts)
    assert cyclic_word(F2.parse("a")) in ts


def test_tree_document_round_trip(F2, conj_fib):
    T = MarkedMetricRose(F2, (Fraction(3, 7), 2), conj_fib)
    back = tree_from_document(tree_to_document(T))
    assert back.edge_lengths == T.edge_lengths
    assert back.marking.forward == T.marking.forward and back.marking.backward == T.marking.backward
    assert tree_to_document(back) == tree_to_document(T)
    with pytest.raises(MalformedInputError):
        tree_from_document({**tree_to_document(T), "format": "other"})


def test_power_marking_document_is_short(F2, fib):
    from freedyn.automorphism import power

    T = MarkedMetricRose(F2, (Fraction(1, 89), Fraction(1, 55)), power(fib, 17))
    doc = tree_to_document(T)
    assert doc["marking"]["power"] == 17 and doc["marking"]["base"]["images"] == {"a": "a b", "b": "a"}
    back = tree_from_document(doc)
    assert back.marking.forward == T.marking.forward
    assert tree_to_document(back) == doc
    with pytest.raises(MalformedInputError):
        tree_from_document({**doc, "marking": {"images": {"a": "a"}}})
