import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freedyn.errors import DomainError, MalformedInputError
from freedyn.freegroup import (
    CyclicWord,
    GroupContext,
    Word,
    count_occurrences,
    cyclic_core_array,
    cyclic_length,
    cyclic_reduce,
    cyclic_word,
    reduce,
    reduce_array,
    window_counts,
    word_length,
)

from .conftest import nontrivial_words, raw_words


def naive_reduce(raw):
    out = list(raw)
    changed = True
    while changed:
        changed = False
        for i in range(len(out) - 1):
            if out[i] == out[i + 1] ^ 1:
                del out[i:i + 2]
                changed = True
                break
    return tuple(out)


def test_reduce_examples(F2):
    p = F2.parse
    assert reduce(p("a a' b").letters) == p("b")
    assert reduce([]) == Word(())
    assert F2.format(reduce(p("a b b' a").letters)) == "a a"


def test_parse_accepts_both_inverse_notations(F2):
    assert F2.parse("a^-1 b") == F2.parse("a' b") == F2.parse("a'b")
    assert F2.parse("1").is_identity and F2.parse("").is_identity
    with pytest.raises(MalformedInputError):
        F2.parse("a z")


def test_context_validation():
    with pytest.raises(DomainError):
        GroupContext(("a",))
    with pytest.raises(DomainError):
        GroupContext(("a", "a"))


@given(raw_words(3))
def test_reduce_matches_naive(raw):
    w = reduce(raw)
    assert w.letters == naive_reduce(raw)
    assert all(x != y ^ 1 for x, y in zip(w.letters, w.letters[1:]))


@given(raw_words(3, 200))
def test_reduce_array_matches_reduce(raw):
    assert tuple(reduce_array(np.array(raw, dtype=np.int64)).tolist()) == reduce(raw).letters


def test_reduce_array_deep_nesting():
    x = np.array(list(range(0, 40, 2)) + [c ^ 1 for c in reversed(range(0, 40, 2))], dtype=np.int64)
    assert reduce_array(x).size == 0


def test_cyclic_reduce_examples(F2):
    p = F2.parse
    core, conj = cyclic_reduce(p("b a b'"))
    assert core == cyclic_word(p("a")) and conj == p("b")
    core, conj = cyclic_reduce(p("a b a b"))
    assert F2.format(core.as_word()) == "a b a b" and conj.is_identity
    core, conj = cyclic_reduce(p("a' b a"))
    assert core == cyclic_word(p("b")) and conj == p("a'")


@given(nontrivial_words(3))
def test_cyclic_reduce_conjugation_identity(w):
    core, conj = cyclic_reduce(w)
    rebuilt = conj * core.as_word() * conj.inverse()
    # The core is stored at its canonical rotation, so compare up to rotation.
    assert cyclic_word(rebuilt) == core
    k = len(core)
    rotations = {core.letters[i:] + core.letters[:i] for i in range(k)}
    stripped = reduce(conj.inverse().letters + w.letters + conj.letters).letters
    assert stripped in rotations


@given(nontrivial_words(3), st.integers(0, 20))
def test_cyclic_word_rotation_and_conjugation_invariant(w, k):
    W = cyclic_word(w)
    if len(W):
        core = W.letters
        k %= len(core)
        assert cyclic_word(Word(core[k:] + core[:k])) == W
    g = Word((k % 6,))
    assert cyclic_word(g * w * g.inverse()) == W


def test_counting_examples(F2):
    p = F2.parse
    W = cyclic_word(p("a b a b"))
    assert count_occurrences(p("a"), W) == 2
    assert count_occurrences(p("a b"), W) == 2
    assert count_occurrences(p("a'"), W) == 2
    assert word_length(p("a b a b")) == 4
    assert cyclic_length(p("b a b'")) == 1
    assert cyclic_length(Word(())) == 0
    with pytest.raises(DomainError):
        count_occurrences(Word(()), W)


@given(nontrivial_words(2, 12), nontrivial_words(2, 4))
def test_count_matches_brute_force(w, v):
    W = cyclic_word(w)
    n = len(W)
    if n == 0:
        return

    def brute(u):
        return sum(
            all(W.letters[(i + j) % n] == u[j] for j in range(len(u))) for i in range(n)
        )

    assert count_occurrences(v, W) == brute(v.letters) + brute(v.inverse().letters)


@given(nontrivial_words(3, 40), st.integers(1, 4))
def test_window_counts_total(w, L):
    x = cyclic_core_array(np.array(w.letters, dtype=np.int64))
    assert window_counts(x, L, 6).sum() == x.size


def test_cyclic_word_canonical_is_least_rotation():
    W = cyclic_word(Word((2, 0, 2, 0)))
    assert W == CyclicWord((0, 2, 0, 2))
