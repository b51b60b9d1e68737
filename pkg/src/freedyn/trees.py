"""Marked metric roses as points of unprojectivized Outer space.

A rose with edge lengths ``l`` and marking ``psi`` assigns to ``g`` the
translation length ``sum of l(x)`` over the letters ``x`` of the cyclic
reduction of ``psi(g)``. Outer automorphisms act on the right by
precomposing the marking.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Mapping, Sequence

import numpy as np

from . import currents as cur
from .automorphism import Assertions, Automorphism, apply, compose, power
from .errors import DomainError, MalformedInputError
from .freegroup import CyclicWord, GroupContext, Word, cyclic_reduce, cyclic_word

DOCUMENT_VERSION = 1


def _exact(x):
    if isinstance(x, (bool, np.bool_)):
        raise DomainError("edge length must be a number")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Real):
        return float(x)
    raise DomainError(f"edge length must be a number, got {x!r}")


@dataclass(frozen=True)
class MarkedMetricRose:
    context: GroupContext
    edge_lengths: tuple
    marking: Automorphism | None = None

    def __post_init__(self):
        lengths = tuple(_exact(x) for x in self.edge_lengths)
        if len(lengths) != self.context.rank:
            raise DomainError(f"need {self.context.rank} edge lengths, got {len(lengths)}")
        if any(not x > 0 for x in lengths):
            raise DomainError(f"edge lengths must be strictly positive: {lengths}")
        object.__setattr__(self, "edge_lengths", lengths)
        if self.marking is not None and self.marking.context != self.context:
            raise DomainError("marking acts on a different group")

    def scaled(self, c) -> "MarkedMetricRose":
        c = _exact(c)
        if not c > 0:
            raise DomainError("scale factor must be positive")
        return MarkedMetricRose(self.context, tuple(c * x for x in self.edge_lengths), self.marking)

    def letter_length(self, code: int):
        return self.edge_lengths[code >> 1]


def cayley_tree(context: GroupContext) -> MarkedMetricRose:
    """The unit-length rose with identity marking."""
    return MarkedMetricRose(context, (1,) * context.rank)


def _weighted_length(T: MarkedMetricRose, letters: Sequence[int]):
    counts = [0] * T.context.rank
    for c in letters:
        counts[c >> 1] += 1
    return sum((n * l for n, l in zip(counts, T.edge_lengths) if n), Fraction(0))


def translation_length(T: MarkedMetricRose, g: Word | CyclicWord):
    w = g.as_word() if isinstance(g, CyclicWord) else g
    if T.marking is not None:
        w = apply(T.marking, w)
    core, _ = cyclic_reduce(w)
    return _weighted_length(T, core.letters)


def act(T: MarkedMetricRose, phi: Automorphism) -> MarkedMetricRose:
    """Right action: the new marking applies ``phi`` first, then the old marking."""
    marking = phi if T.marking is None else compose(T.marking, phi)
    return MarkedMetricRose(T.context, T.edge_lengths, marking)


def pair(T: MarkedMetricRose, mu: cur.TruncatedCurrent):
    """Intersection form on the rose slice.

    With identity marking this is ``sum l(x) <x, mu>`` over basis letters; a
    non-trivial marking is moved onto the current, which must be rational.
    """
    if mu.context != T.context:
        raise DomainError("tree and current live on different groups")
    if T.marking is not None:
        mu = cur.push_rational(T.marking, mu)
    return sum((l * mu.weight((2 * i,)) for i, l in enumerate(T.edge_lengths)), Fraction(0))


@dataclass(frozen=True)
class LengthSpectrum:
    test_set: tuple[CyclicWord, ...]
    values: tuple
    scale: object

    @property
    def normalized(self) -> np.ndarray:
        return np.array([float(v) for v in self.values]) / float(self.scale)


def default_test_set(context: GroupContext, seeds: Sequence[Word] = (), max_length: int = 3) -> list[CyclicWord]:
    """Conjugacy classes of cyclic length <= ``max_length``, then the seed classes.

    ``W`` and ``W^-1`` have the same translation length in every tree, so only
    the first of each pair is kept.
    """
    seen: dict[tuple[int, ...], None] = {}

    def add(W: CyclicWord):
        if W.letters and W.inverse().letters not in seen:
            seen.setdefault(W.letters, None)

    for n in range(1, max_length + 1):
        for w in context.reduced_words(n):
            if n > 1 and w[0] == w[-1] ^ 1:
                continue
            add(cyclic_word(Word(w)))
    for g in seeds:
        add(cyclic_word(g))
    return [CyclicWord(t) for t in seen]


def length_spectrum(T: MarkedMetricRose, test_set: Sequence[CyclicWord | Word]) -> LengthSpectrum:
    if not test_set:
        raise DomainError("test set must be nonempty")
    classes = tuple(w if isinstance(w, CyclicWord) else cyclic_word(w) for w in test_set)
    values = tuple(translation_length(T, w) for w in classes)
    top = max(values)
    return LengthSpectrum(classes, values, top if top > 0 else Fraction(1))


def spectrum_distance(a: LengthSpectrum, b: LengthSpectrum) -> float:
    """L1 distance between normalized spectra on a common test set."""
    if a.test_set != b.test_set:
        raise DomainError("spectra are taken on different test sets")
    return float(np.abs(a.normalized - b.normalized).sum())


# Serialization

def _encode_number(x):
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    return float(x)


def _decode_number(raw, where):
    if isinstance(raw, list):
        try:
            return Fraction(int(raw[0]), int(raw[1]))
        except (IndexError, ValueError, ZeroDivisionError):
            raise MalformedInputError(f"{where}: bad fraction {raw!r}") from None
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise MalformedInputError(f"{where}: expected a number, got {raw!r}")
    return Fraction(raw) if isinstance(raw, int) else float(raw)


def tree_to_document(T: MarkedMetricRose) -> dict:
    return {
        "format": "freedyn.tree",
        "version": DOCUMENT_VERSION,
        "context": {"basis": list(T.context.basis)},
        "edge_lengths": [_encode_number(x) for x in T.edge_lengths],
        "marking": None if T.marking is None else marking_to_document(T.marking),
    }


def marking_to_document(phi: Automorphism) -> dict:
    """Inline images, or ``{"base", "power"}`` for an iterate, which loads without re-certifying."""
    if phi.origin is not None:
        base, k = phi.origin
        return {"label": phi.label, "base": marking_to_document(base), "power": k}
    return phi.describe()


def marking_from_document(context: GroupContext, desc: Mapping) -> Automorphism:
    if "base" in desc:
        k = desc.get("power")
        if isinstance(k, bool) or not isinstance(k, int):
            raise MalformedInputError(f"marking power must be an integer, got {k!r}")
        return power(marking_from_document(context, desc["base"]), k)
    return automorphism_from_description(context, desc)


def automorphism_from_description(context: GroupContext, desc: Mapping) -> Automorphism:
    flags = Assertions(
        bool(desc.get("assert_iwip", False)),
        bool(desc.get("assert_atoroidal", False)),
        bool(desc.get("assert_train_track_on_rose", False)),
    )
    try:
        return Automorphism.from_strings(context, desc["images"], desc["inverse"], desc.get("label"), flags)
    except (KeyError, TypeError, AttributeError) as exc:
        raise MalformedInputError(f"bad automorphism description: {exc!r}") from None


def tree_from_document(doc: Mapping) -> MarkedMetricRose:
    if doc.get("format") != "freedyn.tree":
        raise MalformedInputError("not a tree document")
    if doc.get("version") != DOCUMENT_VERSION:
        raise MalformedInputError(f"unsupported tree document version {doc.get('version')!r}")
    context = GroupContext(tuple(doc["context"]["basis"]))
    lengths = tuple(_decode_number(x, f"edge_lengths[{i}]") for i, x in enumerate(doc["edge_lengths"]))
    marking = doc.get("marking")
    return MarkedMetricRose(
        context, lengths, None if marking is None else marking_from_document(context, marking)
    )
