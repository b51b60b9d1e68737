"""Geodesic currents truncated at depth L, stored as cylinder weights.

A current is recorded through its weights on reduced words of length 1..L.
Counting currents and the uniform current have exact rational weights. Only
currents built from counting currents can be pushed forward by an
automorphism: a general truncated weight table does not determine its image.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

from .automorphism import Automorphism, apply_cyclic_array, DEFAULT_MAX_LETTERS
from .errors import DomainError, MalformedInputError, UnsupportedOperationError
from .freegroup import GroupContext, Word, _reduced_words, cyclic_core_array, window_counts

DEFAULT_DEPTH = 4
DOCUMENT_VERSION = 1

RATIONAL = "rational"
UNIFORM = "uniform"
COMBINATION = "combination"
PUSHFORWARD = "pushforward"


@dataclass(frozen=True)
class Term:
    """``coefficient * eta_word``; ``word=None`` stands for the uniform current."""

    coefficient: Fraction
    word: Word | None


@dataclass(frozen=True)
class WordIndex:
    """Canonical (shortlex) ordering of all reduced words of length 1..depth."""

    words: tuple[tuple[int, ...], ...]
    lengths: np.ndarray
    # Per length: base-2N codes of each word and of its inverse, and the slice it occupies.
    codes: tuple[np.ndarray, ...]
    inverse_codes: tuple[np.ndarray, ...]
    slices: tuple[slice, ...]

    def position(self, letters: tuple[int, ...]) -> int:
        return _positions(self.words)[letters]


@lru_cache(maxsize=None)
def _positions(words: tuple[tuple[int, ...], ...]) -> dict:
    return {w: i for i, w in enumerate(words)}


@lru_cache(maxsize=None)
def word_index(alphabet: int, depth: int) -> WordIndex:
    ctx_words: list[tuple[int, ...]] = []
    codes, inv_codes, slices = [], [], []
    for n in range(1, depth + 1):
        level = _reduced_words(alphabet, n)
        start = len(ctx_words)
        ctx_words.extend(level)
        slices.append(slice(start, len(ctx_words)))
        arr = np.array(level, dtype=np.int64)
        powers = alphabet ** np.arange(n - 1, -1, -1, dtype=np.int64)
        codes.append(arr @ powers)
        inv = (arr[:, ::-1]) ^ 1
        inv_codes.append(inv @ powers)
    lengths = np.array([len(w) for w in ctx_words], dtype=np.int64)
    return WordIndex(tuple(ctx_words), lengths, tuple(codes), tuple(inv_codes), tuple(slices))


@dataclass(frozen=True, eq=False)
class TruncatedCurrent:
    context: GroupContext
    depth: int
    weights: Mapping[tuple[int, ...], Fraction]
    kind: str = COMBINATION
    terms: tuple[Term, ...] = field(default=())

    def __eq__(self, other):
        if not isinstance(other, TruncatedCurrent):
            return NotImplemented
        return (
            self.context == other.context
            and self.depth == other.depth
            and self._nonzero() == other._nonzero()
        )

    def _nonzero(self) -> dict:
        return {k: v for k, v in self.weights.items() if v != 0}

    def weight(self, v: Word | tuple[int, ...]) -> Fraction:
        letters = v.letters if isinstance(v, Word) else tuple(v)
        if not 1 <= len(letters) <= self.depth:
            raise DomainError(f"weight requested for a word of length {len(letters)} at depth {self.depth}")
        return self.weights.get(letters, Fraction(0))

    @property
    def mass(self) -> Fraction:
        """Sum of the basis-letter weights (pairing with the unit Cayley tree)."""
        return sum((self.weight((2 * i,)) for i in range(self.context.rank)), Fraction(0))

    @property
    def is_zero(self) -> bool:
        return self.mass == 0

    @property
    def pushable(self) -> bool:
        return all(t.word is not None for t in self.terms)

    def vector(self) -> np.ndarray:
        idx = word_index(self.context.alphabet_size, self.depth)
        out = np.zeros(len(idx.words))
        for w, val in self.weights.items():
            out[idx.position(w)] = float(val)
        return out

    def table(self) -> list[tuple[str, Fraction]]:
        idx = word_index(self.context.alphabet_size, self.depth)
        fmt = self.context.format
        return [(fmt(w), self.weights.get(w, Fraction(0))) for w in idx.words]


def _check_depth(depth: int) -> None:
    if not isinstance(depth, (int, np.integer)) or depth < 1:
        raise DomainError(f"depth must be a positive integer, got {depth!r}")


def counting_vector(context: GroupContext, cyclic: np.ndarray, depth: int) -> np.ndarray:
    """Integer weights of the counting current of a cyclically reduced word, in index order."""
    idx = word_index(context.alphabet_size, depth)
    out = np.zeros(len(idx.words), dtype=np.int64)
    if cyclic.size == 0:
        return out
    a = context.alphabet_size
    full = window_counts(cyclic, depth, a).reshape((a,) * depth)
    for n in range(1, depth + 1):
        # Every position starts exactly one window of each length.
        cnt = full.sum(axis=tuple(range(n, depth))).ravel() if n < depth else full.ravel()
        out[idx.slices[n - 1]] = cnt[idx.codes[n - 1]] + cnt[idx.inverse_codes[n - 1]]
    return out


def _from_vector(context, depth, vec, kind, terms, scale=Fraction(1)) -> TruncatedCurrent:
    idx = word_index(context.alphabet_size, depth)
    weights = {idx.words[i]: Fraction(int(vec[i])) * scale for i in np.flatnonzero(vec)}
    return TruncatedCurrent(context, depth, weights, kind, tuple(terms))


def counting_current(context: GroupContext, g: Word, depth: int = DEFAULT_DEPTH) -> TruncatedCurrent:
    """The counting current of the conjugacy class of ``g``, truncated at ``depth``."""
    _check_depth(depth)
    core = cyclic_core_array(np.array(g.letters, dtype=np.int64))
    if core.size == 0:
        raise DomainError("counting current of the trivial element is undefined")
    vec = counting_vector(context, core, depth)
    return _from_vector(context, depth, vec, RATIONAL, [Term(Fraction(1), g)])


def uniform_current(context: GroupContext, depth: int = DEFAULT_DEPTH) -> TruncatedCurrent:
    """Weight ``(2N-1)^-(|v|-1) / 2N`` on every reduced word ``v``."""
    _check_depth(depth)
    a = context.alphabet_size
    weights = {}
    for n in range(1, depth + 1):
        value = Fraction(1, a * (a - 1) ** (n - 1))
        for w in context.reduced_words(n):
            weights[w] = value
    return TruncatedCurrent(context, depth, weights, UNIFORM, (Term(Fraction(1), None),))


def de_bruijn_word(context: GroupContext, depth: int) -> Word:
    """A cyclically reduced word in which each reduced word of length ``depth`` occurs once.

    Built as an Eulerian circuit of the graph on reduced words of length ``depth-1``.
    """
    n = max(depth, 2)
    a = context.alphabet_size
    graph = nx.DiGraph()
    for w in context.reduced_words(n):
        graph.add_edge(w[:-1], w[1:], letter=w[-1])
    start = context.reduced_words(n - 1)[0]
    letters = tuple(graph.edges[u, v]["letter"] for u, v in nx.eulerian_circuit(graph, source=start))
    assert len(letters) == a * (a - 1) ** (n - 1)
    return Word(letters)


def uniform_rational_current(context: GroupContext, depth: int = DEFAULT_DEPTH) -> TruncatedCurrent:
    """Counting current that is projectively equal to the uniform current up to ``depth``.

    Unlike :func:`uniform_current` it can be pushed forward exactly.
    """
    return counting_current(context, de_bruijn_word(context, depth), depth)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        # Decimal reading of the float, so 0.1 from a config means 1/10.
        return Fraction(repr(c))
    return Fraction(c)


def scale(mu: TruncatedCurrent, c) -> TruncatedCurrent:
    return linear_combination([(c, mu)])


def linear_combination(terms: Iterable[tuple[object, TruncatedCurrent]]) -> TruncatedCurrent:
    terms = list(terms)
    if not terms:
        raise DomainError("empty linear combination")
    context, depth = terms[0][1].context, terms[0][1].depth
    weights: dict[tuple[int, ...], Fraction] = {}
    out_terms: list[Term] = []
    for c, mu in terms:
        c = _as_fraction(c)
        if c < 0:
            raise DomainError(f"negative coefficient {c}")
        if mu.depth != depth or mu.context != context:
            raise DomainError("cannot combine currents of different depth or group")
        if c == 0:
            continue
        for w, val in mu.weights.items():
            weights[w] = weights.get(w, Fraction(0)) + c * val
        out_terms.extend(Term(c * t.coefficient, t.word) for t in mu.terms)
    if len(terms) == 1 and out_terms:
        kind = terms[0][1].kind
    elif len(out_terms) == 1:
        kind = RATIONAL if out_terms[0].word is not None else UNIFORM
    else:
        kind = COMBINATION
    return TruncatedCurrent(context, depth, weights, kind, tuple(out_terms))


def push_rational(
    phi: Automorphism, mu: TruncatedCurrent, max_letters: int = DEFAULT_MAX_LETTERS
) -> TruncatedCurrent:
    """Image of a rational current: ``phi(c * eta_g) = c * eta_{Phi(g)}``, termwise."""
    if not mu.pushable:
        raise UnsupportedOperationError(
            f"cannot push forward a current of kind {mu.kind!r}: only counting-current "
            "combinations are supported at finite depth"
        )
    if phi.context != mu.context:
        raise DomainError("automorphism and current live on different groups")
    weights: dict[tuple[int, ...], Fraction] = {}
    out_terms = []
    idx = word_index(mu.context.alphabet_size, mu.depth)
    for t in mu.terms:
        image = apply_cyclic_array(phi, np.array(t.word.letters, dtype=np.int64), max_letters)
        vec = counting_vector(mu.context, image, mu.depth)
        for i in np.flatnonzero(vec):
            w = idx.words[i]
            weights[w] = weights.get(w, Fraction(0)) + t.coefficient * int(vec[i])
        out_terms.append(Term(t.coefficient, Word(tuple(image.tolist()))))
    return TruncatedCurrent(mu.context, mu.depth, weights, PUSHFORWARD, tuple(out_terms))


def normalize(mu: TruncatedCurrent) -> TruncatedCurrent:
    """Rescale so that the basis-letter weights sum to 1."""
    m = mu.mass
    if m == 0:
        raise DomainError("cannot normalize the zero current")
    if m == 1:
        return mu
    weights = {w: v / m for w, v in mu.weights.items()}
    terms = tuple(Term(t.coefficient / m, t.word) for t in mu.terms)
    return TruncatedCurrent(mu.context, mu.depth, weights, mu.kind, terms)


def projective_distance(mu: TruncatedCurrent, nu: TruncatedCurrent) -> float:
    """L1 distance between normalized weight tables, counting each pair {v, v^-1} once.

    Currents are flip invariant, so this is half the L1 distance over all words.
    """
    if mu.depth != nu.depth or mu.context != nu.context:
        raise DomainError("projective distance needs currents of equal depth on the same group")
    sm, sn = mu.mass, nu.mass
    if sm == 0 or sn == 0:
        raise DomainError("projective distance is undefined for the zero current")
    total = Fraction(0)
    for w in set(mu.weights) | set(nu.weights):
        total += abs(mu.weights.get(w, 0) / sm - nu.weights.get(w, 0) / sn)
    return float(total / 2)


def full_support_check(mu: TruncatedCurrent) -> bool:
    idx = word_index(mu.context.alphabet_size, mu.depth)
    return all(mu.weights.get(w, 0) > 0 for w in idx.words)


# Serialization

def _encode_fraction(q: Fraction) -> list[int]:
    return [q.numerator, q.denominator]


def _decode_fraction(raw, where: str) -> Fraction:
    try:
        num, den = raw
        return Fraction(int(num), int(den))
    except (TypeError, ValueError, ZeroDivisionError):
        raise MalformedInputError(f"{where}: expected [numerator, denominator], got {raw!r}") from None


def current_to_document(mu: TruncatedCurrent) -> dict:
    fmt = mu.context.format
    return {
        "format": "freedyn.current",
        "version": DOCUMENT_VERSION,
        "context": {"basis": list(mu.context.basis)},
        "depth": mu.depth,
        "kind": mu.kind,
        "terms": [
            {"coefficient": _encode_fraction(t.coefficient), "word": None if t.word is None else fmt(t.word)}
            for t in mu.terms
        ],
        "weights": {fmt(w): _encode_fraction(v) for w, v in _ordered(mu)},
    }


def _ordered(mu: TruncatedCurrent):
    idx = word_index(mu.context.alphabet_size, mu.depth)
    return [(w, mu.weights[w]) for w in idx.words if mu.weights.get(w, 0) != 0]


def current_from_document(doc: Mapping) -> TruncatedCurrent:
    if doc.get("format") != "freedyn.current":
        raise MalformedInputError("not a current document")
    if doc.get("version") != DOCUMENT_VERSION:
        raise MalformedInputError(f"unsupported current document version {doc.get('version')!r}")
    context = GroupContext(tuple(doc["context"]["basis"]))
    depth = int(doc["depth"])
    _check_depth(depth)
    weights = {}
    for key, raw in doc["weights"].items():
        w = context.parse(key)
        if not 1 <= len(w) <= depth:
            raise MalformedInputError(f"weights[{key!r}]: word length outside 1..{depth}")
        weights[w.letters] = _decode_fraction(raw, f"weights[{key!r}]")
    terms = []
    for i, t in enumerate(doc.get("terms", [])):
        word = None if t["word"] is None else context.parse(t["word"])
        terms.append(Term(_decode_fraction(t["coefficient"], f"terms[{i}].coefficient"), word))
    return TruncatedCurrent(context, depth, weights, doc["kind"], tuple(terms))
