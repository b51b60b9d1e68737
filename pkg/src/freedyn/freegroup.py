"""Word algebra in a free group of rank N over a fixed ordered basis.

Signed letters are encoded as integers: basis letter ``i`` is ``2*i`` and its
inverse is ``2*i + 1``, so inversion is ``code ^ 1`` and the natural integer
order is the total order a < a' < b < b' < ... used for rotation canonical
forms and shortlex enumeration.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, MalformedInputError


def inverse_code(code: int) -> int:
    return code ^ 1


@dataclass(frozen=True)
class Word:
    """A freely reduced word; the empty tuple is the identity."""

    letters: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return reduce(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple(c ^ 1 for c in reversed(self.letters)))

    @property
    def is_identity(self) -> bool:
        return not self.letters


@dataclass(frozen=True)
class CyclicWord:
    """A cyclically reduced word stored at its lexicographically least rotation."""

    letters: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def inverse(self) -> "CyclicWord":
        return CyclicWord(_least_rotation(tuple(c ^ 1 for c in reversed(self.letters))))

    def as_word(self) -> Word:
        return Word(self.letters)


IDENTITY = Word()

_TOKEN_SUFFIX = re.compile(r"\s*(\^\s*-\s*1|')?")


@dataclass(frozen=True)
class GroupContext:
    basis: tuple[str, ...]

    def __post_init__(self):
        basis = tuple(self.basis)
        object.__setattr__(self, "basis", basis)
        if len(basis) < 2:
            raise DomainError(f"rank must be at least 2, got {len(basis)}")
        if len(set(basis)) != len(basis):
            raise DomainError(f"basis names must be distinct: {basis}")
        for name in basis:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                raise DomainError(f"invalid basis name {name!r}")

    @classmethod
    def of_rank(cls, rank: int) -> "GroupContext":
        if rank > 26:
            return cls(tuple(f"x{i}" for i in range(rank)))
        return cls(tuple("abcdefghijklmnopqrstuvwxyz"[:rank]))

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def alphabet_size(self) -> int:
        return 2 * len(self.basis)

    def letter(self, name: str, sign: int = 1) -> int:
        try:
            i = self.basis.index(name)
        except ValueError:
            raise MalformedInputError(f"unknown letter {name!r}") from None
        return 2 * i + (0 if sign > 0 else 1)

    def generators(self) -> list[Word]:
        return [Word((2 * i,)) for i in range(self.rank)]

    def symbol(self, code: int) -> str:
        name = self.basis[code >> 1]
        return name + "'" if code & 1 else name

    def format(self, w: Word | CyclicWord | Sequence[int]) -> str:
        letters = w.letters if isinstance(w, (Word, CyclicWord)) else w
        return " ".join(self.symbol(c) for c in letters)

    def parse(self, text: str) -> Word:
        """Parse ``"a b' a"``, ``"ab^-1a"`` or ``"1"`` (identity) into a reduced word."""
        s = text.strip()
        if s in ("", "1", "e"):
            return IDENTITY
        names = sorted(self.basis, key=len, reverse=True)
        raw = []
        pos = 0
        while pos < len(s):
            if s[pos].isspace():
                pos += 1
                continue
            for name in names:
                if s.startswith(name, pos):
                    pos += len(name)
                    break
            else:
                raise MalformedInputError(f"cannot parse {text!r} at position {pos}")
            m = _TOKEN_SUFFIX.match(s, pos)
            suffix = m.group(1)
            pos = m.end()
            raw.append(self.letter(name, 1 if suffix is None else -1))
        return reduce(raw)

    def validate(self, letters: Iterable[int]) -> None:
        top = self.alphabet_size
        for c in letters:
            if not isinstance(c, (int, np.integer)) or c < 0 or c >= top:
                raise MalformedInputError(f"letter code {c!r} outside alphabet of size {top}")

    def reduced_words(self, length: int) -> list[tuple[int, ...]]:
        """All reduced words of exactly ``length`` letters, in lexicographic order."""
        return list(_reduced_words(self.alphabet_size, length))

    def ball(self, radius: int) -> list[Word]:
        """All reduced words of length at most ``radius`` in shortlex order."""
        words = [IDENTITY]
        for n in range(1, radius + 1):
            words.extend(Word(t) for t in _reduced_words(self.alphabet_size, n))
        return words


@lru_cache(maxsize=None)
def _reduced_words(alphabet: int, length: int) -> tuple[tuple[int, ...], ...]:
    if length == 0:
        return ((),)
    out = []
    for prefix in _reduced_words(alphabet, length - 1):
        for c in range(alphabet):
            if prefix and prefix[-1] == c ^ 1:
                continue
            out.append(prefix + (c,))
    return tuple(out)


def reduce(raw: Iterable[int], context: GroupContext | None = None) -> Word:
    raw = [int(c) for c in raw]
    if context is not None:
        context.validate(raw)
    else:
        for c in raw:
            if c < 0:
                raise MalformedInputError(f"negative letter code {c}")
    stack: list[int] = []
    for c in raw:
        if stack and stack[-1] == c ^ 1:
            stack.pop()
        else:
            stack.append(c)
    return Word(tuple(stack))


def _least_rotation(s: tuple[int, ...]) -> tuple[int, ...]:
    r = _least_rotation_index(s)
    return s[r:] + s[:r]


def _least_rotation_index(s: Sequence[int]) -> int:
    # Booth's algorithm, O(n).
    n = len(s)
    if n == 0:
        return 0
    f = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        sj = s[j % n]
        i = f[j - k - 1]
        while i != -1 and sj != s[(k + i + 1) % n]:
            if sj < s[(k + i + 1) % n]:
                k = j - i - 1
            i = f[i]
        if sj != s[(k + i + 1) % n]:
            if sj < s[k % n]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return k % n


def _strip_conjugation(letters: Sequence[int]) -> int:
    n = len(letters)
    k = 0
    while 2 * k + 1 < n and letters[k] == letters[n - 1 - k] ^ 1:
        k += 1
    return k


def cyclic_reduce(w: Word) -> tuple[CyclicWord, Word]:
    """Return ``(core, conjugator)`` with ``w = conjugator * core * conjugator^-1``."""
    letters = w.letters
    k = _strip_conjugation(letters)
    core = letters[k:len(letters) - k]
    r = _least_rotation_index(core)
    return CyclicWord(core[r:] + core[:r]), Word(letters[:k + r])


def cyclic_word(w: Word) -> CyclicWord:
    return cyclic_reduce(w)[0]


def word_length(w: Word) -> int:
    return len(w.letters)


def cyclic_length(w: Word | CyclicWord) -> int:
    if isinstance(w, CyclicWord):
        return len(w.letters)
    letters = w.letters
    return len(letters) - 2 * _strip_conjugation(letters)


def _count_clockwise(v: Sequence[int], W: Sequence[int]) -> int:
    n, m = len(W), len(v)
    count = 0
    for start in range(n):
        if all(W[(start + j) % n] == v[j] for j in range(m)):
            count += 1
    return count


def count_occurrences(v: Word, W: CyclicWord) -> int:
    """Occurrences of ``v`` and of ``v^-1`` read clockwise on the circle ``W``.

    Readings may wind around the circle more than once when ``|v| > |W|``.
    """
    if not v.letters:
        raise DomainError("cannot count occurrences of the empty word")
    if not W.letters:
        return 0
    return _count_clockwise(v.letters, W.letters) + _count_clockwise(v.inverse().letters, W.letters)


# Array helpers used by the bulk paths in automorphism/currents/dynamics.

def reduce_array(x: np.ndarray, vector_rounds: int = 4) -> np.ndarray:
    """Free reduction of an int array.

    A few rounds of vectorized pair cancellation handle the usual shallow
    cancellation at substitution seams; deeper nesting falls back to a stack.
    """
    x = np.asarray(x, dtype=np.int64)
    for _ in range(vector_rounds):
        if x.size < 2:
            return x
        hit = x[1:] == (x[:-1] ^ 1)
        if not hit.any():
            return x
        # Inside a run of consecutive hits only every other pair can be cancelled.
        idx = np.flatnonzero(hit)
        run_start = np.ones(idx.size, dtype=bool)
        run_start[1:] = idx[1:] != idx[:-1] + 1
        starts = np.maximum.accumulate(np.where(run_start, np.arange(idx.size), 0))
        chosen = idx[(np.arange(idx.size) - starts) % 2 == 0]
        keep = np.ones(x.size, dtype=bool)
        keep[chosen] = False
        keep[chosen + 1] = False
        x = x[keep]
    if x.size < 2 or not (x[1:] == (x[:-1] ^ 1)).any():
        return x
    stack: list[int] = []
    for c in x.tolist():
        if stack and stack[-1] == c ^ 1:
            stack.pop()
        else:
            stack.append(c)
    return np.array(stack, dtype=np.int64)


def cyclic_core_array(x: np.ndarray) -> np.ndarray:
    """Cyclically reduce an already freely reduced array (no canonical rotation)."""
    n = x.size
    if n < 2:
        return x
    lo, hi = 0, n - 1
    while lo < hi and x[lo] == (x[hi] ^ 1):
        lo += 1
        hi -= 1
    return x[lo:hi + 1]


def window_counts(W: np.ndarray, length: int, alphabet: int) -> np.ndarray:
    """Clockwise occurrence counts of every word of ``length`` letters on circle ``W``.

    Returned vector is indexed by the base-``alphabet`` code of the word.
    """
    n = W.size
    if n == 0:
        return np.zeros(alphabet ** length, dtype=np.int64)
    padded = W[np.arange(n + length - 1) % n]
    codes = padded[:n].astype(np.int64)
    for j in range(1, length):
        codes *= alphabet
        codes += padded[j:j + n]
    return np.bincount(codes, minlength=alphabet ** length)
