"""Automorphisms of F_N given by basis images together with certified inverse images."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import CertificationError, ConvergenceError, DomainError, ResourceError
from .freegroup import (
    GroupContext,
    Word,
    cyclic_core_array,
    cyclic_length,
    reduce,
    reduce_array,
)

DEFAULT_MAX_LETTERS = 10_000_000


@dataclass(frozen=True)
class Assertions:
    """User-supplied claims about an automorphism. Nothing here is verified."""

    iwip: bool = False
    atoroidal: bool = False
    train_track_on_rose: bool = False

    def as_dict(self) -> dict:
        return {
            "assert_iwip": self.iwip,
            "assert_atoroidal": self.atoroidal,
            "assert_train_track_on_rose": self.train_track_on_rose,
        }


@dataclass(frozen=True)
class Automorphism:
    context: GroupContext
    forward: tuple[Word, ...]
    backward: tuple[Word, ...]
    label: str | None = None
    assertions: Assertions = field(default_factory=Assertions, compare=False)
    # (base, k) when this map was built as base^k; lets documents store the short form.
    origin: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "forward", tuple(self.forward))
        object.__setattr__(self, "backward", tuple(self.backward))
        n = self.context.rank
        if len(self.forward) != n or len(self.backward) != n:
            raise DomainError(f"need {n} forward and {n} backward images")
        for w in self.forward + self.backward:
            self.context.validate(w.letters)
        self._certify()

    def _certify(self) -> None:
        fwd = _flatten(self._table(self.forward))
        bwd = _flatten(self._table(self.backward))
        for i, name in enumerate(self.context.basis):
            x = np.array([2 * i], dtype=np.int64)
            if not np.array_equal(_substitute_array(bwd, _substitute_array(fwd, x)), x):
                raise CertificationError(
                    f"backward(forward({name})) does not reduce to {name}", letter=name
                )
            if not np.array_equal(_substitute_array(fwd, _substitute_array(bwd, x)), x):
                raise CertificationError(
                    f"forward(backward({name})) does not reduce to {name}", letter=name
                )

    @classmethod
    def _trusted(cls, context, forward, backward, label=None, assertions=None, origin=None) -> "Automorphism":
        """Construct without re-certifying; only for images derived from certified maps."""
        self = object.__new__(cls)
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "forward", tuple(forward))
        object.__setattr__(self, "backward", tuple(backward))
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "assertions", assertions or Assertions())
        object.__setattr__(self, "origin", origin)
        return self

    @staticmethod
    def _table(images: Sequence[Word]) -> list[tuple[int, ...]]:
        table = []
        for w in images:
            table.append(w.letters)
            table.append(w.inverse().letters)
        return table

    @cached_property
    def images(self) -> list[tuple[int, ...]]:
        """Image of every signed letter code."""
        return self._table(self.forward)

    @cached_property
    def _flat(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _flatten(self.images)

    @property
    def is_positive(self) -> bool:
        return all(c % 2 == 0 for w in self.forward for c in w.letters)

    def name(self) -> str:
        return self.label or "phi"

    def describe(self) -> dict:
        fmt = self.context.format
        return {
            "label": self.label,
            "images": {b: fmt(w) for b, w in zip(self.context.basis, self.forward)},
            "inverse": {b: fmt(w) for b, w in zip(self.context.basis, self.backward)},
            **self.assertions.as_dict(),
        }

    @classmethod
    def from_strings(
        cls,
        context: GroupContext,
        images: Mapping[str, str],
        inverse: Mapping[str, str],
        label: str | None = None,
        assertions: Assertions | None = None,
    ) -> "Automorphism":
        fwd = [context.parse(images[b]) for b in context.basis]
        bwd = [context.parse(inverse[b]) for b in context.basis]
        return cls(context, fwd, bwd, label, assertions or Assertions())


def _substitute(table: Sequence[tuple[int, ...]], letters: Sequence[int]) -> tuple[int, ...]:
    raw: list[int] = []
    for c in letters:
        raw.extend(table[c])
    return reduce(raw).letters


def identity(context: GroupContext) -> Automorphism:
    gens = context.generators()
    return Automorphism(context, gens, gens, label="id")


def apply(phi: Automorphism, w: Word) -> Word:
    return Word(_substitute(phi.images, w.letters))


def _flatten(table: Sequence[tuple[int, ...]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lens = np.array([len(t) for t in table], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(lens)[:-1]]).astype(np.int64)
    flat = np.array([c for t in table for c in t], dtype=np.int64)
    return flat, offsets, lens


def _substitute_array(flat_table, x: np.ndarray, max_letters: int | None = None) -> np.ndarray:
    flat, offsets, lens = flat_table
    x = np.asarray(x, dtype=np.int64)
    seg = lens[x]
    total = int(seg.sum())
    if max_letters is not None and total > max_letters:
        raise ResourceError(f"image of a {x.size}-letter word needs {total} letters (cap {max_letters})")
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    ends = np.cumsum(seg)
    shift = np.repeat(offsets[x] - (ends - seg), seg)
    return reduce_array(flat[np.arange(total) + shift])


def apply_array(phi: Automorphism, x: np.ndarray, max_letters: int = DEFAULT_MAX_LETTERS) -> np.ndarray:
    """Vectorized :func:`apply` on an int array of letter codes; result is freely reduced."""
    return _substitute_array(phi._flat, x, max_letters)


def apply_cyclic_array(phi: Automorphism, x: np.ndarray, max_letters: int = DEFAULT_MAX_LETTERS) -> np.ndarray:
    return cyclic_core_array(apply_array(phi, x, max_letters))


def apply_cyclic_batch(
    phi: Automorphism, words: Sequence[np.ndarray], max_letters: int = DEFAULT_MAX_LETTERS
) -> list[np.ndarray]:
    """:func:`apply_cyclic_array` on many words in one vectorized pass.

    Words are joined by a sentinel letter that maps to itself; its inverse never
    occurs, so no cancellation crosses a word boundary.
    """
    flat, offsets, lens = phi._flat
    sentinel = phi.context.alphabet_size
    table = (np.append(flat, sentinel), np.append(offsets, flat.size), np.append(lens, 1))
    for w in words:
        need = int(lens[np.asarray(w, dtype=np.int64)].sum())
        if need > max_letters:
            raise ResourceError(f"image of a {len(w)}-letter word needs {need} letters (cap {max_letters})")
    joined = np.concatenate([np.append(np.asarray(w, dtype=np.int64), sentinel) for w in words])
    image = _substitute_array(table, joined)
    cuts = np.flatnonzero(image == sentinel)
    starts = np.concatenate([[0], cuts[:-1] + 1])
    return [cyclic_core_array(image[a:b]) for a, b in zip(starts, cuts)]


def compose(phi: Automorphism, psi: Automorphism, label: str | None = None) -> Automorphism:
    """Return ``phi o psi``, i.e. ``x -> phi(psi(x))``."""
    if phi.context != psi.context:
        raise DomainError("cannot compose automorphisms of different groups")
    fwd = [apply(phi, w) for w in psi.forward]
    bwd_table = Automorphism._table(psi.backward)
    bwd = [Word(_substitute(bwd_table, w.letters)) for w in phi.backward]
    if label is None and phi.label and psi.label:
        label = f"{phi.label}*{psi.label}"
    return Automorphism(phi.context, fwd, bwd, label)


def invert(phi: Automorphism) -> Automorphism:
    label = None
    if phi.label:
        label = phi.label[:-3] if phi.label.endswith("^-1") else phi.label + "^-1"
    a = phi.assertions
    # iwip and atoroidal are closed under inversion; train-track status is not.
    return Automorphism(phi.context, phi.backward, phi.forward, label, Assertions(a.iwip, a.atoroidal, False))


def power(phi: Automorphism, k: int) -> Automorphism:
    """``phi^k`` by iterated substitution.

    Iterates of a certified map are certified, so the (quadratic cost) check is skipped.
    """
    base = phi if k >= 0 else invert(phi)
    back = invert(base)
    fwd = [np.array([2 * i], dtype=np.int64) for i in range(phi.context.rank)]
    bwd = [f.copy() for f in fwd]
    for _ in range(abs(k)):
        fwd = [apply_array(base, w) for w in fwd]
        bwd = [apply_array(back, w) for w in bwd]
    label = None
    if phi.label:
        label = phi.label if k == 1 else f"{phi.label}^{k}"
    as_word = lambda a: Word(tuple(a.tolist()))  # noqa: E731
    return Automorphism._trusted(
        phi.context, [as_word(w) for w in fwd], [as_word(w) for w in bwd], label, origin=(phi, k)
    )


def transition_matrix(phi: Automorphism) -> np.ndarray:
    """Entry ``(x, y)`` counts occurrences of ``y`` or ``y^-1`` in the image of ``x``."""
    n = phi.context.rank
    m = np.zeros((n, n), dtype=np.int64)
    for i, w in enumerate(phi.forward):
        for c in w.letters:
            m[i, c >> 1] += 1
    return m


def is_primitive(m: np.ndarray, max_exponent: int | None = None) -> bool:
    n = m.shape[0]
    if max_exponent is None:
        max_exponent = n * n
    pattern = (np.asarray(m) > 0).astype(np.int64)
    p = pattern.copy()
    for _ in range(max_exponent):
        if p.all():
            return True
        p = ((p @ pattern) > 0).astype(np.int64)
    return False


@dataclass(frozen=True)
class EigenvalueEstimate:
    value: float
    iterations: int
    residual: float
    primitive: bool = True


def pf_eigenvalue(m: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000) -> EigenvalueEstimate:
    """Dominant eigenvalue of a nonnegative matrix by power iteration.

    Stops once successive Rayleigh quotients differ by less than ``tol`` and
    the eigen-residual ``|Mx - rq x|`` of the unit iterate is below ``tol`` too.
    A non-primitive matrix triggers a warning but is still iterated.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("transition matrix must be square")
    if (m < 0).any():
        raise DomainError("transition matrix must be nonnegative")
    primitive = is_primitive(m)
    if not primitive:
        warnings.warn("matrix is not primitive; estimating its dominant eigenvalue anyway", stacklevel=2)
    x = np.full(m.shape[0], 1.0 / m.shape[0])
    prev = None
    for it in range(1, max_iter + 1):
        y = m @ x
        rq = float(x @ y / (x @ x))
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return EigenvalueEstimate(0.0, it, 0.0, primitive)
        x = y / norm
        if prev is not None and abs(rq - prev) < tol:
            residual = float(np.linalg.norm(m @ x - rq * x))
            if residual < tol:
                return EigenvalueEstimate(rq, it, residual, primitive)
        prev = rq
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps",
        partial=EigenvalueEstimate(prev, max_iter, float(np.linalg.norm(m @ x - prev * x)), primitive),
    )


def orbit_growth(
    phi: Automorphism, w: Word, n: int, max_letters: int = DEFAULT_MAX_LETTERS
) -> list[int]:
    """Cyclic lengths of ``phi^k(w)`` for ``k = 0..n``."""
    if n < 1:
        raise DomainError("n must be at least 1")
    x = cyclic_core_array(np.array(w.letters, dtype=np.int64))
    out = [cyclic_length(w)]
    for _ in range(n):
        x = apply_cyclic_array(phi, x, max_letters)
        out.append(int(x.size))
    return out
