"""Orbit iteration on currents and on marked roses.

Rational currents are iterated through their generating words: the image
of ``c * eta_g`` under ``phi`` is ``c * eta_{Phi(g)}``, so every orbit point
stays an exact counting-current combination. Projective distances between
iterates are computed in floating point after normalization.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import currents as cur
from .automorphism import (
    DEFAULT_MAX_LETTERS,
    Automorphism,
    apply_cyclic_array,
    apply_cyclic_batch,
    compose,
    identity,
    invert,
    pf_eigenvalue,
    power,
    transition_matrix,
)
from .errors import ConvergenceError, DomainError, ResourceError
from .freegroup import CyclicWord, GroupContext, Word, _reduced_words, cyclic_core_array, cyclic_word
from .trees import (
    LengthSpectrum,
    MarkedMetricRose,
    cayley_tree,
    default_test_set,
    pair,
    translation_length,
)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_BUDGET = 60


def _core(w: Word) -> np.ndarray:
    return cyclic_core_array(np.array(w.letters, dtype=np.int64))


def _as_word(x: np.ndarray) -> Word:
    return Word(tuple(x.tolist()))


def _normalized(counts: np.ndarray, rank: int) -> np.ndarray:
    # Letter weights occupy the first 2N slots; a and a' carry equal weight.
    mass = counts[0:2 * rank:2].sum()
    return counts / float(mass)


def _half_l1(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.abs(x - y).sum()) / 2.0


@dataclass
class OrbitReport:
    mode: str
    automorphism: str
    assertions: dict
    seed: str
    iterates: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    normalizers: list = field(default_factory=list)
    step_distances: list = field(default_factory=list)
    growth_ratios: list = field(default_factory=list)
    converged: bool = False
    lambda_estimate: float = float("nan")
    tol: float = DEFAULT_TOL
    matrix_lambda: float | None = None
    final_word: Word | None = None
    final_images: list | None = None
    stop_reason: str = "budget"

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    @property
    def lambda_discrepancy(self) -> float | None:
        if self.matrix_lambda is None:
            return None
        return abs(self.lambda_estimate - self.matrix_lambda)


def _matrix_lambda(phi: Automorphism) -> float | None:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return pf_eigenvalue(transition_matrix(phi)).value
    except ConvergenceError:
        return None


def iterate_current(
    phi: Automorphism,
    seed: Word,
    n: int = DEFAULT_BUDGET,
    depth: int = cur.DEFAULT_DEPTH,
    tol: float = DEFAULT_TOL,
    max_letters: int = DEFAULT_MAX_LETTERS,
    stop_on_convergence: bool = True,
    keep_word: bool = True,
) -> OrbitReport:
    """Iterate ``eta_seed`` under ``phi`` and record normalized depth-``depth`` weights.

    The run stops at the first step whose projective step distance is below
    ``tol`` unless ``stop_on_convergence`` is false. ``keep_word=False`` drops
    the final (possibly huge) word from the report.
    """
    ctx = phi.context
    x = _core(seed)
    if x.size == 0:
        raise DomainError("seed of an orbit must be non-trivial")
    report = OrbitReport("current", phi.name(), phi.assertions.as_dict(), ctx.format(seed), tol=tol)
    report.matrix_lambda = _matrix_lambda(phi)
    counts = cur.counting_vector(ctx, x, depth)
    report.iterates.append(_normalized(counts, ctx.rank))
    report.masses.append(int(x.size))
    report.normalizers.append(1.0 / x.size)
    for _ in range(n):
        try:
            x_next = apply_cyclic_array(phi, x, max_letters)
        except ResourceError as exc:
            log.warning("orbit of %s stopped: %s", report.seed, exc)
            report.stop_reason = "resource"
            break
        x = x_next
        counts = cur.counting_vector(ctx, x, depth)
        vec = _normalized(counts, ctx.rank)
        report.step_distances.append(_half_l1(vec, report.iterates[-1]))
        report.growth_ratios.append(x.size / report.masses[-1])
        report.iterates.append(vec)
        report.masses.append(int(x.size))
        report.normalizers.append(1.0 / x.size)
        if report.step_distances[-1] < tol:
            report.converged = True
            report.stop_reason = "converged"
            if stop_on_convergence:
                break
    report.lambda_estimate = report.growth_ratios[-1] if report.growth_ratios else 1.0
    report.final_word = _as_word(x) if keep_word else None
    return report


def iterate_tree(
    phi: Automorphism,
    seed: MarkedMetricRose,
    n: int = DEFAULT_BUDGET,
    test_set: Sequence[CyclicWord | Word] | None = None,
    tol: float = DEFAULT_TOL,
    max_letters: int = DEFAULT_MAX_LETTERS,
    stop_on_convergence: bool = True,
) -> OrbitReport:
    """Iterate ``seed . phi^k`` and record normalized length spectra.

    Uses the identity ``||g||_{T phi^k} = ||phi^k(g)||_T``: the test words are
    pushed through ``phi`` instead of composing ever longer markings.
    """
    ctx = phi.context
    if test_set is None:
        test_set = default_test_set(ctx)
    classes = [w if isinstance(w, CyclicWord) else cyclic_word(w) for w in test_set]
    if not classes:
        raise DomainError("test set must be nonempty")
    words = [np.array(w.letters, dtype=np.int64) for w in classes]
    lengths = np.array([float(l) for l in seed.edge_lengths])

    def spectrum(ws):
        if seed.marking is not None:
            ws = [apply_cyclic_array(seed.marking, w, max_letters) for w in ws]
        return np.array([lengths[w >> 1].sum() if w.size else 0.0 for w in ws])

    label = "T" if seed.marking is None else f"T.{seed.marking.name()}"
    report = OrbitReport("tree", phi.name(), phi.assertions.as_dict(), label, tol=tol)
    report.matrix_lambda = _matrix_lambda(phi)
    values = spectrum(words)
    scale = values.max() if values.max() > 0 else 1.0
    report.iterates.append(values / scale)
    report.masses.append(float(scale))
    report.normalizers.append(1.0 / scale)
    for _ in range(n):
        try:
            words_next = apply_cyclic_batch(phi, words, max_letters)
        except ResourceError as exc:
            log.warning("tree orbit stopped: %s", exc)
            report.stop_reason = "resource"
            break
        words = words_next
        values = spectrum(words)
        scale = values.max() if values.max() > 0 else 1.0
        vec = values / scale
        report.step_distances.append(float(np.abs(vec - report.iterates[-1]).sum()))
        report.growth_ratios.append(scale / report.masses[-1])
        report.iterates.append(vec)
        report.masses.append(float(scale))
        report.normalizers.append(1.0 / scale)
        if report.step_distances[-1] < tol:
            report.converged = True
            report.stop_reason = "converged"
            if stop_on_convergence:
                break
    report.lambda_estimate = report.growth_ratios[-1] if report.growth_ratios else 1.0
    report.final_images = [_as_word(w) for w in words]
    return report


@dataclass
class FixedPointApprox:
    side: str
    object: object
    quality: float
    iterations_used: int
    eigen_residual: float | None = None
    lambda_estimate: float | None = None
    tree: MarkedMetricRose | None = None


def current_fixed_point(
    phi: Automorphism,
    seed: Word,
    side: str = "plus",
    n: int = DEFAULT_BUDGET,
    depth: int = cur.DEFAULT_DEPTH,
    tol: float = DEFAULT_TOL,
    max_letters: int = DEFAULT_MAX_LETTERS,
) -> FixedPointApprox:
    """Attracting projective fixed current of ``phi`` (``side='plus'``) or of its inverse."""
    f = phi if side == "plus" else invert(phi)
    report = iterate_current(f, seed, n, depth, tol, max_letters)
    if not report.converged:
        raise ConvergenceError(
            f"current orbit of {f.name()} did not converge: stopped by {report.stop_reason} "
            f"after {report.iterations} of {n} steps", partial=report
        )
    approx = cur.normalize(cur.counting_current(phi.context, report.final_word, depth))
    residual = cur.projective_distance(cur.push_rational(f, approx, max_letters), approx)
    return FixedPointApprox(side, approx, report.step_distances[-1], report.iterations, residual,
                            report.lambda_estimate)


def tree_fixed_point(
    phi: Automorphism,
    seed: MarkedMetricRose | None = None,
    side: str = "plus",
    n: int = DEFAULT_BUDGET,
    test_set: Sequence[CyclicWord | Word] | None = None,
    tol: float = DEFAULT_TOL,
    max_letters: int = DEFAULT_MAX_LETTERS,
) -> FixedPointApprox:
    """Approximation ``c_k . T phi^k`` of the attracting tree of ``phi`` (or of ``phi^-1``).

    The returned ``tree`` is an honest marked rose whose edge lengths carry
    the normalizer, so it can be paired with rational currents.
    """
    f = phi if side == "plus" else invert(phi)
    if seed is None:
        seed = cayley_tree(phi.context)
    if test_set is None:
        test_set = default_test_set(phi.context)
    report = iterate_tree(f, seed, n, test_set, tol, max_letters)
    if not report.converged:
        raise ConvergenceError(
            f"tree orbit of {f.name()} did not converge: stopped by {report.stop_reason} "
            f"after {report.iterations} of {n} steps", partial=report
        )
    k = report.iterations
    values = [translation_length(seed, w) for w in report.final_images]
    scale = max(values)
    fk = power(f, k)
    marking = fk if seed.marking is None else compose(seed.marking, fk)
    tree = MarkedMetricRose(seed.context, tuple(l / scale for l in seed.edge_lengths), marking)
    classes = tuple(w if isinstance(w, CyclicWord) else cyclic_word(w) for w in test_set)
    spectrum = LengthSpectrum(classes, tuple(v / scale for v in values), 1)
    return FixedPointApprox(side, spectrum, report.step_distances[-1], k, None, report.lambda_estimate, tree)


@dataclass
class FixedPoints:
    current_plus: FixedPointApprox
    current_minus: FixedPointApprox
    tree_plus: FixedPointApprox
    tree_minus: FixedPointApprox


def approximate_fixed_points(
    phi: Automorphism,
    seed: Word,
    depth: int = cur.DEFAULT_DEPTH,
    n: int = DEFAULT_BUDGET,
    tol: float = DEFAULT_TOL,
    test_set: Sequence[CyclicWord | Word] | None = None,
    tree_seed: MarkedMetricRose | None = None,
    max_letters: int = DEFAULT_MAX_LETTERS,
) -> FixedPoints:
    return FixedPoints(
        current_fixed_point(phi, seed, "plus", n, depth, tol, max_letters),
        current_fixed_point(phi, seed, "minus", n, depth, tol, max_letters),
        tree_fixed_point(phi, tree_seed, "plus", n, test_set, tol, max_letters),
        tree_fixed_point(phi, tree_seed, "minus", n, test_set, tol, max_letters),
    )


@dataclass
class DecayReport:
    n0: int
    values: list[int]
    ratios: list[float]
    head: list[int]
    tail: list[int]

    @property
    def head_ratios(self) -> list[float]:
        return [self.ratios[k] for k in self.head]

    @property
    def tail_ratios(self) -> list[float]:
        return [self.ratios[k] for k in self.tail]

    @property
    def valley(self) -> int:
        return int(np.argmin(self.values))

    def is_unimodal(self) -> bool:
        v = self.values
        i = self.valley
        return all(v[k] >= v[k + 1] for k in range(i)) and all(v[k] <= v[k + 1] for k in range(i, len(v) - 1))


def pairing_decay(
    phi: Automorphism, seed: Word, n0: int, n: int, max_letters: int = DEFAULT_MAX_LETTERS
) -> DecayReport:
    """Pairings ``<T_A phi^k, eta_u>`` for ``u = Phi^{-n0}(seed)`` and ``k = 0..n``.

    The contraction phase (k < n0) shows ratios near ``1/lambda_-`` and the
    expansion phase ratios near ``lambda_+``. A ratio counts as asymptotic
    (listed in ``head``/``tail``) when it sits strictly more than half its
    phase length away from the valley at ``n0``.
    """
    if n0 < 1 or n < n0:
        raise DomainError("need 1 <= n0 <= n")
    u = _core(seed)
    if u.size == 0:
        raise DomainError("seed must be non-trivial")
    back = invert(phi)
    for _ in range(n0):
        u = apply_cyclic_array(back, u, max_letters)
    values = [int(u.size)]
    for _ in range(n):
        u = apply_cyclic_array(phi, u, max_letters)
        values.append(int(u.size))
    ratios = [values[k + 1] / values[k] for k in range(n)]
    head = [k for k in range(n0) if n0 - 1 - k > n0 / 2]
    tail = [k for k in range(n0, n) if k - n0 > (n - n0) / 2]
    return DecayReport(n0, values, ratios, head, tail)


# Subgroups and group balls

@dataclass(frozen=True)
class SubgroupSpec:
    generators: tuple[Automorphism, ...]
    labels: tuple[str, ...]
    name: str = "G"

    def __post_init__(self):
        if not self.generators:
            raise DomainError("a subgroup needs at least one generator")
        if len(self.labels) != len(self.generators) or len(set(self.labels)) != len(self.labels):
            raise DomainError("generator labels must be distinct, one per generator")
        ctx = self.generators[0].context
        if any(g.context != ctx for g in self.generators):
            raise DomainError("generators act on different groups")

    @classmethod
    def of(cls, *gens: Automorphism, name: str = "G") -> "SubgroupSpec":
        return cls(tuple(gens), tuple(g.name() for g in gens), name)

    @property
    def context(self) -> GroupContext:
        return self.generators[0].context

    def letter(self, code: int) -> Automorphism:
        g = self.generators[code >> 1]
        return invert(g) if code & 1 else g

    def format(self, word: tuple[int, ...]) -> str:
        if not word:
            return "1"
        return " ".join(self.labels[c >> 1] + ("'" if c & 1 else "") for c in word)

    def ball(self, radius: int) -> list[tuple[int, ...]]:
        """Freely reduced generator words of length <= radius, shortlex ordered."""
        if radius < 0:
            raise DomainError("radius must be nonnegative")
        out: list[tuple[int, ...]] = []
        for r in range(radius + 1):
            out.extend(_reduced_words(2 * len(self.generators), r))
        return out

    def element(self, word: tuple[int, ...]) -> Automorphism:
        result = identity(self.context)
        for c in word:
            result = compose(result, self.letter(c))
        return result


def _orbit_over_ball(G: SubgroupSpec, words: list[np.ndarray], radius: int, max_letters: int, visit):
    """Call ``visit(group_word, images)`` over the radius ball; return results in shortlex order.

    ``g = s1 s2 ... sk`` acts as ``s1 o s2 o ... o sk``, so each element is
    one substitution away from its suffix. The traversal is depth first to
    keep only one image per level alive.
    """
    alphabet = 2 * len(G.generators)
    letters = [G.letter(c) for c in range(alphabet)]
    results = {}

    def walk(g: tuple[int, ...], images: list[np.ndarray]):
        results[g] = visit(g, images)
        if len(g) == radius:
            return
        for c in range(alphabet):
            if g and g[0] == c ^ 1:
                continue
            walk((c,) + g, apply_cyclic_batch(letters[c], images, max_letters))

    walk((), words)
    return [(g, results[g]) for g in G.ball(radius)]


def _rational_terms(mu: cur.TruncatedCurrent) -> tuple[list[Fraction], list[np.ndarray]]:
    if not mu.pushable:
        raise cur.UnsupportedOperationError(
            f"current of kind {mu.kind!r} cannot be pushed forward; use a counting-current combination"
        )
    return [t.coefficient for t in mu.terms], [_core(t.word) for t in mu.terms]


def _combo_vector(ctx, coefs, arrays, depth) -> np.ndarray:
    total = None
    for c, a in zip(coefs, arrays):
        v = cur.counting_vector(ctx, a, depth).astype(float) * float(c)
        total = v if total is None else total + v
    return _normalized(total, ctx.rank)


@dataclass
class LimitSetSample:
    points: list[tuple[str, np.ndarray]]
    diameter_stats: dict
    poles: dict
    mode: str = "current"


def _distance_stats(vectors: list[np.ndarray], l1_half: bool) -> dict:
    ds = []
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            d = np.abs(vectors[i] - vectors[j]).sum()
            ds.append(float(d / 2 if l1_half else d))
    if not ds:
        return {"pairs": 0, "min": 0.0, "max": 0.0, "mean": 0.0}
    return {"pairs": len(ds), "min": min(ds), "max": max(ds), "mean": float(np.mean(ds))}


def sample_limit_set(
    G: SubgroupSpec,
    phi_index: int = 0,
    radius: int = 2,
    seed: Word | None = None,
    depth: int = cur.DEFAULT_DEPTH,
    n: int = DEFAULT_BUDGET,
    tol: float = DEFAULT_TOL,
    resolution: float = 1e-3,
    mode: str = "current",
    test_set: Sequence[CyclicWord | Word] | None = None,
    max_letters: int = DEFAULT_MAX_LETTERS,
) -> LimitSetSample:
    """Translates of the attracting fixed point of ``G.generators[phi_index]`` over a group ball.

    Points closer than ``resolution`` to an already kept point are dropped.
    ``poles`` records the plus/minus approximations of every generator.
    """
    ctx = G.context
    if not 0 <= phi_index < len(G.generators):
        raise DomainError(f"phi_index {phi_index} out of range")
    if seed is None:
        seed = ctx.generators()[0]
    poles = {}
    vectors: list[tuple[str, np.ndarray]] = []
    if mode == "current":
        for label, g in zip(G.labels, G.generators):
            poles[label] = {
                side: current_fixed_point(g, seed, side, n, depth, tol, max_letters).object.vector()
                for side in ("plus", "minus")
            }
        base = iterate_current(G.generators[phi_index], seed, n, depth, tol, max_letters)
        if not base.converged:
            raise ConvergenceError("fixed-point orbit did not converge", partial=base)
        visit = lambda g, images: _combo_vector(ctx, [1], images, depth)  # noqa: E731
        for word, v in _orbit_over_ball(G, [_core(base.final_word)], radius, max_letters, visit):
            vectors.append((G.format(word), v))
        half = True
    elif mode == "tree":
        if test_set is None:
            test_set = default_test_set(ctx)
        classes = [w if isinstance(w, CyclicWord) else cyclic_word(w) for w in test_set]
        for label, g in zip(G.labels, G.generators):
            poles[label] = {
                side: np.array(tree_fixed_point(g, None, side, n, classes, tol, max_letters).object.values)
                for side in ("plus", "minus")
            }
        fp = tree_fixed_point(G.generators[phi_index], None, "plus", n, classes, tol, max_letters)
        marking = fp.tree.marking
        words = [np.array(w.letters, dtype=np.int64) for w in classes]
        def visit(g, images):
            vals = np.array([float(apply_cyclic_array(marking, w, max_letters).size) for w in images])
            return vals / vals.max()

        for word, v in _orbit_over_ball(G, words, radius, max_letters, visit):
            vectors.append((G.format(word), v))
        half = False
    else:
        raise DomainError(f"unknown mode {mode!r}")
    kept: list[tuple[str, np.ndarray]] = []
    for label, v in vectors:
        if all((np.abs(v - k).sum() / (2 if half else 1)) >= resolution for _, k in kept):
            kept.append((label, v))
    stats = _distance_stats([v for _, v in kept], half)
    return LimitSetSample(kept, stats, poles, mode)


@dataclass
class DirichletResult:
    minimizer: str
    value: Fraction
    table: list[dict]


def dirichlet_check(
    mu: cur.TruncatedCurrent,
    poles: tuple[MarkedMetricRose, MarkedMetricRose],
    G: SubgroupSpec,
    radius: int,
    max_letters: int = DEFAULT_MAX_LETTERS,
) -> DirichletResult:
    """Minimize ``<T+, g mu> + <T-, g mu>`` over the radius ball of ``G``.

    Values are exact. Ties go to the shortlex-first group word.
    """
    coefs, arrays = _rational_terms(mu)
    plus, minus = poles
    def visit(g, images):
        terms = tuple(cur.Term(c, _as_word(a)) for c, a in zip(coefs, images))
        g_mu = _combination_current(mu.context, mu.depth, terms)
        return pair(plus, g_mu), pair(minus, g_mu)

    table = []
    best = None
    for word, (vp, vm) in _orbit_over_ball(G, arrays, radius, max_letters, visit):
        row = {"word": G.format(word), "length": len(word), "plus": vp, "minus": vm, "total": vp + vm}
        table.append(row)
        if best is None or row["total"] < best["total"]:
            best = row
    return DirichletResult(best["word"], best["total"], table)


def _combination_current(ctx, depth, terms) -> cur.TruncatedCurrent:
    # Pairings with the rose slice only read letter weights; depth 1 suffices for the value
    # but the full depth is kept so the object is a faithful orbit point.
    parts = [(t.coefficient, cur.counting_current(ctx, t.word, depth)) for t in terms]
    return cur.linear_combination(parts)


@dataclass
class DiscontinuityTable:
    epsilon: float
    radius: int
    words: list[str]
    lengths: list[int]
    min_distances: list[float]

    def counts(self, epsilon: float | None = None) -> dict[int, int]:
        eps = self.epsilon if epsilon is None else epsilon
        out = {r: 0 for r in range(self.radius + 1)}
        for length, d in zip(self.lengths, self.min_distances):
            if d < eps:
                out[length] += 1
        return out

    def totals(self) -> dict[int, int]:
        out = {r: 0 for r in range(self.radius + 1)}
        for length in self.lengths:
            out[length] += 1
        return out


def discontinuity_experiment(
    G: SubgroupSpec,
    K: Sequence[cur.TruncatedCurrent],
    radius: int,
    epsilon: float,
    max_letters: int = DEFAULT_MAX_LETTERS,
) -> DiscontinuityTable:
    """Count, per word length, the ``g`` with ``min d(g mu, nu) < epsilon`` over ``mu, nu`` in ``K``."""
    if not K:
        raise DomainError("K must be nonempty")
    ctx, depth = K[0].context, K[0].depth
    if any(k.depth != depth or k.context != ctx for k in K):
        raise DomainError("all currents in K must share group and depth")
    parts = [_rational_terms(k) for k in K]
    targets = [_combo_vector(ctx, c, a, depth) for c, a in parts]
    flat = [a for _, arrays in parts for a in arrays]
    def visit(g, images):
        best = float("inf")
        pos = 0
        for coefs, arrays in parts:
            moved = _combo_vector(ctx, coefs, images[pos:pos + len(arrays)], depth)
            pos += len(arrays)
            for t in targets:
                best = min(best, _half_l1(moved, t))
        return best

    words, lengths, mins = [], [], []
    for word, best in _orbit_over_ball(G, flat, radius, max_letters, visit):
        words.append(G.format(word))
        lengths.append(len(word))
        mins.append(best)
    return DiscontinuityTable(epsilon, radius, words, lengths, mins)
