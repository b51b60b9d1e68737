import numpy as np
import pytest

from freedyn import currents as cur
from freedyn import dynamics as dyn
from freedyn.automorphism import apply, identity, invert, power
from freedyn.errors import ConvergenceError, DomainError
from freedyn.trees import cayley_tree, pair

GOLDEN = (1 + 5 ** 0.5) / 2


def test_iterate_current_fibonacci(F2, fib):
    r = dyn.iterate_current(fib, F2.parse("a"), n=40, depth=3)
    assert r.converged and r.stop_reason == "converged"
    assert abs(r.lambda_estimate - GOLDEN) < 1e-4
    assert r.step_distances[-1] < 1e-6
    assert all(x > y for x, y in zip(r.normalizers, r.normalizers[1:]))


def test_iterate_current_identity(F2):
    r = dyn.iterate_current(identity(F2), F2.parse("a b'"), n=5, stop_on_convergence=False)
    assert r.step_distances == [0.0] * 5 and r.lambda_estimate == 1


def test_iterate_current_rejects_trivial_seed(F2, fib):
    with pytest.raises(DomainError):
        dyn.iterate_current(fib, F2.parse("a a'"))


def test_iterate_tree_fibonacci(F2, fib):
    tests = [F2.parse(s) for s in ("a", "b", "a b")]
    r = dyn.iterate_tree(fib, cayley_tree(F2), n=40, test_set=tests)
    assert r.converged and abs(r.lambda_estimate - GOLDEN) < 1e-3
    c = dyn.iterate_tree(identity(F2), cayley_tree(F2), n=3, test_set=tests, stop_on_convergence=False)
    assert c.step_distances == [0.0] * 3
    inv = dyn.iterate_tree(invert(fib), cayley_tree(F2), n=40, test_set=tests)
    assert abs(inv.lambda_estimate - GOLDEN) < 1e-3


def test_orbit_stops_at_letter_cap(F2, fib):
    r = dyn.iterate_current(fib, F2.parse("a"), n=60, tol=1e-30, max_letters=1000)
    assert r.stop_reason == "resource" and not r.converged and r.masses[-1] <= 1000


def test_fixed_points_fibonacci(F2, fib):
    fp = dyn.approximate_fixed_points(fib, F2.parse("a"), n=40)
    mu = fp.current_plus.object
    assert abs(float(mu.weight((0,)) / mu.weight((2,))) - GOLDEN) < 1e-4
    assert fp.current_plus.eigen_residual < 1e-6
    assert fp.current_minus.eigen_residual < 1e-6
    swapped = dyn.current_fixed_point(invert(fib), F2.parse("a"), "minus", n=40)
    assert swapped.object == mu
    # The tree approximation is a genuine rose: its pairing with eta_g is its spectrum value.
    tp = fp.tree_plus
    for W, value in zip(tp.object.test_set, tp.object.values):
        assert pair(tp.tree, cur.counting_current(F2, W.as_word(), 1)) == value


def test_fixed_point_convergence_error(F2, fib):
    with pytest.raises(ConvergenceError) as info:
        dyn.current_fixed_point(fib, F2.parse("a"), n=3)
    assert info.value.partial.iterations == 3


def test_pairing_decay_fibonacci(F2, fib):
    rep = dyn.pairing_decay(fib, F2.parse("a"), 10, 20)
    assert rep.values[:3] == [89, 55, 34]
    assert rep.values[9:11] == [1, 1]
    assert rep.values[-1] == 144 and rep.is_unimodal()
    assert all(abs(r - 1 / GOLDEN) < 1e-2 for r in rep.head_ratios)
    gaps = [abs(r - GOLDEN) for r in rep.tail_ratios]
    assert all(x > y for x, y in zip(gaps, gaps[1:])) and gaps[-1] < 1e-3


def test_subgroup_ball_and_elements(fib, conj_fib):
    G = dyn.SubgroupSpec.of(fib, conj_fib)
    ball = G.ball(2)
    assert len(ball) == 1 + 4 + 12
    assert G.format(()) == "1" and G.format((0, 3)) == "f g'"
    assert G.element((0, 0)).forward == power(fib, 2).forward


def test_limit_set_cyclic_collapses_to_poles(F2, fib):
    G = dyn.SubgroupSpec.of(fib)
    at0 = dyn.sample_limit_set(G, 0, 0)
    assert len(at0.points) == 1
    sample = dyn.sample_limit_set(G, 0, 3)
    poles = sample.poles["f"]
    for _, v in sample.points:
        d = min(np.abs(v - poles[s]).sum() / 2 for s in ("plus", "minus"))
        assert d < 1e-5


def test_limit_set_two_generators(fib, conj_fib):
    G = dyn.SubgroupSpec.of(fib, conj_fib)
    sample = dyn.sample_limit_set(G, 0, 3)
    assert len(sample.points) >= 4
    poles = [v for sides in sample.poles.values() for v in sides.values()]
    gaps = [np.abs(x - y).sum() / 2 for i, x in enumerate(poles) for y in poles[i + 1:]]
    assert min(gaps) > 1e-3


def test_dirichlet_examples(F2, fib):
    G = dyn.SubgroupSpec.of(fib)
    plus = dyn.tree_fixed_point(fib, side="plus").tree
    minus = dyn.tree_fixed_point(fib, side="minus").tree
    mu = cur.counting_current(F2, apply(power(fib, 3), F2.parse("a")), 4)
    assert dyn.dirichlet_check(mu, (plus, minus), G, 0).minimizer == "1"
    res = dyn.dirichlet_check(mu, (plus, minus), G, 5)
    assert res.minimizer == "f' f' f'"
    assert dyn.dirichlet_check(cur.scale(mu, 7), (plus, minus), G, 5).minimizer == res.minimizer
    with pytest.raises(cur.UnsupportedOperationError):
        dyn.dirichlet_check(cur.uniform_current(F2, 2), (plus, minus), G, 1)


def test_discontinuity_small(F2, fib, conj_fib):
    G = dyn.SubgroupSpec.of(power(fib, 2), power(conj_fib, 2))
    K = [cur.uniform_rational_current(F2, 3)]
    table = dyn.discontinuity_experiment(G, K, 2, 1e-3)
    assert table.counts()[0] >= 1
    assert all(table.counts(2e-3)[r] >= table.counts()[r] for r in table.counts())
    with pytest.raises(DomainError):
        dyn.discontinuity_experiment(G, [], 2, 1e-3)
