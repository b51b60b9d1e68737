import sys

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from freedyn.automorphism import Automorphism, compose, invert
from freedyn.freegroup import GroupContext, reduce

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def F2():
    return GroupContext(("a", "b"))


@pytest.fixture(scope="session")
def F3():
    return GroupContext(("a", "b", "c"))


@pytest.fixture(scope="session")
def fib(F2):
    return Automorphism.from_strings(F2, {"a": "a b", "b": "a"}, {"a": "b", "b": "b' a"}, "f")


@pytest.fixture(scope="session")
def plastic(F3):
    return Automorphism.from_strings(
        F3, {"a": "b", "b": "c", "c": "a b"}, {"a": "c a'", "b": "a", "c": "b"}, "p"
    )


@pytest.fixture(scope="session")
def shear(F2):
    return Automorphism.from_strings(F2, {"a": "a b", "b": "b"}, {"a": "a b'", "b": "b"}, "h")


@pytest.fixture(scope="session")
def conj_fib(fib, shear):
    return compose(compose(shear, fib), invert(shear), label="g")


def raw_words(rank, max_size=50, min_size=0):
    return st.lists(st.integers(0, 2 * rank - 1), min_size=min_size, max_size=max_size)


def nontrivial_words(rank, max_size=30):
    return raw_words(rank, max_size, 1).map(reduce).filter(lambda w: not w.is_identity)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
