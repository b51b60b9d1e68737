"""Dynamics of Out(F_N) on geodesic currents and on Outer space, on a computable slice."""

from .automorphism import Assertions, Automorphism, apply, compose, invert, pf_eigenvalue, power
from .currents import TruncatedCurrent, counting_current, projective_distance, uniform_current
from .errors import (
    CertificationError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FreedynError,
    MalformedInputError,
    ResourceError,
    UnsupportedOperationError,
)
from .freegroup import CyclicWord, GroupContext, Word, cyclic_reduce, reduce
from .trees import MarkedMetricRose, cayley_tree, pair, translation_length

__version__ = "0.1.0"

__all__ = [
    "Assertions",
    "Automorphism",
    "CertificationError",
    "ConfigError",
    "ConvergenceError",
    "CyclicWord",
    "DomainError",
    "FreedynError",
    "GroupContext",
    "MalformedInputError",
    "MarkedMetricRose",
    "ResourceError",
    "TruncatedCurrent",
    "UnsupportedOperationError",
    "Word",
    "apply",
    "cayley_tree",
    "compose",
    "counting_current",
    "cyclic_reduce",
    "invert",
    "pair",
    "pf_eigenvalue",
    "power",
    "projective_distance",
    "reduce",
    "translation_length",
    "uniform_current",
]
