"""Exact arithmetic, certified houses and searches for cyclotomic integers."""
from __future__ import annotations

from .ball import Certainty, PrecisionPolicy, evaluate, working_precision
from .cyclo import (
    CanonicalForm,
    ConductorOverflow,
    GaloisElement,
    ParseError,
    RootSum,
    apply_galois,
    canonicalize,
    conductor_of,
    descend,
    same_value,
)
from .galois import m_of, m_of_two_term, trace
from .house import HouseReport, ListValue, classify, house_of

__all__ = [
    "CanonicalForm",
    "Certainty",
    "ConductorOverflow",
    "GaloisElement",
    "HouseReport",
    "ListValue",
    "ParseError",
    "PrecisionPolicy",
    "RootSum",
    "apply_galois",
    "canonicalize",
    "classify",
    "conductor_of",
    "descend",
    "evaluate",
    "house_of",
    "m_of",
    "m_of_two_term",
    "same_value",
    "trace",
    "working_precision",
]

__version__ = "0.1.0"
