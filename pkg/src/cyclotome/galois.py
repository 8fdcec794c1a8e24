"""Conjugates, exact traces and Cassels' M."""
from __future__ import annotations

import math
from fractions import Fraction

from .cyclo import GaloisElement, RootSum
from .nt import euler_phi, mobius, units

MValue = Fraction


def conjugates(a: RootSum) -> list[GaloisElement]:
    n = a.conductor
    return [GaloisElement(n, k) for k in units(n)]


def root_trace(conductor: int, exponent: int) -> int:
    """Trace of ``zeta_N**j`` from Q(zeta_N) to Q (a Ramanujan sum)."""
    d = math.gcd(exponent, conductor)
    order = conductor // d
    return mobius(order) * euler_phi(conductor) // euler_phi(order)


def trace(a: RootSum) -> int:
    n = a.conductor
    return sum(m * root_trace(n, e) for e, m in a.terms)


def m_of(a: RootSum) -> Fraction:
    """Mean of ``|a'|**2`` over the conjugates of ``a``, as an exact rational."""
    norm_sq = a * a.conj()
    return Fraction(trace(norm_sq), euler_phi(norm_sq.conductor))


def m_of_two_term(n: int) -> Fraction:
    """``M(1 + zeta_n) = 2 (1 + mu(n)/phi(n))``."""
    if n < 1:
        raise ValueError("n must be positive")
    return 2 * (1 + Fraction(mobius(n), euler_phi(n)))


def is_root_of_unity(a: RootSum) -> bool:
    """True when ``M(a) == 1``.

    The converse direction (M = 1 forces a root of unity) is Kronecker's
    theorem and is taken as given here.
    """
    return m_of(a) == 1
