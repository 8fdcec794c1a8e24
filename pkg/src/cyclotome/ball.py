"""Certified midpoint-radius arithmetic and the precision policy.

Real and complex balls are python-flint ``arb``/``acb`` values (``acb`` is a
rectangle of two real balls).  Working precision is flint's global context,
set through :func:`working_precision`.
"""
from __future__ import annotations

import enum
import math
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from flint import acb, arb, ctx, fmpq

from .cyclo import GaloisElement, RootSum
from .nt import euler_phi

BallReal = arb
BallComplex = acb

START_BITS = 128
GUARD_BITS = 64
EXTRA_STOP_BITS = 256
HOUSE_SQ_CEILING = Fraction(126, 25)
# Conjugates of a difference of two houses are at most 10 + 1/25 in size.
THRESHOLD_BASE = Fraction(251, 25)
# Conjugates of a difference of two squared houses are at most 2 * (5 + 1/25).
SQUARE_THRESHOLD_BASE = 2 * HOUSE_SQ_CEILING

_prec_lock = threading.RLock()


class Ordering(enum.Enum):
    LESS = "Less"
    GREATER = "Greater"
    OVERLAP = "Overlap"


class Certainty(enum.Enum):
    EQUAL = "Equal"
    NOT_EQUAL = "NotEqual"
    NEEDS_PRECISION = "NeedsPrecision"


@contextmanager
def working_precision(bits: int):
    with _prec_lock:
        saved = ctx.prec
        ctx.prec = int(bits)
        try:
            yield
        finally:
            ctx.prec = saved


def budget_bits(degree: int) -> int:
    """Bits needed to resolve ``(10 + 1/25) ** -degree`` plus guard bits."""
    return math.ceil(degree * math.log2(float(THRESHOLD_BASE))) + GUARD_BITS


@dataclass(frozen=True)
class PrecisionPolicy:
    conductor: int
    degree: int
    bits: int

    def __post_init__(self):
        if self.bits < budget_bits(self.degree):
            raise ValueError(
                f"{self.bits} bits cannot resolve the equality threshold for degree {self.degree}"
            )

    @classmethod
    def for_conductor(cls, conductor: int, bits: int | None = None) -> PrecisionPolicy:
        degree = euler_phi(conductor)
        need = budget_bits(degree)
        return cls(conductor, degree, max(need, bits or 0))

    @property
    def stop_bits(self) -> int:
        return self.bits + EXTRA_STOP_BITS

    def ladder(self):
        """Precisions to try: 128, 256, ... capped by ``stop_bits``."""
        bits = START_BITS
        while bits < self.stop_bits:
            yield bits
            bits *= 2
        yield self.stop_bits


def ball(value, radius=0) -> arb:
    """Ball from an int, Fraction, string or float midpoint and a radius."""
    if isinstance(value, Fraction):
        value = arb(fmpq(value.numerator, value.denominator))
    else:
        value = arb(value)
    if radius:
        value = value + arb(0, radius)
    return value


def midpoint(x: arb) -> arb:
    return x.mid()


def radius(x: arb) -> arb:
    return x.rad()


@lru_cache(maxsize=64)
def _unit_table(conductor: int, bits: int) -> tuple[acb, ...]:
    with working_precision(bits):
        out = []
        for j in range(conductor):
            s, c = arb.sin_cos_pi_fmpq(fmpq(2 * j, conductor))
            out.append(acb(c, s))
        return tuple(out)


def unit_table(conductor: int, bits: int) -> tuple[acb, ...]:
    """``exp(2 pi i j / N)`` for ``j < N`` at ``bits`` precision, built once per pair."""
    with _prec_lock:
        return _unit_table(conductor, bits)


def eval_conjugate(a: RootSum, k: int, bits: int) -> acb:
    """Enclosure of ``sigma_k(a)`` with ``zeta_N -> exp(2 pi i k / N)``."""
    n = a.conductor
    table = unit_table(n, bits)
    with working_precision(bits):
        total = acb(0)
        for e, m in a.terms:
            total += m * table[(k * e) % n]
        return total


def evaluate(a: RootSum, g: GaloisElement | None = None, policy: PrecisionPolicy | None = None) -> acb:
    k = 1 if g is None else g.k
    bits = policy.bits if policy is not None else START_BITS
    if g is not None and math.gcd(k, a.conductor) != 1:
        raise ValueError("Galois element does not act on this conductor")
    return eval_conjugate(a, k, bits)


def abs_square(z: acb) -> arb:
    return z.real * z.real + z.imag * z.imag


def certified_compare(x: arb, y: arb) -> Ordering:
    if x < y:
        return Ordering.LESS
    if x > y:
        return Ordering.GREATER
    return Ordering.OVERLAP


def threshold(degree: int, base: Fraction = THRESHOLD_BASE) -> arb:
    return arb(fmpq(base.denominator, base.numerator)) ** degree


def certify_equal_to_algebraic(
    house: arb, target, degree: int, base: Fraction = THRESHOLD_BASE
) -> Certainty:
    """Decide ``house == target`` from ``|house - target| < base**-degree``.

    Sound when both numbers lie in a field of degree ``degree`` and every
    conjugate of their difference is at most ``base`` in absolute value: a
    nonzero algebraic integer has norm at least one.  ``target`` is an ``arb``
    or anything with a ``ball()`` method evaluated at the working precision.
    """
    gamma = target if isinstance(target, arb) else target.ball()
    diff = abs(house - gamma)
    if diff < threshold(degree, base):
        return Certainty.EQUAL
    if not diff.contains(0):
        return Certainty.NOT_EQUAL
    return Certainty.NEEDS_PRECISION
