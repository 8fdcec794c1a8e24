"""Cyclotomic integers written as sums of roots of unity.

A :class:`RootSum` stores a conductor ``N`` and a multiset of exponents of
``zeta_N = exp(2*pi*i/N)``.  Multiplicities may be negative.  Values are
compared through :func:`canonicalize`, which reduces the exponent polynomial
modulo the ``N``-th cyclotomic polynomial.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping

from flint import fmpz_poly

from .nt import euler_phi, prime_factors, valuation

DEFAULT_MAX_CONDUCTOR = 10080
MAX_CONDUCTOR = DEFAULT_MAX_CONDUCTOR


class ConductorOverflow(ValueError):
    """Raised when an operation would need a conductor above the configured ceiling."""


class ParseError(ValueError):
    pass


def set_max_conductor(n: int) -> None:
    global MAX_CONDUCTOR
    if n < 1:
        raise ValueError("maximum conductor must be positive")
    MAX_CONDUCTOR = int(n)


def _check_conductor(n: int) -> int:
    if n > MAX_CONDUCTOR:
        raise ConductorOverflow(f"conductor {n} exceeds the configured maximum {MAX_CONDUCTOR}")
    return n


@lru_cache(maxsize=256)
def cyclotomic_poly(n: int) -> fmpz_poly:
    return fmpz_poly.cyclotomic(n)


def _combine(conductor: int, pairs: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    acc: dict[int, int] = {}
    for e, m in pairs:
        e = int(e) % conductor
        acc[e] = acc.get(e, 0) + int(m)
    return tuple(sorted((e, m) for e, m in acc.items() if m != 0))


@dataclass(frozen=True)
class RootSum:
    """``sum(m * zeta_N**e for e, m in terms)`` with ``N = conductor``.

    Equality and hashing are on the representation; use :func:`same_value`
    to compare the numbers themselves.
    """

    conductor: int
    terms: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        n = int(self.conductor)
        if n < 1:
            raise ValueError("conductor must be a positive integer")
        object.__setattr__(self, "conductor", n)
        pairs = self.terms.items() if isinstance(self.terms, Mapping) else self.terms
        object.__setattr__(self, "terms", _combine(n, pairs))

    # constructors
    @classmethod
    def integer(cls, value: int) -> RootSum:
        return cls(1, [(0, value)])

    @classmethod
    def root(cls, conductor: int, exponent: int = 1) -> RootSum:
        return cls(conductor, [(exponent, 1)])

    @classmethod
    def from_exponents(cls, conductor: int, exponents: Iterable[int]) -> RootSum:
        return cls(conductor, [(e, 1) for e in exponents])

    @classmethod
    def parse(cls, text: str) -> RootSum:
        """Parse ``"N:e1^m1,e2^m2,..."``; a bare ``e`` means multiplicity one."""
        match = re.fullmatch(r"\s*(\d+)\s*:\s*(.*?)\s*", text)
        if not match:
            raise ParseError(f"expected 'N:e^m,...', got {text!r}")
        n = int(match.group(1))
        if n < 1:
            raise ParseError("conductor must be positive")
        _check_conductor(n)
        body = match.group(2)
        pairs = []
        if body:
            for chunk in body.split(","):
                item = re.fullmatch(r"\s*(-?\d+)\s*(?:\^\s*(-?\d+))?\s*", chunk)
                if not item:
                    raise ParseError(f"bad term {chunk!r} in {text!r}")
                pairs.append((int(item.group(1)), int(item.group(2) or 1)))
        return cls(n, pairs)

    def __str__(self) -> str:
        return f"{self.conductor}:" + ",".join(f"{e}^{m}" for e, m in self.terms)

    # structure
    @property
    def term_count(self) -> int:
        """Sum of absolute multiplicities; an upper bound for the minimal number of roots."""
        return sum(abs(m) for _, m in self.terms)

    def lift(self, conductor: int) -> RootSum:
        if conductor % self.conductor:
            raise ValueError(f"{conductor} is not a multiple of {self.conductor}")
        step = conductor // self.conductor
        return RootSum(conductor, [(e * step, m) for e, m in self.terms])

    def conj(self) -> RootSum:
        return RootSum(self.conductor, [(-e, m) for e, m in self.terms])

    def times_root(self, conductor: int, exponent: int = 1) -> RootSum:
        return mul(self, RootSum.root(conductor, exponent))

    def is_zero(self) -> bool:
        return canonicalize(self).is_zero()

    def __complex__(self) -> complex:
        n = self.conductor
        return sum((m * cmath.exp(2j * math.pi * e / n) for e, m in self.terms), 0j)

    # arithmetic
    def __add__(self, other):
        if isinstance(other, int):
            other = RootSum.integer(other)
        if not isinstance(other, RootSum):
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> RootSum:
        return RootSum(self.conductor, [(e, -m) for e, m in self.terms])

    def __sub__(self, other):
        if isinstance(other, int):
            other = RootSum.integer(other)
        if not isinstance(other, RootSum):
            return NotImplemented
        return add(self, -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return RootSum(self.conductor, [(e, m * other) for e, m in self.terms])
        if not isinstance(other, RootSum):
            return NotImplemented
        return mul(self, other)

    __rmul__ = __mul__


@dataclass(frozen=True)
class CanonicalForm:
    """Coefficients of the power basis ``1, zeta_N, ..., zeta_N**(phi(N)-1)``."""

    conductor: int
    coeffs: tuple[int, ...]

    def is_zero(self) -> bool:
        return not any(self.coeffs)


@dataclass(frozen=True)
class GaloisElement:
    """The automorphism ``zeta_N -> zeta_N**k`` of Q(zeta_N)."""

    conductor: int
    k: int

    def __post_init__(self):
        n, k = int(self.conductor), int(self.k)
        if n < 1:
            raise ValueError("conductor must be positive")
        if math.gcd(k, n) != 1:
            raise ValueError(f"k={k} is not coprime to {n}")
        object.__setattr__(self, "conductor", n)
        object.__setattr__(self, "k", k % n if n > 1 else 1)

    @classmethod
    def conjugation(cls, conductor: int) -> GaloisElement:
        return cls(conductor, conductor - 1 if conductor > 1 else 1)

    def compose(self, other: GaloisElement) -> GaloisElement:
        n = math.lcm(self.conductor, other.conductor)
        return GaloisElement(n, self.k * other.k)


def _lift_pair(a: RootSum, b: RootSum) -> tuple[RootSum, RootSum]:
    n = _check_conductor(math.lcm(a.conductor, b.conductor))
    return a.lift(n), b.lift(n)


def add(a: RootSum, b: RootSum) -> RootSum:
    a, b = _lift_pair(a, b)
    return RootSum(a.conductor, a.terms + b.terms)


def mul(a: RootSum, b: RootSum) -> RootSum:
    a, b = _lift_pair(a, b)
    return RootSum(a.conductor, [(e + f, m * k) for e, m in a.terms for f, k in b.terms])


def canonicalize(a: RootSum) -> CanonicalForm:
    n = a.conductor
    dense = [0] * n
    for e, m in a.terms:
        dense[e] = m
    rem = fmpz_poly(dense) % cyclotomic_poly(n)
    coeffs = [int(c) for c in rem.coeffs()]
    coeffs += [0] * (euler_phi(n) - len(coeffs))
    return CanonicalForm(n, tuple(coeffs))


def same_value(a: RootSum, b: RootSum) -> bool:
    return (a - b).is_zero()


def apply_galois(g: GaloisElement, a: RootSum) -> RootSum:
    """Apply ``zeta_L -> zeta_L**k`` where ``L = lcm(g.conductor, a.conductor)``."""
    big = math.lcm(g.conductor, a.conductor)
    if math.gcd(g.k, big) != 1:
        raise ValueError(f"k={g.k} is not coprime to the lifted conductor {big}")
    return RootSum(a.conductor, [(g.k * e, m) for e, m in a.terms])


def split_prime(a: RootSum, p: int) -> tuple[int, tuple[RootSum, ...]]:
    """Write ``a = sum_j zeta_{p^n}**j * eta_j`` with ``eta_j`` at level ``N/p``.

    Returns ``(n, (eta_0, ..., eta_{p-1}))`` where ``p**n`` exactly divides ``N``.
    """
    n_total = a.conductor
    n = valuation(n_total, p)
    if n == 0:
        raise ValueError(f"{p} does not divide the conductor {n_total}")
    q = p**n
    m = n_total // q
    sub = n_total // p
    inv_m = pow(m, -1, q) if q > 1 else 0
    inv_q = pow(q, -1, m) if m > 1 else 0
    parts: list[list[tuple[int, int]]] = [[] for _ in range(p)]
    for e, mult in a.terms:
        x = (e * inv_m) % q
        y = (e * inv_q) % m if m > 1 else 0
        j, t = x % p, x // p
        parts[j].append((t * m + y * (q // p), mult))
    return n, tuple(RootSum(sub, part) for part in parts)


def descend(a: RootSum) -> RootSum:
    """Rewrite ``a`` over the smallest conductor whose field contains it."""
    current = a
    progress = True
    while progress and current.conductor > 1:
        progress = False
        for p in prime_factors(current.conductor):
            n, parts = split_prime(current, p)
            if n >= 2:
                if all(part.is_zero() for part in parts[1:]):
                    current = parts[0]
                    progress = True
            else:
                first = canonicalize(parts[1])
                if all(canonicalize(part) == first for part in parts[2:]):
                    current = parts[0] - parts[1]
                    progress = True
            if progress:
                break
    return current


def conductor_of(a: RootSum) -> int:
    return descend(a).conductor


def classify_vanishing_sum(a: RootSum) -> list[tuple[int, tuple[int, ...]]]:
    """Split a vanishing sum of at most five roots into rotated full sets of p-th roots.

    Returns ``[(p, exponents), ...]`` with exponents over ``a.conductor``.
    """
    if any(m <= 0 for _, m in a.terms):
        raise ValueError("vanishing-sum classification needs positive multiplicities")
    terms = [e for e, m in a.terms for _ in range(m)]
    if len(terms) > 5:
        raise ValueError("only sums of at most five roots are classified")
    if not a.is_zero():
        raise ValueError(f"{a} does not sum to zero")
    n = a.conductor

    def search(rest: list[int]):
        if not rest:
            return []
        head, tail = rest[0], rest[1:]
        for p in (2, 3, 5):
            if n % p or p - 1 > len(tail):
                continue
            group = sorted((head + t * (n // p)) % n for t in range(p))
            for idx in combinations(range(len(tail)), p - 1):
                if sorted([head] + [tail[i] for i in idx]) != group:
                    continue
                remaining = [x for i, x in enumerate(tail) if i not in idx]
                found = search(remaining)
                if found is not None:
                    return [(p, tuple(group))] + found
        return None

    result = search(sorted(terms))
    if result is None:
        raise RuntimeError(f"no decomposition into equally spaced groups for {a}")
    return result
