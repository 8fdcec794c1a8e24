"""Small cached number-theoretic helpers shared across the package."""
from __future__ import annotations

from functools import lru_cache

from sympy import divisors as _divisors
from sympy import factorint as _factorint
from sympy import totient as _totient
from sympy.functions.combinatorial.numbers import mobius as _mobius


@lru_cache(maxsize=None)
def euler_phi(n: int) -> int:
    return int(_totient(n))


@lru_cache(maxsize=None)
def mobius(n: int) -> int:
    return int(_mobius(n))


@lru_cache(maxsize=None)
def factorization(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted((int(p), int(e)) for p, e in _factorint(n).items()))


def prime_factors(n: int) -> tuple[int, ...]:
    return tuple(p for p, _ in factorization(n))


@lru_cache(maxsize=None)
def divisors(n: int) -> tuple[int, ...]:
    return tuple(int(d) for d in _divisors(n))


def valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@lru_cache(maxsize=None)
def units(n: int) -> tuple[int, ...]:
    """Residues in [1, n] coprime to n (so ``units(1) == (1,)``)."""
    from math import gcd

    return tuple(k for k in range(1, n + 1) if gcd(k, n) == 1)
