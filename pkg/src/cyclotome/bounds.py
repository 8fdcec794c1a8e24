"""Bounding tools: p-decompositions, the conjugation bound and the M < 13/4 certificate."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

import sympy
from flint import arb, fmpq, fmpz_poly

from .ball import (
    SQUARE_THRESHOLD_BASE,
    START_BITS,
    Certainty,
    certify_equal_to_algebraic,
    eval_conjugate,
    working_precision,
)
from .cyclo import RootSum, canonicalize, descend, split_prime
from .galois import m_of
from .house import FORM_B, ListValue, house_of
from .nt import euler_phi, valuation

THIRTEEN_FOURTHS = Fraction(13, 4)
F_INTERVAL_END = Fraction(126, 25)
DERIVATIVE_ZEROS_CLAIMED = 14


class CertificationError(RuntimeError):
    """A numeric fact the bounds rely on could not be certified."""


# --------------------------------------------------------------------------
# the polynomial table


@dataclass(frozen=True)
class PEntry:
    index: int
    coeffs: tuple[int, ...]  # constant term first
    thousandths: int
    n: Optional[int]
    note: str = ""

    @property
    def poly(self) -> fmpz_poly:
        return fmpz_poly(list(self.coeffs))

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.thousandths, 1000)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def excluded(self) -> bool:
        """Rows without a conductor never correspond to a house."""
        return self.n is None

    def sympy_poly(self) -> sympy.Poly:
        x = sympy.Symbol("x")
        return sympy.Poly(list(reversed(self.coeffs)), x)


PTABLE: tuple[PEntry, ...] = (
    PEntry(1, (-3, 1), 110, 4),
    PEntry(2, (-4, 1), 530, 6),
    PEntry(3, (-5, 1), 620, 1),
    PEntry(4, (6, -6, 1), 18, 12),
    PEntry(5, (7, -6, 1), 28, 8),
    PEntry(6, (11, -7, 1), 194, 10),
    PEntry(7, (-29, 31, -10, 1), 130, 14),
    PEntry(8, (41, -98, 58, -13, 1), 45, None, "D8 Galois group, excluded from the list mapping"),
    PEntry(9, (61, -107, 59, -13, 1), 40, 15),
)


def is_irreducible(entry: PEntry) -> bool:
    _, factors = entry.poly.factor()
    return len(factors) == 1 and factors[0][1] == 1 and factors[0][0].degree() == entry.degree


def roots_real_positive(entry: PEntry) -> bool:
    sp = entry.sympy_poly()
    return sp.eval(0) != 0 and sp.count_roots(0, None) == entry.degree


def poly_at(coeffs: Sequence[int], x: RootSum) -> RootSum:
    """Exact value of an integer polynomial at a cyclotomic integer (Horner)."""
    acc = RootSum.integer(0)
    for c in reversed(coeffs):
        acc = acc * x + int(c)
    return acc


def _largest_real_root(poly: fmpz_poly) -> arb:
    roots = [r.real for r, _ in poly.complex_roots()]
    best = roots[0]
    for r in roots[1:]:
        if r > best:
            best = r
        elif not r < best:
            raise CertificationError("largest root not separated at this precision")
    return best


@dataclass
class LargestRootReport:
    entry: PEntry
    root: arb
    target: ListValue
    degree: int
    verdict: Certainty
    exact: bool

    @property
    def holds(self) -> bool:
        return self.verdict is Certainty.EQUAL and self.exact


def largest_root_identity(entry: PEntry, bits: int = START_BITS) -> LargestRootReport:
    """Decide whether the largest root of ``entry`` is ``FormB(n)**2``.

    The root and the target both lie in a field of degree at most
    ``deg P * phi(n)`` whose conjugates are in ``[0, 5.04]``, so the norm
    argument on squares applies with that degree.  As an independent exact
    check, ``P(3 + z + 1/z)`` must vanish for ``z`` a primitive n-th root.
    """
    if entry.excluded:
        raise ValueError(f"row {entry.index} has no list value")
    target = ListValue(FORM_B, entry.n)
    degree = entry.degree * euler_phi(entry.n)
    z = RootSum(entry.n, [(1, 1), (-1, 1)]) + 3
    exact = poly_at(entry.coeffs, z).is_zero()
    while True:
        with working_precision(bits):
            root = _largest_real_root(entry.poly)
            verdict = certify_equal_to_algebraic(root, target.square_ball(), degree, SQUARE_THRESHOLD_BASE)
        if verdict is not Certainty.NEEDS_PRECISION or bits > 4096:
            return LargestRootReport(entry, root, target, degree, verdict, exact)
        bits *= 2


# --------------------------------------------------------------------------
# the auxiliary function f and its positivity


def _f_numerator() -> sympy.Poly:
    """Numerator of ``-1000 * f'`` after clearing the denominators ``P_i``."""
    polys = [e.sympy_poly() for e in PTABLE]
    prod = polys[0]
    for p in polys[1:]:
        prod = prod * p
    out = prod * 1000
    for entry, p in zip(PTABLE, polys):
        rest = prod.exquo(p)
        out = out + rest * p.diff() * entry.thousandths
    return out


def _product_poly() -> sympy.Poly:
    polys = [e.sympy_poly() for e in PTABLE]
    prod = polys[0]
    for p in polys[1:]:
        prod = prod * p
    return prod


def f_ball(x: arb) -> arb:
    """Enclosure of ``13/4 - x - sum alpha_i log|P_i(x)|`` over the ball ``x``."""
    total = arb(fmpq(13, 4)) - x
    for entry in PTABLE:
        value = entry.poly(x)
        if value.contains(0):
            raise ZeroDivisionError("ball meets a root of the table polynomials")
        total -= arb(fmpq(entry.thousandths, 1000)) * abs(value).log()
    return total


def f_float(x: float) -> float:
    total = 13 / 4 - x
    for entry in PTABLE:
        value = sum(c * x**i for i, c in enumerate(entry.coeffs))
        total -= entry.thousandths / 1000 * math.log(abs(value))
    return total


def _interval_ball(lo: Fraction, hi: Fraction) -> arb:
    mid = (lo + hi) / 2
    rad = (hi - lo) / 2
    out = arb(fmpq(mid.numerator, mid.denominator))
    if rad:
        out += arb(0, arb(fmpq(rad.numerator, rad.denominator)).upper())
    return out


def _frac(r) -> Fraction:
    r = sympy.Rational(r)
    return Fraction(int(r.p), int(r.q))


@dataclass
class CriticalPoint:
    lo: Fraction
    hi: Fraction
    f_value: arb

    @property
    def positive(self) -> bool:
        return self.f_value > 0


@dataclass
class Lemma31Certificate:
    zero_count: int
    zero_count_flint: int
    critical_points: list[CriticalPoint]
    f_start: arb
    f_end: arb
    pole_count: int
    poles_simple: bool
    numerator_coprime: bool
    alphas_positive: bool
    irreducible: bool
    roots_real_positive: bool
    notes: list[str] = field(default_factory=list)

    @property
    def positive_everywhere(self) -> bool:
        """Positivity at every critical point and at both endpoints, with the pole checks."""
        return (
            all(c.positive for c in self.critical_points)
            and self.f_start > 0
            and self.f_end > 0
            and self.poles_simple
            and self.numerator_coprime
            and self.alphas_positive
        )

    @property
    def count_matches(self) -> bool:
        return self.zero_count == DERIVATIVE_ZEROS_CLAIMED

    @property
    def passed(self) -> bool:
        return self.positive_everywhere and self.count_matches

    @property
    def min_critical_value(self) -> float:
        return min(float(c.f_value.mid()) for c in self.critical_points)

    def summary(self) -> dict:
        return {
            "derivative_zeros": self.zero_count,
            "derivative_zeros_expected": DERIVATIVE_ZEROS_CLAIMED,
            "derivative_zeros_flint": self.zero_count_flint,
            "poles_in_range": self.pole_count,
            "f_at_0": self.f_start.mid().str(12, radius=False),
            "f_at_end": self.f_end.mid().str(12, radius=False),
            "min_f_at_critical": f"{self.min_critical_value:.6g}",
            "positive_everywhere": self.positive_everywhere,
            "count_matches": self.count_matches,
        }


def verify_lemma31_positivity(bits: int = START_BITS, strict: bool = True) -> Lemma31Certificate:
    """Certify the sign of f at its critical points and at the endpoints of [0, 126/25].

    Critical points are the real roots of an integer polynomial (the
    numerator of f'), isolated exactly with rational intervals; f is then
    evaluated over each whole interval in ball arithmetic.  With ``strict``,
    a failure to certify positivity raises :class:`CertificationError`.
    """
    num = _f_numerator()
    prod = _product_poly()
    end = sympy.Rational(F_INTERVAL_END.numerator, F_INTERVAL_END.denominator)
    zero_count = int(num.count_roots(0, end))
    coprime = sympy.gcd(num, prod).degree() == 0
    pole_count = int(prod.count_roots(0, end))
    poles_simple = sympy.gcd(prod, prod.diff()).degree() == 0

    flint_num = fmpz_poly([int(c) for c in reversed(num.all_coeffs())])
    with working_precision(bits):
        flint_count = 0
        for r, mult in flint_num.complex_roots():
            if r.imag.contains(0) and not (r.real < 0) and not (r.real > 126 / 25):
                flint_count += mult

    points = []
    eps = Fraction(1, 10**12)
    intervals = num.intervals(inf=0, sup=end, eps=sympy.Rational(eps.numerator, eps.denominator))
    for (lo, hi), _ in intervals:
        lo, hi = _frac(lo), _frac(hi)
        value = None
        for _ in range(6):
            try:
                with working_precision(bits):
                    value = f_ball(_interval_ball(lo, hi))
            except ZeroDivisionError:
                value = None
            if value is not None and (value > 0 or value < 0):
                break
            lo_s, hi_s = num.refine_root(
                sympy.Rational(lo.numerator, lo.denominator),
                sympy.Rational(hi.numerator, hi.denominator),
                eps=sympy.Rational(1, 10**40),
            )
            lo, hi = _frac(lo_s), _frac(hi_s)
        points.append(CriticalPoint(lo, hi, value if value is not None else arb(0, 1)))

    with working_precision(bits):
        f0 = f_ball(arb(0))
        f1 = f_ball(arb(fmpq(F_INTERVAL_END.numerator, F_INTERVAL_END.denominator)))

    cert = Lemma31Certificate(
        zero_count=zero_count,
        zero_count_flint=flint_count,
        critical_points=points,
        f_start=f0,
        f_end=f1,
        pole_count=pole_count,
        poles_simple=poles_simple,
        numerator_coprime=coprime,
        alphas_positive=all(e.thousandths > 0 for e in PTABLE),
        irreducible=all(is_irreducible(e) for e in PTABLE),
        roots_real_positive=all(roots_real_positive(e) for e in PTABLE),
    )
    if zero_count != flint_count:
        cert.notes.append(f"root counts disagree: sturm {zero_count}, flint {flint_count}")
    if not cert.count_matches:
        cert.notes.append(
            f"f' has {zero_count} zeros in [0, 126/25], not {DERIVATIVE_ZEROS_CLAIMED}; "
            f"f has {pole_count} poles there, so at least {pole_count - 1} critical points are forced"
        )
    if strict and not cert.positive_everywhere:
        raise CertificationError(f"positivity of f not certified: {cert.summary()}")
    return cert


def table_poles(bits: int = START_BITS) -> list[float]:
    """Real roots of the table polynomials in [0, 126/25], as floats."""
    out = []
    with working_precision(bits):
        for entry in PTABLE:
            for r, _ in entry.poly.complex_roots():
                v = float(r.real.mid())
                if 0 <= v <= float(F_INTERVAL_END):
                    out.append(v)
    return sorted(out)


def plot_samples(points: int = 1000, lo: float = 0.0, hi: float = float(F_INTERVAL_END), exclusion: float = 1e-3):
    """``(x, f(x))`` on an even grid, skipping x within ``exclusion`` of a pole."""
    if not 0 <= lo < hi <= float(F_INTERVAL_END):
        raise ValueError("grid must lie inside [0, 126/25]")
    if points < 2:
        raise ValueError("need at least two grid points")
    poles = table_poles()
    rows = []
    for i in range(points):
        x = lo + (hi - lo) * i / (points - 1)
        if any(abs(x - r) < exclusion for r in poles):
            continue
        rows.append((x, f_float(x)))
    return rows


def samples_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "f"])
    for x, y in rows:
        writer.writerow([f"{x:.10f}", f"{y:.12g}"])
    return buf.getvalue()


# --------------------------------------------------------------------------
# the contrapositive check for M >= 13/4

BELOW = "BelowThirteenFourths"
FORM_B_ROOT = "IsFormBRoot"
VIOLATION = "Violation"


@dataclass(frozen=True)
class MBoundResult:
    verdict: str
    m: Fraction
    index: Optional[int] = None
    n: Optional[int] = None

    def __str__(self) -> str:
        if self.verdict == FORM_B_ROOT:
            return f"{FORM_B_ROOT}({self.index}) N={self.n}"
        return self.verdict


def m_upper_bound_check(a: RootSum) -> MBoundResult:
    """Either ``M(a) < 13/4`` or ``a * conj(a)`` is a root of a usable table polynomial.

    The caller is responsible for ``house(a)**2 <= 126/25``.
    """
    m = m_of(a)
    if m < THIRTEEN_FOURTHS:
        return MBoundResult(BELOW, m)
    norm = a * a.conj()
    for entry in PTABLE:
        if entry.excluded:
            continue
        if poly_at(entry.coeffs, norm).is_zero():
            return MBoundResult(FORM_B_ROOT, m, entry.index, entry.n)
    return MBoundResult(VIOLATION, m)


# --------------------------------------------------------------------------
# p-decompositions


@dataclass(frozen=True)
class Decomposition:
    base: RootSum
    p: int
    n: int
    parts: tuple[RootSum, ...]

    @property
    def X(self) -> int:
        return sum(1 for part in self.parts if not part.is_zero())

    @property
    def nonzero_parts(self) -> tuple[RootSum, ...]:
        return tuple(part for part in self.parts if not part.is_zero())

    @property
    def nonzero_indices(self) -> tuple[int, ...]:
        return tuple(j for j, part in enumerate(self.parts) if not part.is_zero())

    def reassemble(self) -> RootSum:
        q = self.p**self.n
        total = RootSum.integer(0)
        for j, part in enumerate(self.parts):
            total = total + part.times_root(q, j)
        return total

    def shifted(self, c: RootSum) -> Decomposition:
        """Subtract ``c`` from every part (only value-preserving when n == 1)."""
        if self.n != 1:
            raise ValueError("constant shifts preserve the value only when p exactly divides N")
        return Decomposition(self.base, self.p, self.n, tuple(part - c for part in self.parts))


def p_decompose(a: RootSum, p: int, shift: bool = True) -> Decomposition:
    """Split ``a`` along the p-part of its conductor.

    When p exactly divides the conductor, the parts are fixed only up to a
    common constant; with ``shift`` the constant is chosen to minimise X.
    Ties keep the unshifted parts when possible, then the shift with the
    lexicographically smallest canonical form.
    """
    if p < 2 or a.conductor % p:
        raise ValueError(f"{p} does not divide the conductor {a.conductor}")
    n, parts = split_prime(a, p)
    dec = Decomposition(a, p, n, parts)
    if n != 1 or not shift:
        return dec
    options = [(dec.X, 0, (), dec)]
    seen = set()
    for part in parts:
        key = canonicalize(part).coeffs
        if key in seen or not any(key):
            continue
        seen.add(key)
        moved = dec.shifted(part)
        options.append((moved.X, 1, key, moved))
    options.sort(key=lambda t: t[:3])
    return options[0][3]


@dataclass(frozen=True)
class IdentityReport:
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def check_exact_eqn(d: Decomposition) -> IdentityReport:
    """``(p-1) M(b) = (p-X) sum M(a_i) + sum_{i<j} M(a_i - a_j)`` for n == 1."""
    if d.n != 1:
        raise ValueError("the exact identity needs p to divide the conductor exactly once")
    alphas = d.nonzero_parts
    lhs = (d.p - 1) * m_of(d.base)
    rhs = (d.p - len(alphas)) * sum((m_of(x) for x in alphas), Fraction(0))
    rhs += sum((m_of(x - y) for x, y in combinations(alphas, 2)), Fraction(0))
    return IdentityReport(lhs, rhs)


def check_square_eqn(d: Decomposition) -> IdentityReport:
    """``M(b) = sum M(a_i)`` when p**2 divides the conductor."""
    if d.n < 2:
        raise ValueError("the square identity needs p**2 to divide the conductor")
    return IdentityReport(m_of(d.base), sum((m_of(x) for x in d.nonzero_parts), Fraction(0)))


@dataclass(frozen=True)
class SReport:
    s: Fraction
    bound: Fraction

    @property
    def excluded(self) -> bool:
        """True when S reaches the bound, so the configuration is impossible."""
        return self.s >= self.bound


def s_value(m_parts: Sequence[Fraction], m_diffs: Sequence[Fraction], p: int = 5) -> Fraction:
    x = len(m_parts)
    if len(m_diffs) != x * (x - 1) // 2:
        raise ValueError("need one difference term per pair of parts")
    return (p - x) * sum(m_parts, Fraction(0)) + sum(m_diffs, Fraction(0))


def check_s_inequality(parts: Sequence[RootSum], p: int) -> SReport:
    """Exact S for the given nonzero parts against ``13 (p-1) / 4``."""
    parts = [x for x in parts if not x.is_zero()]
    m_parts = [m_of(x) for x in parts]
    m_diffs = [m_of(x - y) for x, y in combinations(parts, 2)]
    return SReport(s_value(m_parts, m_diffs, p), THIRTEEN_FOURTHS * (p - 1))


# --------------------------------------------------------------------------
# the conjugation lower bound

MAGNITUDES = "magnitudes"
HOUSES = "houses"


def root_order_exponent(conductor: int, p: int) -> int:
    """Largest m with a primitive p**m-th root of unity in Q(zeta_conductor)."""
    m = valuation(conductor, p)
    return max(m, 1) if p == 2 else m


def conj_lower_bound(alpha: RootSum, gamma: RootSum, p: int, n: int, mode: str = MAGNITUDES) -> arb:
    """Lower bound for the squared house of ``alpha + zeta_{p**n} gamma``.

    ``|alpha|**2 + |gamma|**2 + 2 |alpha| |gamma| cos(theta)`` with
    ``theta = 2 pi / p**n`` when no nontrivial p-power root of unity lies in
    the fields of alpha and gamma, and ``pi / p**(n-m)`` otherwise.  In
    ``houses`` mode the magnitudes are replaced by houses, which needs
    coprime conductors.
    """
    c_alpha, c_gamma = descend(alpha).conductor, descend(gamma).conductor
    m = max(root_order_exponent(c_alpha, p), root_order_exponent(c_gamma, p))
    if m >= n:
        raise ValueError(f"zeta_{p}^{m} already lies in the fields; need m < n")
    if mode not in (MAGNITUDES, HOUSES):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == HOUSES and math.gcd(c_alpha, c_gamma) != 1:
        raise ValueError("houses mode needs coprime conductors")
    q = fmpq(2, p**n) if m == 0 else fmpq(1, p ** (n - m))
    with working_precision(START_BITS):
        if mode == MAGNITUDES:
            a_abs = abs(eval_conjugate(alpha, 1, START_BITS))
            g_abs = abs(eval_conjugate(gamma, 1, START_BITS))
        else:
            a_abs = house_of(alpha).house if not alpha.is_zero() else arb(0)
            g_abs = house_of(gamma).house if not gamma.is_zero() else arb(0)
        return a_abs * a_abs + g_abs * g_abs + 2 * a_abs * g_abs * arb.cos_pi_fmpq(q)


def assemble(alpha: RootSum, gamma: RootSum, p: int, n: int) -> RootSum:
    return alpha + gamma.times_root(p**n, 1)
