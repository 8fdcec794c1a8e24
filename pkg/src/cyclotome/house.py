"""Certified houses and classification against the list of small houses.

The two families are ``FormA(N) = 2 cos(pi/N)`` and
``FormB(N) = sqrt(1 + 4 cos(pi/N)**2)``; the exceptional values are
``sqrt((5 + sqrt 13)/2)``, ``(sqrt 7 + sqrt 3)/2`` and
``|1 + z + z**10 + z**29|`` with ``z = exp(2 pi i/70)``.

Equality with a list value is decided on squares.  If ``beta`` lies in
Q(zeta_C) then ``house(beta)**2`` is a conjugate of ``beta * conj(beta)``, so
it can only equal ``FormA(N)**2 = 2 + 2 cos(2 pi/N)`` or
``FormB(N)**2 = 3 + 2 cos(2 pi/N)`` when ``cos(2 pi/N)`` lies in Q(zeta_C),
which forces ``N | 2C`` or ``N <= 6``.  That makes the candidate list finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from flint import arb, fmpq

from .ball import (
    EXTRA_STOP_BITS,
    HOUSE_SQ_CEILING,
    SQUARE_THRESHOLD_BASE,
    START_BITS,
    Certainty,
    PrecisionPolicy,
    abs_square,
    budget_bits,
    certify_equal_to_algebraic,
    eval_conjugate,
    working_precision,
)
from .cyclo import GaloisElement, RootSum, descend
from .nt import divisors, euler_phi, units

FORM_A = "FormA"
FORM_B = "FormB"
EXC_SQRT13 = "ExcSqrt13"
EXC_SQRT7_SQRT3 = "ExcSqrt7Sqrt3"
EXC_70 = "Exc70"

ON_LIST = "OnList"
PROVED_EXCEEDS = "ProvedExceeds"
STRICTLY_BETWEEN = "StrictlyBetween"
UNRESOLVED = "Unresolved"

EXC70_BETA = RootSum.from_exponents(70, (0, 1, 10, 29))
NEAR_LIST_EPS = Fraction(1, 2**20)


@dataclass(frozen=True)
class ListValue:
    kind: str
    n: Optional[int] = None

    def __post_init__(self):
        if self.kind in (FORM_A, FORM_B):
            if self.n is None or self.n < 1:
                raise ValueError(f"{self.kind} needs a positive parameter")
        elif self.kind in (EXC_SQRT13, EXC_SQRT7_SQRT3, EXC_70):
            if self.n is not None:
                raise ValueError(f"{self.kind} takes no parameter")
        else:
            raise ValueError(f"unknown list value {self.kind!r}")

    @property
    def label(self) -> str:
        return self.kind if self.n is None else f"{self.kind}({self.n})"

    def __str__(self) -> str:
        return self.label

    @classmethod
    def parse(cls, label: str) -> ListValue:
        if "(" in label:
            kind, rest = label.split("(", 1)
            return cls(kind, int(rest.rstrip(")")))
        return cls(label)

    @property
    def level(self) -> int:
        """A conductor whose field contains the square of this value."""
        if self.kind in (FORM_A, FORM_B):
            return self.n
        return {EXC_SQRT13: 13, EXC_SQRT7_SQRT3: 21, EXC_70: 70}[self.kind]

    def square_ball(self) -> arb:
        """The squared value at the current working precision."""
        if self.kind in (FORM_A, FORM_B):
            c = 2 * arb.cos_pi_fmpq(fmpq(2, self.n))
            return c + (2 if self.kind == FORM_A else 3)
        if self.kind == EXC_SQRT13:
            return (5 + arb(13).sqrt()) / 2
        if self.kind == EXC_SQRT7_SQRT3:
            return (5 + arb(21).sqrt()) / 2
        from flint import ctx

        return abs_square(eval_conjugate(EXC70_BETA, 1, ctx.prec))

    def ball(self) -> arb:
        if self.kind == FORM_A:
            return 2 * arb.cos_pi_fmpq(fmpq(1, self.n))
        return self.square_ball().sqrt()

    def approx(self) -> float:
        with working_precision(START_BITS):
            return float(self.ball().mid())


def list_candidates(conductor: int) -> list[ListValue]:
    """List values a house over Q(zeta_conductor) could equal, in tie-break order."""
    ns = sorted(set(divisors(2 * conductor)) | {1, 2, 3, 4, 5, 6})
    out = [ListValue(FORM_A, n) for n in ns if n >= 3]
    out += [ListValue(FORM_B, n) for n in ns]
    out += [ListValue(EXC_SQRT13), ListValue(EXC_SQRT7_SQRT3), ListValue(EXC_70)]
    return out


@dataclass
class HouseReport:
    input: RootSum
    house: arb
    house_sq: arb
    conductor: int
    status: Optional[str] = None
    list_value: Optional[ListValue] = None
    threshold: Optional[Fraction] = None
    witness_k: Optional[int] = None
    bits: int = 0
    notes: list[str] = field(default_factory=list)
    # (mid, rad) text when loaded from JSON, so re-serialization is exact
    house_text: Optional[tuple[str, str]] = field(default=None, repr=False, compare=False)

    @property
    def degree(self) -> int:
        return euler_phi(self.conductor)

    @property
    def witness(self) -> Optional[GaloisElement]:
        if self.witness_k is None:
            return None
        return GaloisElement(self.conductor, self.witness_k)

    def to_json(self) -> dict:
        mid, rad = self.house_text or _ball_text(self.house)
        return {
            "input": str(self.input),
            "conductor": self.conductor,
            "degree": self.degree,
            "house_mid": mid,
            "house_rad": rad,
            "status": self.status,
            "list_value": None if self.list_value is None else self.list_value.label,
            "witness_k": self.witness_k,
        }

    @classmethod
    def from_json(cls, data: dict) -> HouseReport:
        with working_precision(START_BITS):
            house = arb(data["house_mid"], data["house_rad"])
            house_sq = house * house
        lv = data.get("list_value")
        return cls(
            input=RootSum.parse(data["input"]),
            house=house,
            house_sq=house_sq,
            conductor=data["conductor"],
            status=data["status"],
            list_value=None if lv is None else ListValue.parse(lv),
            threshold=HOUSE_SQ_CEILING if data["status"] == PROVED_EXCEEDS else None,
            witness_k=data.get("witness_k"),
            bits=START_BITS,
            house_text=(data["house_mid"], data["house_rad"]),
        )


def _ball_text(x: arb) -> tuple[str, str]:
    """Decimal midpoint and radius of a ball that still encloses ``x``."""
    text = x.str(30, radius=True)
    if not text.startswith("["):
        return text, "0"
    mid, rad = text[1:-1].split(" +/- ")
    return mid, rad


def _half_units(conductor: int) -> list[int]:
    # |sigma_{-k}(b)| = |sigma_k(b)|, so half of the units suffice.
    return [k for k in units(conductor) if 2 * k <= conductor or conductor <= 2]


def _squares(b: RootSum, bits: int) -> list[tuple[int, arb]]:
    with working_precision(bits):
        return [(k, abs_square(eval_conjugate(b, k, bits))) for k in _half_units(b.conductor)]


def _certified_max(b: RootSum, bits: int) -> tuple[arb, Optional[int]]:
    """Enclosure of the largest ``|sigma_k(b)|**2`` and its witness, if certified."""
    with working_precision(bits):
        sq = _squares(b, bits)
        lo = max((s.lower() for _, s in sq), key=lambda x: x.mid())
        hi = max((s.upper() for _, s in sq), key=lambda x: x.mid())
        enclosure = lo.union(hi)
        top = [(k, s) for k, s in sq if not (s < lo)]
        if len(top) == 1:
            return enclosure, top[0][0]
        # Conjugates of a difference of two conjugates of b*conj(b) are at most 2*hi.
        base = Fraction(math.ceil(2 * float(hi.upper().mid())) + 1)
        degree = euler_phi(b.conductor)
        ref = top[0][1]
        for _, s in top[1:]:
            if certify_equal_to_algebraic(s, ref, degree, base) is not Certainty.EQUAL:
                return enclosure, None
        return enclosure, min(k for k, _ in top)


def _ladder(start: int, stop: int):
    bits = max(START_BITS, start)
    while bits < stop:
        yield bits
        bits *= 2
    yield stop


def house_of(a: RootSum, policy: PrecisionPolicy | None = None) -> HouseReport:
    """Certified house of a nonzero cyclotomic integer.

    The status is left unset unless the precision ladder runs out, in which
    case it is ``Unresolved``.
    """
    b = descend(a)
    if not b.terms:
        raise ValueError("the house of zero is not defined")
    policy = policy or PrecisionPolicy.for_conductor(b.conductor)
    # The precision budget of the policy is sized for the reduced conductor.
    stop = max(policy.stop_bits, budget_bits(euler_phi(b.conductor)) + EXTRA_STOP_BITS)
    enclosure = None
    for bits in _ladder(START_BITS, stop):
        enclosure, witness = _certified_max(b, bits)
        if witness is not None:
            with working_precision(bits):
                return HouseReport(a, enclosure.sqrt(), enclosure, b.conductor, witness_k=witness, bits=bits)
    with working_precision(stop):
        return HouseReport(a, enclosure.sqrt(), enclosure, b.conductor, status=UNRESOLVED, bits=stop)


def classify(a: RootSum, policy: PrecisionPolicy | None = None) -> HouseReport:
    """House of ``a`` together with its status against the list."""
    report = house_of(a, policy)
    if report.status == UNRESOLVED:
        return report
    b = descend(a)
    conductor = b.conductor
    candidates = list_candidates(conductor)
    degrees = {c: euler_phi(math.lcm(conductor, c.level)) for c in candidates}
    ceiling = arb(fmpq(HOUSE_SQ_CEILING.numerator, HOUSE_SQ_CEILING.denominator))
    eps = arb(fmpq(NEAR_LIST_EPS.numerator, NEAR_LIST_EPS.denominator))
    stop = budget_bits(euler_phi(conductor)) + EXTRA_STOP_BITS
    bits = report.bits
    while True:
        sq, _ = _certified_max(b, bits) if bits != report.bits else (report.house_sq, None)
        with working_precision(bits):
            if sq > ceiling:
                report.status = PROVED_EXCEEDS
                report.threshold = HOUSE_SQ_CEILING
                return report
            if not sq.overlaps(ceiling):
                pending = []
                chosen = None
                for cand in candidates:
                    gamma_sq = cand.square_ball()
                    # cheap first pass: anything farther than eps is out
                    if abs(sq - gamma_sq) > eps:
                        continue
                    verdict = certify_equal_to_algebraic(sq, gamma_sq, degrees[cand], SQUARE_THRESHOLD_BASE)
                    if verdict is Certainty.EQUAL:
                        chosen = cand
                        break
                    if verdict is Certainty.NEEDS_PRECISION:
                        pending.append(cand)
                if chosen is not None and not pending:
                    report.status = ON_LIST
                    report.list_value = chosen
                    report.house_sq = sq
                    report.house = sq.sqrt()
                    report.bits = bits
                    return report
                if chosen is None and not pending:
                    report.status = STRICTLY_BETWEEN
                    report.house_sq = sq
                    report.house = sq.sqrt()
                    report.bits = bits
                    return report
                stop = max(stop, max(budget_bits(degrees[c]) for c in pending + [chosen] if c) + EXTRA_STOP_BITS)
        if bits >= stop:
            report.status = UNRESOLVED
            return report
        bits = min(2 * bits, stop)


def jones_form_M(n: int) -> int:
    """Parameter of the FormB house of ``1 + zeta_n - zeta_n**-1``."""
    if n < 3:
        raise ValueError("n must be at least 3")
    if n % 2:
        return 2 * n
    if (n // 2) % 2:
        return n
    if (n // 4) % 2:
        return n // 4
    return n // 2
