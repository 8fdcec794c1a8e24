"""Registry of reproducible computations and their quoted claims."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Callable, Optional

import numpy as np
from flint import arb, fmpq

from .ball import HOUSE_SQ_CEILING, START_BITS, abs_square, eval_conjugate, working_precision
from .bounds import (
    PTABLE,
    check_s_inequality,
    largest_root_identity,
    p_decompose,
    s_value,
    verify_lemma31_positivity,
)
from .cyclo import RootSum
from .house import ON_LIST, PROVED_EXCEEDS, STRICTLY_BETWEEN, UNRESOLVED, ListValue, classify, house_of
from .nt import divisors, units
from .search import Classifier, SearchSpec, enumerate_spec, float_exceeds, float_house_sq, half_units


@lru_cache(maxsize=1)
def claims() -> dict:
    text = resources.files("cyclotome").joinpath("data/claims.json").read_text()
    return json.loads(text)


def claim(case_id: str) -> dict:
    return claims()["cases"][case_id]


@dataclass
class CaseResult:
    case_id: str
    passed: bool
    count: Optional[int] = None
    expected_count: Optional[int] = None
    min_value: Optional[str] = None
    max_value: Optional[str] = None
    claim: str = ""
    details: dict = field(default_factory=dict)
    witnesses: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "case": self.case_id,
            "passed": self.passed,
            "count": self.count,
            "expected_count": self.expected_count,
            "min": self.min_value,
            "max": self.max_value,
            "claim": self.claim,
            "details": self.details,
            "witnesses": self.witnesses,
            "seconds": round(self.seconds, 3),
        }

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f" count={self.count}" if self.count is not None else ""
        extra += f" min={self.min_value}" if self.min_value is not None else ""
        return f"[{mark}] {self.case_id}:{extra} {self.claim}"


def _q(text: str) -> Fraction:
    return Fraction(text)


def _arb(x: Fraction) -> arb:
    return arb(fmpq(x.numerator, x.denominator))


def certify_above(beta: RootSum, bound: Fraction, bits: int = START_BITS) -> tuple[bool, arb]:
    """Certify ``house(beta)**2 > bound`` from a single well-chosen conjugate.

    The conjugate with the largest float value is evaluated in ball
    arithmetic; any conjugate above the bound is a proof.  Falls back to
    the full certified house otherwise.
    """
    n = beta.conductor
    us = half_units(n)
    exps = np.array([[e for e, _ in beta.terms]])
    mults = np.array([m for _, m in beta.terms])
    table = np.exp(2j * np.pi * ((exps[:, None, :] * us[None, :, None]) % n) / n)
    vals = np.abs((table * mults).sum(axis=2)[0]) ** 2
    k = int(us[int(np.argmax(vals))])
    with working_precision(bits):
        sq = abs_square(eval_conjugate(beta, k, bits))
        if sq > _arb(bound):
            return True, sq
    report = house_of(beta)
    with working_precision(report.bits or bits):
        return bool(report.house_sq > _arb(bound)), report.house_sq


def _fmt(x: arb, digits: int = 12) -> str:
    return x.mid().str(digits, radius=False)


def _certified_sweep(case_id: str, betas: list[RootSum], bound: Fraction, expected: int, text: str) -> CaseResult:
    lows = []
    failures = []
    for beta in betas:
        ok, sq = certify_above(beta, bound)
        lows.append((float(sq.mid()), str(beta), sq))
        if not ok:
            failures.append(str(beta))
    lows.sort(key=lambda t: t[0])
    best = lows[0][1] if lows else None
    # house**2 of the minimizing candidate, certified in full
    min_report = house_of(RootSum.parse(best)) if best else None
    min_text = _fmt(min_report.house_sq) if min_report else None
    passed = len(betas) == expected and not failures
    return CaseResult(
        case_id,
        passed,
        count=len(betas),
        expected_count=expected,
        min_value=min_text,
        claim=text,
        details={"minimizer": best, "bound": str(bound)},
        witnesses=failures,
    )


# --------------------------------------------------------------------------


def gamma5(j: int, k: int) -> RootSum:
    """``z3**j - z5**k - z5**-k`` over Q(zeta_15)."""
    return RootSum(15, [(5 * j, 1), (3 * k, -1), (-3 * k, -1)])


def case_p9_gamma5() -> CaseResult:
    c = claim("p9-gamma5")
    ms = divisors(40)
    betas = []
    for i in units(9):
        for m in ms:
            for j in (1, 2):
                for k in range(1, 5):
                    g = gamma5(j, k).times_root(m, 1).times_root(9, i)
                    betas.append(g + 1)
    bound = _q(c["min_house_sq_above"])
    return _certified_sweep("p9-gamma5", betas, bound, c["expected_count"], f"all house^2 > {bound}")


def _conjugate_list(base: RootSum) -> list[RootSum]:
    n = base.conductor
    return [RootSum(n, [(u * e, m) for e, m in base.terms]) for u in units(n)]


def case_p8_gamma57() -> CaseResult:
    c = claim("p8-gamma57")
    gammas = _conjugate_list(gamma5(1, 1)) + _conjugate_list(RootSum.from_exponents(7, (0, 1, 3)))
    betas = []
    for i in units(8):
        for m in divisors(315):
            for g in gammas:
                betas.append(g.times_root(m, 1).times_root(8, i) + 1)
    bound = _q(c["min_house_sq_above"])
    return _certified_sweep("p8-gamma57", betas, bound, c["expected_count"], f"all house^2 > {bound}")


def _p11x3_family_rows() -> tuple[int, np.ndarray]:
    level = 4620
    i = np.arange(420)
    a, b = np.meshgrid(i, i, indexing="ij")
    a, b = a.ravel(), b.ravel()
    blocks = []
    for n in (5, 7, 30):
        for j in range(2, 11):
            blocks.append(
                np.stack(
                    [np.zeros_like(a), 420 + 11 * a, 420 * j + 11 * b, 420 * j + 11 * b + level // n], axis=1
                )
                % level
            )
    return level, np.concatenate(blocks)


def case_p11x3(family: bool = True) -> CaseResult:
    c = claim("p11x3")
    named = RootSum.parse(c["named"])
    bound = _q(c["quoted_above"])
    report = house_of(named)
    ok_named = bool(report.house_sq > _arb(bound))
    dec = p_decompose(named.lift(math.lcm(named.conductor, 11)), 11)
    details = {
        "named": str(named),
        "named_house_sq": _fmt(report.house_sq),
        "named_house": _fmt(report.house),
        "named_X_at_11": dec.X,
    }
    passed = ok_named
    count = None
    if family:
        level, rows = _p11x3_family_rows()
        ceiling = _q(c["family_ceiling"])
        over = float_exceeds(level, rows, float(ceiling))
        over_quoted = float_exceeds(level, rows, float(bound))
        count = len(rows)
        details["family_above_ceiling"] = int(over.sum())
        details["family_at_or_below_quoted"] = int((~over_quoted).sum())
        passed = passed and bool(over.all())
    return CaseResult(
        "p11x3",
        passed,
        count=count,
        min_value=details["named_house_sq"],
        claim=f"house^2 of {named} > {bound}; every X=3 family member above the ceiling",
        details=details,
    )


def _prime_family(p: int) -> list[RootSum]:
    one_plus = RootSum.from_exponents(5, (0, 1))
    return [RootSum.from_exponents(p, (0, 1)) + one_plus.times_root(p, j) for j in range(2, p)]


def _prime_case(case_id: str, check_smallest: bool) -> CaseResult:
    c = claim(case_id)
    p, j0 = c["prime"], c["named_j"]
    bound = _q(c["house_sq_above"])
    family = _prime_family(p)
    named = family[j0 - 2]
    report = house_of(named)
    ok_named = bool(report.house_sq > _arb(bound))
    conductor = 5 * p
    exps = np.array([[e for e, _ in b.lift(conductor).terms] for b in family])
    values = float_house_sq(conductor, exps)
    j_min = int(np.argmin(values)) + 2
    smallest = bool(j_min == j0 or abs(values[j_min - 2] - values[j0 - 2]) < 1e-9)
    all_above_ceiling = all(certify_above(b, HOUSE_SQ_CEILING)[0] for b in family)
    details = {
        "named": str(named),
        "named_house_sq": _fmt(report.house_sq),
        "family_min_j": j_min,
        "family_min_house_sq": f"{values[j_min - 2]:.6f}",
        "named_is_smallest": smallest,
        "family_above_ceiling": all_above_ceiling,
    }
    passed = ok_named and all_above_ceiling and (smallest or not check_smallest)
    return CaseResult(
        case_id,
        passed,
        count=len(family),
        min_value=f"{values[j_min - 2]:.6f}",
        claim=f"house^2 of {named} > {bound}" + ("; it is the family minimum" if check_smallest else ""),
        details=details,
    )


def case_p13x3() -> CaseResult:
    result = _prime_case("p13x3-53", check_smallest=False)
    seven = RootSum.from_exponents(7, (0, 1))
    variant = [RootSum.from_exponents(13, (0, 1)) + seven.times_root(13, j) for j in range(2, 13)]
    exps = np.array([[e for e, _ in b.lift(91).terms] for b in variant])
    result.details["variant_1_plus_z7_min_house_sq"] = f"{float_house_sq(91, exps).min():.6f}"
    return result


def case_p17x3() -> CaseResult:
    return _prime_case("p17x3", check_smallest=True)


def case_p19x3() -> CaseResult:
    return _prime_case("p19x3", check_smallest=True)


def case_jones() -> CaseResult:
    c = claim("jones-1pmi")
    ns = divisors(c["modulus"])
    rows = []
    alarms = []
    for n in ns:
        for sign in (1, -1):
            beta = RootSum(4, [(0, 1), (1, sign)]) + RootSum.root(n)
            report = classify(beta)
            if report.status != PROVED_EXCEEDS:
                rows.append(f"{beta} -> {report.status} {report.list_value}")
            if report.status in (STRICTLY_BETWEEN, UNRESOLVED):
                alarms.append(str(beta))
    passed = len(ns) == c["expected_divisors"] and not alarms
    return CaseResult(
        "jones-1pmi",
        passed,
        count=len(ns),
        expected_count=c["expected_divisors"],
        claim="every 1 +- i + zn with house^2 <= 126/25 is on the list",
        details={"survivors": rows},
        witnesses=alarms,
    )


def case_p11x4_table() -> CaseResult:
    c = claim("p11x4-table")
    rows = []
    ok = True
    for row in c["rows"]:
        beta = RootSum.parse(row["beta"])
        report = classify(beta)
        dec = p_decompose(beta, 11)
        expected = ListValue.parse(row["list_value"])
        good = report.status == ON_LIST and report.list_value == expected and dec.X == 4
        ok = ok and good
        rows.append({"beta": str(beta), "status": report.status, "list_value": str(report.list_value), "X": dec.X})
    return CaseResult(
        "p11x4-table", ok, count=len(rows), claim="table rows map to FormB(11), FormB(33), FormB(22)", details={"rows": rows}
    )


def case_lemma31() -> CaseResult:
    c = claim("lemma31")
    cert = verify_lemma31_positivity(strict=False)
    summary = cert.summary()
    return CaseResult(
        "lemma31",
        cert.passed,
        count=cert.zero_count,
        expected_count=c["derivative_zeros"],
        min_value=summary["min_f_at_critical"],
        claim=f"f' has {c['derivative_zeros']} zeros in [0, 126/25] and f > 0 at each and at both ends",
        details={**summary, "notes": cert.notes},
    )


def case_lemma31_roots() -> CaseResult:
    rows = []
    ok = True
    for entry in PTABLE:
        if entry.excluded:
            continue
        r = largest_root_identity(entry)
        ok = ok and r.holds
        rows.append({"P": entry.index, "N": entry.n, "verdict": r.verdict.value, "exact": r.exact})
    return CaseResult("lemma31-roots", ok, count=len(rows), claim="largest roots are FormB(N)^2", details={"rows": rows})


def case_q420(samples: Optional[int] = None, workers: int = 1, full_k=None, sampled_k=None) -> CaseResult:
    c = claim("q420-k-small")
    n = c["conductor"]
    samples = samples if samples is not None else c["samples"]
    classifier = Classifier()
    runs = {}
    alarms = []
    complete = True
    for k in full_k if full_k is not None else c["full_k"]:
        r = enumerate_spec(SearchSpec(n, k), workers=workers, classifier=classifier)
        runs[f"k={k} full"] = r.counts()
        alarms += [str(s.beta) for s in r.alarms]
        complete = complete and r.complete
    for k in sampled_k if sampled_k is not None else c["sampled_k"]:
        spec = SearchSpec(n, k, mode="sampled", seed=c["seed"], samples=samples)
        r = enumerate_spec(spec, workers=workers, classifier=classifier)
        runs[f"k={k} sampled"] = r.counts()
        alarms += [str(s.beta) for s in r.alarms]
        complete = complete and r.complete
    return CaseResult(
        "q420-k-small",
        complete and not alarms,
        claim="no StrictlyBetween or Unresolved survivors",
        details=runs,
        witnesses=alarms,
    )


def case_s_table() -> CaseResult:
    rows = []
    ok = True
    for row in claim("s-table")["rows"]:
        s = s_value([_q(x) for x in row["m"]], [_q(x) for x in row["diff"]])
        good = s == _q(row["s"])
        ok = ok and good
        rows.append({"X": row["X"], "s": str(s), "tabulated": row["s"], "reaches_13": s >= 13, "footnote": row.get("footnote", False)})
    # rows below 13 must be the footnoted ones
    ok = ok and all(r["reaches_13"] or r["footnote"] for r in rows)
    one, z6 = RootSum.integer(1), RootSum.root(6)
    sample = check_s_inequality([one, one, z6, z6], 11)
    return CaseResult(
        "s-table",
        ok,
        count=len(rows),
        claim="tabulated S values follow from the M bounds",
        details={"rows": rows, "p11_x4_pattern_S": str(sample.s), "p11_bound": str(sample.bound)},
    )


REGISTRY: dict[str, Callable[[], CaseResult]] = {
    "p9-gamma5": case_p9_gamma5,
    "p8-gamma57": case_p8_gamma57,
    "p11x3": case_p11x3,
    "p13x3-53": case_p13x3,
    "p17x3": case_p17x3,
    "p19x3": case_p19x3,
    "jones-1pmi": case_jones,
    "p11x4-table": case_p11x4_table,
    "lemma31": case_lemma31,
    "lemma31-roots": case_lemma31_roots,
    "q420-k-small": case_q420,
    "s-table": case_s_table,
}


def run_case(case_id: str, **kwargs) -> CaseResult:
    if case_id not in REGISTRY:
        raise KeyError(f"unknown case {case_id!r}; known: {', '.join(REGISTRY)}")
    start = time.perf_counter()
    result = REGISTRY[case_id](**kwargs)
    result.seconds = time.perf_counter() - start
    return result
