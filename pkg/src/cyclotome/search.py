"""Normalized enumeration of sums of roots of unity with pruning and checkpoints.

A sum of k roots of unity in Q(zeta_N) is rotated so its first root is 1.
Applying a Galois element then moves the second exponent to a divisor i of
N (or 0), chosen so every remaining exponent j has ``gcd(N, j) >= i``.
The remaining k - 2 exponents are enumerated as a nondecreasing multiset.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Optional

import numpy as np
from flint import fmpz_poly

from .ball import HOUSE_SQ_CEILING, START_BITS, eval_conjugate, working_precision
from .cyclo import RootSum, canonicalize, cyclotomic_poly
from .house import ON_LIST, PROVED_EXCEEDS, STRICTLY_BETWEEN, UNRESOLVED, HouseReport, classify
from .nt import divisors, euler_phi, units

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "cyclotome-checkpoint"
CHECKPOINT_VERSION = 1
# Float evaluation of |sum of <= 8 unit roots|**2 is off by well under 1e-12;
# candidates are only discarded when they clear the ceiling by this margin.
FLOAT_MARGIN = 1e-9
FULL_MODE_CAP = 20_000_000
CHUNK_TUPLES = 50_000
SAMPLE_BATCH = 50_000
STAGE_UNITS = 16

GCD_RULE = "gcd"
DIVIDES_RULE = "divides"


class BudgetExceeded(RuntimeError):
    """Full enumeration would exceed the work cap; use sampled mode instead."""


class CheckpointMismatch(ValueError):
    pass


# --------------------------------------------------------------------------
# float kernel


@lru_cache(maxsize=32)
def unit_table_float(conductor: int) -> np.ndarray:
    """``exp(2 pi i j / N)`` rounded from 128-bit balls."""
    rs = [RootSum.root(conductor, j) for j in range(conductor)]
    with working_precision(START_BITS):
        vals = [eval_conjugate(r, 1, START_BITS) for r in rs]
        return np.array([complex(float(v.real.mid()), float(v.imag.mid())) for v in vals])


@lru_cache(maxsize=32)
def half_units(conductor: int) -> np.ndarray:
    return np.array([k for k in units(conductor) if 2 * k <= conductor or conductor <= 2], dtype=np.int64)


def _batch_rows(n_terms: int, n_units: int) -> int:
    return max(1, 4_000_000 // max(1, n_terms * n_units))


def float_house_sq(conductor: int, exps: np.ndarray, mults: Optional[np.ndarray] = None) -> np.ndarray:
    """Largest ``|sigma_u(b)|**2`` for each row of exponents (float estimate)."""
    exps = np.asarray(exps, dtype=np.int64)
    table = unit_table_float(conductor)
    us = half_units(conductor)
    out = np.empty(len(exps))
    step = _batch_rows(exps.shape[1], len(us))
    for s in range(0, len(exps), step):
        block = exps[s : s + step]
        idx = (block[:, None, :] * us[None, :, None]) % conductor
        vals = table[idx]
        if mults is not None:
            vals = vals * np.asarray(mults)[None, None, :] if np.ndim(mults) == 1 else vals * mults[s : s + step, None, :]
        sums = vals.sum(axis=2)
        out[s : s + step] = (sums.real**2 + sums.imag**2).max(axis=1)
    return out


def float_exceeds(conductor: int, exps: np.ndarray, threshold: float, mults: Optional[np.ndarray] = None) -> np.ndarray:
    """Mask of rows with some conjugate clearly above ``threshold``.

    Conjugates are tried in blocks so most rows are settled after the first.
    """
    exps = np.asarray(exps, dtype=np.int64)
    if np.ndim(mults) == 2:
        mults = np.asarray(mults)
    table = unit_table_float(conductor)
    us = half_units(conductor)
    done = np.zeros(len(exps), dtype=bool)
    limit = threshold + FLOAT_MARGIN
    for s in range(0, len(us), STAGE_UNITS):
        live = np.nonzero(~done)[0]
        if not len(live):
            break
        ublock = us[s : s + STAGE_UNITS]
        step = _batch_rows(exps.shape[1], len(ublock))
        for b in range(0, len(live), step):
            rows = live[b : b + step]
            idx = (exps[rows][:, None, :] * ublock[None, :, None]) % conductor
            vals = table[idx]
            if mults is not None:
                vals = vals * (mults[None, None, :] if np.ndim(mults) == 1 else mults[rows][:, None, :])
            sums = vals.sum(axis=2)
            hit = ((sums.real**2 + sums.imag**2) > limit).any(axis=1)
            done[rows[hit]] = True
    return done


# --------------------------------------------------------------------------
# normalization


def second_exponents(conductor: int) -> tuple[int, ...]:
    """0 and the proper divisors of N."""
    return (0,) + tuple(d for d in divisors(conductor) if d < conductor)


@lru_cache(maxsize=None)
def allowed_rest(conductor: int, i: int, rule: str = GCD_RULE) -> tuple[int, ...]:
    """Exponents j permitted after a second exponent i."""
    if rule == GCD_RULE:
        return tuple(j for j in range(conductor) if math.gcd(conductor, j) >= i)
    if rule == DIVIDES_RULE:
        if i == 0:
            return tuple(range(conductor))
        return tuple(j for j in range(conductor) if math.gcd(conductor, j) % i == 0)
    raise ValueError(f"unknown normalization rule {rule!r}")


@dataclass(frozen=True)
class SearchSpec:
    conductor: int
    k: int
    ceiling: Fraction = HOUSE_SQ_CEILING
    mode: str = "full"
    seed: int = 0
    samples: int = 0
    rule: str = GCD_RULE

    def __post_init__(self):
        if self.conductor < 1 or self.k < 1:
            raise ValueError("conductor and k must be positive")
        if self.mode not in ("full", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "sampled" and self.samples < 1:
            raise ValueError("sampled mode needs a positive sample count")
        object.__setattr__(self, "ceiling", Fraction(self.ceiling))

    def to_json(self) -> dict:
        return {
            "conductor": self.conductor,
            "k": self.k,
            "ceiling": str(self.ceiling),
            "mode": self.mode,
            "seed": self.seed,
            "samples": self.samples,
            "rule": self.rule,
        }

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def units_of_work(self) -> list[tuple[int, ...]]:
        """Lexicographic prefixes ``(i,)`` or ``(i, j1)`` that partition the full run."""
        n, k = self.conductor, self.k
        if k <= 2:
            return [()]
        out = []
        for i in second_exponents(n):
            if k == 3:
                out.append((i,))
            else:
                out.extend((i, j) for j in allowed_rest(n, i, self.rule))
        return out

    def estimated_work(self) -> int:
        n, k = self.conductor, self.k
        if k == 1:
            return 1
        total = 0
        for i in second_exponents(n):
            a = len(allowed_rest(n, i, self.rule))
            total += math.comb(a + k - 3, k - 2) if k >= 2 else 1
        return total


def tuples_for_unit(spec: SearchSpec, unit: tuple[int, ...]) -> np.ndarray:
    n, k = spec.conductor, spec.k
    if k == 1:
        return np.zeros((1, 1), dtype=np.int64)
    if k == 2:
        return np.array([(0, i) for i in second_exponents(n)], dtype=np.int64)
    i = unit[0]
    allowed = allowed_rest(n, i, spec.rule)
    if k == 3:
        return np.array([(0, i, j) for j in allowed], dtype=np.int64)
    j1 = unit[1]
    tail = [j for j in allowed if j >= j1]
    rows = [(0, i, j1) + rest for rest in combinations_with_replacement(tail, k - 3)]
    return np.array(rows, dtype=np.int64).reshape(len(rows), k)


def iter_normalized(spec: SearchSpec) -> Iterator[tuple[int, ...]]:
    for unit in spec.units_of_work():
        for row in tuples_for_unit(spec, unit):
            yield tuple(int(x) for x in row)


def sample_tuples(spec: SearchSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    n, k = spec.conductor, spec.k
    out = np.zeros((count, k), dtype=np.int64)
    if k == 1:
        return out
    seconds = np.array(second_exponents(n))
    pick = rng.integers(0, len(seconds), size=count)
    out[:, 1] = seconds[pick]
    if k > 2:
        for idx, i in enumerate(seconds):
            rows = np.nonzero(pick == idx)[0]
            if not len(rows):
                continue
            allowed = np.array(allowed_rest(n, int(i), spec.rule))
            rest = allowed[rng.integers(0, len(allowed), size=(len(rows), k - 2))]
            out[rows, 2:] = np.sort(rest, axis=1)
    return out


# --------------------------------------------------------------------------
# results and checkpoints


@dataclass
class Survivor:
    beta: RootSum
    report: HouseReport

    def to_json(self) -> dict:
        return {"beta": str(self.beta), "report": self.report.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> Survivor:
        return cls(RootSum.parse(data["beta"]), HouseReport.from_json(data["report"]))


@dataclass
class SearchResult:
    spec: SearchSpec
    examined: int = 0
    pruned: int = 0
    exceeded: int = 0
    vanishing: int = 0
    survivors: list[Survivor] = field(default_factory=list)
    cursor: int = 0
    complete: bool = False

    def status_counts(self) -> dict[str, int]:
        counts = {ON_LIST: 0, STRICTLY_BETWEEN: 0, UNRESOLVED: 0}
        for s in self.survivors:
            counts[s.report.status] = counts.get(s.report.status, 0) + 1
        return counts

    @property
    def alarms(self) -> list[Survivor]:
        return [s for s in self.survivors if s.report.status in (STRICTLY_BETWEEN, UNRESOLVED)]

    def value_set(self) -> set[tuple[int, ...]]:
        return {canonicalize(s.beta).coeffs for s in self.survivors}

    def classes(self, level: Optional[int] = None) -> set[tuple[int, ...]]:
        level = level or math.lcm(2, self.spec.conductor)
        return {equivalence_key(s.beta, level) for s in self.survivors}

    def counts(self) -> dict:
        return {
            "examined": self.examined,
            "pruned": self.pruned,
            "exceeded": self.exceeded,
            "vanishing": self.vanishing,
            **self.status_counts(),
        }

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "counts": self.counts(),
            "complete": self.complete,
            "survivors": [s.to_json() for s in self.survivors],
        }


def write_checkpoint(path: str, result: SearchResult) -> None:
    """Atomically replace ``path`` with the current state."""
    data = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "spec_hash": result.spec.hash,
        "spec": result.spec.to_json(),
        "cursor": result.cursor,
        "complete": result.complete,
        "counts": {
            "examined": result.examined,
            "pruned": result.pruned,
            "exceeded": result.exceeded,
            "vanishing": result.vanishing,
        },
        "survivors": [s.to_json() for s in result.survivors],
    }
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".ckpt-")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(data, fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_checkpoint(path: str, spec: SearchSpec) -> SearchResult:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format") != CHECKPOINT_FORMAT or data.get("version") != CHECKPOINT_VERSION:
        raise CheckpointMismatch(f"{path} is not a version {CHECKPOINT_VERSION} checkpoint")
    if data["spec_hash"] != spec.hash:
        raise CheckpointMismatch(f"{path} was written for a different search (hash {data['spec_hash']})")
    counts = data["counts"]
    return SearchResult(
        spec=spec,
        examined=counts["examined"],
        pruned=counts["pruned"],
        exceeded=counts["exceeded"],
        vanishing=counts.get("vanishing", 0),
        survivors=[Survivor.from_json(s) for s in data["survivors"]],
        cursor=data["cursor"],
        complete=data.get("complete", False),
    )


# --------------------------------------------------------------------------
# the driver


def _scan_rows(conductor: int, rows: np.ndarray, ceiling: float) -> tuple[int, int, np.ndarray]:
    if not len(rows):
        return 0, 0, rows
    over = float_exceeds(conductor, rows, ceiling)
    return len(rows), int(over.sum()), rows[~over]


def _scan_chunk(args) -> tuple[int, int, np.ndarray]:
    spec, units_chunk = args
    parts = [tuples_for_unit(spec, u) for u in units_chunk]
    rows = np.concatenate(parts) if parts else np.zeros((0, spec.k), dtype=np.int64)
    return _scan_rows(spec.conductor, rows, float(spec.ceiling))


def _scan_samples(args) -> tuple[int, int, np.ndarray]:
    spec, seed_seq, count = args
    rng = np.random.default_rng(seed_seq)
    rows = sample_tuples(spec, rng, count)
    return _scan_rows(spec.conductor, rows, float(spec.ceiling))


def _chunks(spec: SearchSpec) -> list[list[tuple[int, ...]]]:
    out, cur, size = [], [], 0
    n, k = spec.conductor, spec.k
    for unit in spec.units_of_work():
        if k >= 4:
            tail = sum(1 for j in allowed_rest(n, unit[0], spec.rule) if j >= unit[1])
            weight = math.comb(tail + k - 4, k - 3)
        else:
            weight = len(allowed_rest(n, unit[0], spec.rule)) if unit else n
        cur.append(unit)
        size += weight
        if size >= CHUNK_TUPLES:
            out.append(cur)
            cur, size = [], 0
    if cur:
        out.append(cur)
    return out


class Classifier:
    """Classification cache keyed by the value of the candidate."""

    def __init__(self):
        self._cache: dict[tuple, HouseReport] = {}

    def __call__(self, beta: RootSum) -> HouseReport:
        key = (beta.conductor, canonicalize(beta).coeffs)
        report = self._cache.get(key)
        if report is None:
            # classify a representative fixed by the value, so the report does
            # not depend on which candidate reached the cache first
            report = classify(RootSum(key[0], list(enumerate(key[1]))))
            self._cache[key] = report
        return dataclasses.replace(report, input=beta)

    def __len__(self):
        return len(self._cache)


def _absorb(result: SearchResult, scanned, classifier: Classifier) -> None:
    count, over, rows = scanned
    result.examined += count
    result.pruned += over
    n = result.spec.conductor
    for row in rows:
        beta = RootSum.from_exponents(n, (int(x) for x in row))
        if beta.is_zero():
            result.vanishing += 1
            continue
        report = classifier(beta)
        if report.status == PROVED_EXCEEDS or report.house_sq > _ceiling_ball(result.spec.ceiling):
            result.exceeded += 1
            continue
        result.survivors.append(Survivor(beta, report))


def _ceiling_ball(c: Fraction):
    from flint import arb, fmpq

    return arb(fmpq(c.numerator, c.denominator))


def enumerate_spec(
    spec: SearchSpec,
    workers: int = 1,
    checkpoint: Optional[str] = None,
    resume: bool = True,
    max_chunks: Optional[int] = None,
    classifier: Optional[Classifier] = None,
) -> SearchResult:
    """Run a search; survivors are candidates whose certified house**2 is at most the ceiling.

    Work is split into fixed chunks (prefix ranges in full mode, seeded
    batches in sampled mode) processed in order, so the result does not
    depend on ``workers``.  With ``checkpoint`` the state is saved after
    every chunk and an existing file for the same spec is resumed.
    ``max_chunks`` stops early, leaving an incomplete checkpoint.
    """
    if spec.mode == "full" and spec.estimated_work() > FULL_MODE_CAP:
        raise BudgetExceeded(
            f"full enumeration of N={spec.conductor}, k={spec.k} needs about "
            f"{spec.estimated_work():,} candidates; use sampled mode"
        )
    classifier = classifier or Classifier()
    result = SearchResult(spec)
    if checkpoint and resume and os.path.exists(checkpoint):
        result = read_checkpoint(checkpoint, spec)
        if result.complete:
            return result

    if spec.mode == "full":
        tasks = [(spec, chunk) for chunk in _chunks(spec)]
        fn = _scan_chunk
    else:
        n_batches = -(-spec.samples // SAMPLE_BATCH)
        seeds = np.random.SeedSequence(spec.seed).spawn(n_batches)
        sizes = [min(SAMPLE_BATCH, spec.samples - b * SAMPLE_BATCH) for b in range(n_batches)]
        tasks = list(zip([spec] * n_batches, seeds, sizes))
        fn = _scan_samples

    todo = tasks[result.cursor :]
    if max_chunks is not None:
        todo = todo[:max_chunks]

    def record(scanned):
        _absorb(result, scanned, classifier)
        result.cursor += 1
        if checkpoint:
            write_checkpoint(checkpoint, result)

    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for scanned in pool.map(fn, todo):
                record(scanned)
    else:
        for task in todo:
            record(fn(task))

    result.complete = result.cursor == len(tasks)
    if checkpoint:
        write_checkpoint(checkpoint, result)
    log.info("search %s: %s", spec.to_json(), result.counts())
    return result


def stream(spec: SearchSpec, **kwargs) -> Iterator[tuple[RootSum, HouseReport]]:
    for s in enumerate_spec(spec, **kwargs).survivors:
        yield s.beta, s.report


# --------------------------------------------------------------------------
# equivalence and the brute-force oracle


@lru_cache(maxsize=16)
def reduction_matrix(level: int) -> np.ndarray:
    """Row j holds the power-basis coefficients of ``zeta_level**j``."""
    phi = euler_phi(level)
    mod = cyclotomic_poly(level)
    rows = np.zeros((level, phi), dtype=np.int64)
    for j in range(level):
        rem = fmpz_poly([0] * j + [1]) % mod
        coeffs = [int(c) for c in rem.coeffs()]
        rows[j, : len(coeffs)] = coeffs
    return rows


def equivalence_key(beta: RootSum, level: Optional[int] = None) -> tuple[int, ...]:
    """Least canonical form among ``zeta**c * sigma_u(beta)`` inside Q(zeta_level).

    ``level`` must be a multiple of the conductor; it defaults to
    ``lcm(2, N)`` so that the sign change is one of the multipliers.
    """
    level = level or math.lcm(2, beta.conductor)
    if level % beta.conductor:
        raise ValueError("level must be a multiple of the conductor")
    lifted = beta.lift(level)
    if not lifted.terms:
        return (0,) * euler_phi(level)
    exps = np.array([e for e, _ in lifted.terms], dtype=np.int64)
    mults = np.array([m for _, m in lifted.terms], dtype=np.int64)
    us = np.array(units(level), dtype=np.int64)
    cs = np.arange(level, dtype=np.int64)
    idx = (us[None, :, None] * exps[None, None, :] + cs[:, None, None]) % level
    forms = (reduction_matrix(level)[idx] * mults[None, None, :, None]).sum(axis=2)
    forms = forms.reshape(-1, forms.shape[-1])
    order = np.lexsort(forms.T[::-1])
    return tuple(int(x) for x in forms[order[0]])


def oracle_survivors(conductor: int, k: int, ceiling: Fraction = HOUSE_SQ_CEILING, classifier=None) -> list[Survivor]:
    """All multisets of k exponents mod N (no normalization) with house**2 at most the ceiling."""
    classifier = classifier or Classifier()
    rows = np.array(list(combinations_with_replacement(range(conductor), k)), dtype=np.int64)
    over = float_exceeds(conductor, rows, float(ceiling))
    out = []
    ball = _ceiling_ball(Fraction(ceiling))
    for row in rows[~over]:
        beta = RootSum.from_exponents(conductor, (int(x) for x in row))
        if beta.is_zero():
            continue
        report = classifier(beta)
        if report.status != PROVED_EXCEEDS and not report.house_sq > ball:
            out.append(Survivor(beta, report))
    return out


def oracle_classes(conductor: int, k: int, ceiling: Fraction = HOUSE_SQ_CEILING, classifier=None) -> set[tuple[int, ...]]:
    level = math.lcm(2, conductor)
    return {equivalence_key(s.beta, level) for s in oracle_survivors(conductor, k, ceiling, classifier)}


def sorted_values(survivors: Iterable[Survivor]) -> list[tuple[int, tuple[int, ...]]]:
    return sorted({(s.beta.conductor, canonicalize(s.beta).coeffs) for s in survivors})
