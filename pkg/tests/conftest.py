from __future__ import annotations

import cmath
import math

import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cyclotome import RootSum

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SMALL_CONDUCTORS = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 15, 20, 21, 24, 30]


@st.composite
def root_sums(draw, conductors=SMALL_CONDUCTORS, max_terms=5, max_mult=3):
    n = draw(st.sampled_from(conductors))
    terms = draw(
        st.lists(
            st.tuples(st.integers(0, max(n - 1, 0)), st.integers(-max_mult, max_mult)),
            min_size=0,
            max_size=max_terms,
        )
    )
    return RootSum(n, terms)


@st.composite
def nonzero_root_sums(draw, **kwargs):
    beta = draw(root_sums(**kwargs))
    if beta.is_zero():
        beta = beta + 1 if not (beta + 1).is_zero() else RootSum.integer(1)
    return beta


# Independent floating-point oracle: evaluate every conjugate directly.


def oracle_value(beta: RootSum, k: int = 1) -> complex:
    n = beta.conductor
    return sum(m * cmath.exp(2j * math.pi * k * e / n) for e, m in beta.terms)


def oracle_conjugates(beta: RootSum) -> list[complex]:
    n = beta.conductor
    return [oracle_value(beta, k) for k in range(1, n + 1) if math.gcd(k, n) == 1]


def oracle_house_sq(beta: RootSum) -> float:
    return max(abs(z) ** 2 for z in oracle_conjugates(beta))


def oracle_m(beta: RootSum) -> float:
    vals = oracle_conjugates(beta)
    return sum(abs(z) ** 2 for z in vals) / len(vals)


def oracle_house_sq_rows(n: int, rows: np.ndarray) -> np.ndarray:
    ks = np.array([k for k in range(1, n + 1) if math.gcd(k, n) == 1])
    z = np.exp(2j * np.pi * (rows[:, None, :] * ks[None, :, None]) / n).sum(axis=2)
    return (np.abs(z) ** 2).max(axis=1)


# acceptance reporting

import contextlib

import pytest


@pytest.fixture
def acceptance(request):
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    @contextlib.contextmanager
    def criterion(number: int, title: str):
        try:
            yield
        except BaseException as exc:
            line = f"FAIL {number:2d} {title}: {exc.__class__.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            lines.append(line)
            print(line)
            raise
        line = f"PASS {number:2d} {title}"
        lines.append(line)
        print(line)

    return criterion


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
