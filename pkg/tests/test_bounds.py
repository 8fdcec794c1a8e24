from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
from flint import arb, fmpq
from hypothesis import given
from hypothesis import strategies as st

from cyclotome.ball import working_precision
from cyclotome.bounds import (
    BELOW,
    DERIVATIVE_ZEROS_CLAIMED,
    FORM_B_ROOT,
    HOUSES,
    MAGNITUDES,
    PTABLE,
    VIOLATION,
    Decomposition,
    assemble,
    check_exact_eqn,
    check_s_inequality,
    check_square_eqn,
    conj_lower_bound,
    f_ball,
    f_float,
    is_irreducible,
    largest_root_identity,
    m_upper_bound_check,
    p_decompose,
    plot_samples,
    poly_at,
    root_order_exponent,
    roots_real_positive,
    s_value,
    samples_csv,
    table_poles,
    verify_lemma31_positivity,
)
from cyclotome.cyclo import RootSum, same_value
from cyclotome.galois import m_of
from cyclotome.house import house_of
from cyclotome.nt import euler_phi
from conftest import root_sums

R = RootSum.parse

# Independent oracle (mpmath at 50 digits, sign changes of f' on a fine grid
# between the poles, each refined by bisection), frozen here.
ORACLE_DERIVATIVE_ZEROS = 20
ORACLE_POLES = 20
ORACLE_MIN_F = 0.001075897418827973
ORACLE_F0 = 0.0753421381344181
ORACLE_F_END = 0.007500103884446865


# polynomial table


def test_table_shape():
    assert [e.index for e in PTABLE] == list(range(1, 10))
    assert PTABLE[7].coeffs == (41, -98, 58, -13, 1)
    assert PTABLE[7].excluded and "D8" in PTABLE[7].note
    assert PTABLE[5].coeffs == (11, -7, 1) and PTABLE[5].n == 10
    assert all(e.alpha == Fraction(e.thousandths, 1000) for e in PTABLE)


@pytest.mark.parametrize("entry", PTABLE, ids=lambda e: f"P{e.index}")
def test_table_irreducible_real_positive(entry):
    assert is_irreducible(entry)
    assert roots_real_positive(entry)


@pytest.mark.parametrize("entry", [e for e in PTABLE if not e.excluded], ids=lambda e: f"P{e.index}")
def test_largest_root_is_form_b_square(entry):
    report = largest_root_identity(entry)
    assert report.holds
    assert report.degree == entry.degree * euler_phi(entry.n)


def test_largest_root_rejects_excluded_row():
    with pytest.raises(ValueError):
        largest_root_identity(PTABLE[7])


def test_poly_at_exact():
    # x**2 - 7x + 11 vanishes at 3 + z + 1/z for a primitive tenth root z
    z = R("10:1,9") + 3
    assert poly_at((11, -7, 1), z).is_zero()
    assert not poly_at((11, -7, 1), R("10:1,9") + 2).is_zero()


# the auxiliary function f


def test_f_endpoints_match_oracle():
    with working_precision(128):
        f0 = f_ball(arb(0))
        f1 = f_ball(arb(fmpq(126, 25)))
    assert f0 > 0 and f1 > 0
    assert abs(float(f0.mid()) - ORACLE_F0) < 1e-12
    assert abs(float(f1.mid()) - ORACLE_F_END) < 1e-12
    assert abs(f_float(0.0) - ORACLE_F0) < 1e-12


def test_f_ball_refuses_pole():
    with working_precision(128):
        with pytest.raises(ZeroDivisionError):
            f_ball(arb(5))


def test_lemma31_certificate_facts():
    cert = verify_lemma31_positivity(strict=False)
    assert cert.zero_count == ORACLE_DERIVATIVE_ZEROS == cert.zero_count_flint
    assert cert.pole_count == ORACLE_POLES
    assert cert.poles_simple and cert.numerator_coprime
    assert cert.irreducible and cert.roots_real_positive and cert.alphas_positive
    assert cert.positive_everywhere
    assert abs(cert.min_critical_value - ORACLE_MIN_F) < 1e-9
    assert len(cert.critical_points) == cert.zero_count
    # the quoted count is not what the polynomial has; the certificate says so
    assert not cert.count_matches and DERIVATIVE_ZEROS_CLAIMED == 14
    assert any("at least 19 critical points" in note for note in cert.notes)


def test_plot_samples():
    rows = plot_samples(1000)
    poles = table_poles()
    assert len(poles) == ORACLE_POLES
    assert 0 < len(rows) <= 1000
    assert rows[0] == (0.0, pytest.approx(ORACLE_F0))
    xs = [x for x, _ in rows]
    assert all(min(abs(x - r) for r in poles) >= 1e-3 for x in xs)
    grid = [5.04 * i / 999 for i in range(1000)]
    expected = sum(1 for x in grid if min(abs(x - r) for r in poles) >= 1e-3)
    assert len(rows) == expected
    # pole at x = 5 (P3): nearby grid points are omitted
    assert not any(abs(x - 5) < 1e-3 for x in xs)
    text = samples_csv(rows[:2])
    assert text.splitlines()[0] == "x,f"
    with pytest.raises(ValueError):
        plot_samples(10, 0, 6)


# the M < 13/4 check


def test_m_upper_bound_examples():
    r = m_upper_bound_check(R("5:0,1"))
    assert r.verdict == BELOW and r.m == Fraction(3, 2)
    assert m_upper_bound_check(RootSum.integer(0)).verdict == BELOW
    beta = RootSum.root(4) + R("20:1,19")
    r = m_upper_bound_check(beta)
    assert (r.verdict, r.index, r.n) == (FORM_B_ROOT, 6, 10)
    assert str(r) == "IsFormBRoot(6) N=10"
    r = m_upper_bound_check(RootSum.integer(2))
    assert (r.verdict, r.index, r.n) == (FORM_B_ROOT, 2, 6)  # 4 = FormB(6)**2
    # outside the precondition (house**2 = 9) nothing on the table matches
    assert m_upper_bound_check(RootSum.integer(3)).verdict == VIOLATION


# p-decompositions and the identities


def test_p_decompose_examples():
    beta = RootSum.integer(1) + R("5:1") * (RootSum.integer(1) + R("7:1"))
    d = p_decompose(beta, 5)
    assert d.X == 2 and d.n == 1
    assert same_value(d.parts[0], RootSum.integer(1))
    assert same_value(d.parts[1], RootSum.integer(1) + R("7:1"))
    assert p_decompose(R("5:0,1,2,3,4"), 5).X == 0
    d = p_decompose(R("13:0,1,3,9"), 13)
    assert d.X == 4 and d.nonzero_indices == (0, 1, 3, 9)
    assert all(same_value(x, RootSum.integer(1)) for x in d.nonzero_parts)
    with pytest.raises(ValueError):
        p_decompose(R("13:1"), 5)


def test_p_decompose_tie_keeps_unshifted():
    # parts 1, 1, 0: shifting by 1 gives X = 1 and wins; parts 1, 2, 0 tie
    d = p_decompose(R("3:0,1"), 3)
    assert d.X == 1
    d = p_decompose(RootSum.integer(1) + R("3:1") * 2, 3)
    assert d.X == 2 and same_value(d.parts[0], RootSum.integer(1))


def test_exact_eqn_examples():
    r = check_exact_eqn(p_decompose(R("5:0,1"), 5, shift=False))
    assert r.holds and r.lhs == 6
    r = check_exact_eqn(p_decompose(R("7:0,1,3"), 7, shift=False))
    assert r.holds and r.lhs == 12
    r = check_exact_eqn(p_decompose(R("3:1"), 3))
    assert r.holds and r.lhs == 2
    beta = RootSum.integer(1) + R("5:1") * (RootSum.integer(1) + R("7:1"))
    r = check_exact_eqn(p_decompose(beta, 5))
    assert r.holds and r.lhs == 9
    with pytest.raises(ValueError):
        check_exact_eqn(p_decompose(R("9:1"), 3))


def test_square_eqn_examples():
    beta = RootSum.integer(1) + R("4:1") * (RootSum.integer(1) + R("7:1"))
    d = p_decompose(beta, 2)
    assert d.n == 2
    r = check_square_eqn(d)
    assert r.holds and r.lhs == Fraction(8, 3)
    assert check_square_eqn(p_decompose(R("9:1"), 3)).lhs == 1
    r = check_square_eqn(p_decompose(R("9:0,1"), 3))
    assert r.holds and r.lhs == 2
    with pytest.raises(ValueError):
        check_square_eqn(p_decompose(R("5:1"), 5))


def test_cli_m_cross_check_13():
    beta = R("13:0,1,3,9")
    d = p_decompose(beta, 13, shift=False)
    r = check_exact_eqn(d)
    assert r.holds and r.lhs == 12 * m_of(beta) and m_of(beta) == 3


SMALL = [1, 3, 4, 5, 7, 8, 12]


@st.composite
def split_instances(draw, square: bool):
    if square:
        p = draw(st.sampled_from([2, 3]))
        n = draw(st.integers(2, 3))
        rest = draw(st.sampled_from([c for c in SMALL if c % p]))
        sub = rest * p ** (n - 1)
    else:
        p = draw(st.sampled_from([3, 5, 7, 11]))
        n = 1
        rest = draw(st.sampled_from([c for c in SMALL if c % p]))
        sub = rest
    parts = [draw(root_sums(conductors=[sub], max_terms=3, max_mult=2)) for _ in range(p)]
    return p, n, parts


def _assemble(p, n, parts):
    q = p**n
    return sum((part.times_root(q, j) for j, part in enumerate(parts)), RootSum.integer(0))


@given(split_instances(square=False))
def test_exact_eqn_random(inst):
    p, n, parts = inst
    beta = _assemble(p, n, parts)
    d = p_decompose(beta, p)
    assert same_value(d.reassemble(), beta)
    assert check_exact_eqn(d).holds
    # the identity also holds for the drawn (unshifted) representation
    raw = Decomposition(beta, p, 1, tuple(parts))
    assert check_exact_eqn(raw).holds


@given(split_instances(square=True))
def test_square_eqn_random(inst):
    p, n, parts = inst
    beta = _assemble(p, n, parts)
    d = p_decompose(beta, p)
    assert d.n == n
    assert same_value(d.reassemble(), beta)
    assert check_square_eqn(d).holds


def test_s_values():
    assert s_value([Fraction(1)] * 2, [Fraction(2)], 5) == 8
    with pytest.raises(ValueError):
        s_value([Fraction(1)] * 3, [Fraction(1)], 5)
    one, z6 = RootSum.integer(1), RootSum.root(6)
    r = check_s_inequality([one, one, z6, z6], 11)
    assert r.bound == Fraction(65, 2)
    assert r.s == (11 - 4) * 4 + sum(m_of(a - b) for a, b in [(one, one), (one, z6), (one, z6), (one, z6), (one, z6), (z6, z6)])


# the conjugation bound


def test_conj_bound_examples():
    z4 = RootSum.integer(1) + R("4:1")
    with working_precision(128):
        b = conj_lower_bound(RootSum.integer(1), z4, 11, 1)
        expected = 3 + 2 * arb(2).sqrt() * (2 * arb.pi() / 11).cos()
        assert b.overlaps(expected) and abs(float(b.mid()) - 5.37942) < 1e-5
        b = conj_lower_bound(RootSum.integer(1), z4 * R("5:1"), 5, 2)
        expected = 3 + 2 * arb(2).sqrt() * (arb.pi() / 5).cos()
        assert b.overlaps(expected) and abs(float(b.mid()) - 5.28825) < 1e-5
        b = conj_lower_bound(R("7:0,1"), RootSum.integer(0), 3, 1)
        direct = abs(1 + complex(math.cos(2 * math.pi / 7), math.sin(2 * math.pi / 7))) ** 2
        assert abs(float(b.mid()) - direct) < 1e-12


def test_conj_bound_errors():
    with pytest.raises(ValueError):
        conj_lower_bound(RootSum.integer(1), R("5:1"), 5, 1)
    with pytest.raises(ValueError):
        conj_lower_bound(R("3:1"), R("3:0,1"), 2, 2, HOUSES)
    with pytest.raises(ValueError):
        conj_lower_bound(RootSum.integer(1), RootSum.integer(1), 5, 1, "other")
    assert root_order_exponent(12, 2) == 2
    assert root_order_exponent(3, 2) == 1
    assert root_order_exponent(7, 5) == 0


def conj_instance(rng: random.Random):
    """A random precondition-satisfying (alpha, gamma, p, n)."""
    while True:
        p = rng.choice([2, 3, 5, 7])
        n = rng.choice([1, 2]) if p > 2 else rng.choice([2, 3])
        conds = [c for c in [1, 3, 4, 5, 7, 8, 9, 12, 15] if root_order_exponent(c, p) < n]
        ca, cg = rng.choice(conds), rng.choice(conds)

        def draw(c):
            return RootSum(c, [(rng.randrange(c), rng.choice([-1, 1, 1, 2])) for _ in range(rng.randint(1, 3))])

        alpha, gamma = draw(ca), draw(cg)
        try:
            conj_lower_bound(alpha, gamma, p, n)
        except ValueError:
            continue
        if assemble(alpha, gamma, p, n).is_zero():
            continue
        return alpha, gamma, p, n


def conj_sound(alpha, gamma, p, n) -> bool:
    bound = conj_lower_bound(alpha, gamma, p, n)
    report = house_of(assemble(alpha, gamma, p, n))
    with working_precision(max(report.bits, 128)):
        return not (bound > report.house_sq + arb(0, "1e-25"))


@given(st.integers(0, 2**32))
def test_conj_bound_sound(seed):
    assert conj_sound(*conj_instance(random.Random(seed)))


def test_conj_bound_houses_mode():
    alpha, gamma = R("3:0,1^2"), R("5:0,1")
    with working_precision(128):
        b = conj_lower_bound(alpha, gamma, 7, 1, HOUSES)
        assert not (b < conj_lower_bound(alpha, gamma, 7, 1, MAGNITUDES))
    report = house_of(assemble(alpha, gamma, 7, 1))
    with working_precision(report.bits):
        assert not (b > report.house_sq + arb(0, "1e-25"))
