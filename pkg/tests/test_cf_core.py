import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from euclid_llt.cf_core import (AlgorithmKind, Branch, BranchWord, admissible_pairs, contraction_report,
                                division_step, expand, is_admissible, iterate_to_zero, map_apply, reconstruct,
                                word_from_expansion)

ALGS = list(AlgorithmKind)


def nested_value(digits, signs):
    """Independent evaluation of 1/(m1 + e1/(m2 + ... + e_{P-1}/m_P))."""
    val = Fraction(0)
    tail = list(zip(digits, list(signs) + [1]))
    for m, e in reversed(tail):
        val = Fraction(1) / (m + e * val)
    return val


@pytest.mark.parametrize("p,q,alg,digits", [
    (5, 7, "ordinary", (1, 2, 2)),
    (1, 1, "ordinary", (1,)),
    (3, 10, "ordinary", (3, 3)),
    (1, 5, "centered", (5,)),
    (2, 7, "centered", (4, 2)),     # ties round up: 7/2 -> 4
    (1, 3, "odd", (3,)),
])
def test_hand_expansions(p, q, alg, digits):
    assert expand(p, q, alg).digits == digits


def test_p_above_q_rejected():
    with pytest.raises(ValueError, match="p must not exceed q"):
        expand(7, 5)


def test_depth_one_iff_p_equals_one_divides_q():
    for q in range(1, 60):
        for p in range(1, q + 1):
            if math.gcd(p, q) == 1:
                e = expand(p, q)
                assert (e.depth == 1) == (p == 1)
                assert (e.digits[0] == 1) == (2 * p > q)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10**6), st.integers(1, 10**6), st.sampled_from(ALGS))
def test_round_trip_random(a, b, alg):
    p, q = min(a, b), max(a, b)
    g = math.gcd(p, q)
    e = expand(p, q, alg)
    r = reconstruct(e)
    assert (r.p, r.q) == (p // g, q // g)
    assert nested_value(e.digits, e.signs) == Fraction(p, q)
    assert e.constraint_violations() == []


@pytest.mark.parametrize("alg", ALGS)
def test_division_step_identity(alg):
    for q in range(1, 80):
        for p in range(1, q + 1):
            m, eps, r = division_step(p, q, alg)
            assert q == m * p + eps * r
            # the odd map sends 1/(2k) to 1, so r = p is possible there
            assert 0 <= r <= p if alg is AlgorithmKind.ODD else 0 <= r < p


def test_centered_remainder_at_most_half():
    for q in range(2, 120):
        for p in range(1, q // 2 + 1):
            m, _, r = division_step(p, q, AlgorithmKind.CENTERED)
            assert 2 * r <= p and m >= 2


def test_odd_digits_odd():
    for q in range(1, 120):
        for p in range(1, q + 1):
            assert division_step(p, q, AlgorithmKind.ODD)[0] % 2 == 1


def test_centered_normalizing_first_step_flagged():
    e = expand(4, 5, "centered")
    assert e.normalized_first_step and e.digits[0] == 1
    assert e.constraint_violations() == []


def test_map_apply_exact_matches_remainder():
    for q in range(2, 40):
        for p in range(1, q):
            if math.gcd(p, q) == 1:
                assert map_apply("ordinary", Fraction(p, q)) == Fraction(q % p, p)


def test_map_float_and_exact_agree():
    x = Fraction(13, 37)
    assert abs(map_apply("ordinary", float(x)) - float(map_apply("ordinary", x))) < 1e-14


def test_map_domain_checked():
    with pytest.raises(ValueError):
        map_apply("centered", Fraction(3, 4))
    assert map_apply("centered", Fraction(3, 4), normalizing=True) == Fraction(1, 3)


@pytest.mark.parametrize("alg", ALGS)
def test_iterating_map_reaches_zero_at_depth(alg):
    for q in range(2, 50):
        for p in range(1, q + 1):
            if math.gcd(p, q) == 1:
                e = expand(p, q, alg)
                assert iterate_to_zero(Fraction(p, q), alg, e.depth) == 0
                if e.depth > 1:
                    assert iterate_to_zero(Fraction(p, q), alg, e.depth - 1) != 0


def test_admissible_sets():
    ms, eps = admissible_pairs("ordinary", 6)
    assert ms.tolist() == [1, 2, 3, 4, 5, 6] and set(eps.tolist()) == {1}
    ms, eps = admissible_pairs("centered", 4)
    assert sorted(zip(ms.tolist(), eps.tolist())) == [(2, 1), (3, -1), (3, 1), (4, -1), (4, 1)]
    assert not is_admissible("odd", 2, 1)
    assert is_admissible("odd", 3, -1)
    with pytest.raises(ValueError):
        Branch(AlgorithmKind.CENTERED, 2, -1)


def test_word_value_and_derivative():
    w = BranchWord.from_digits([1, 2, 2])
    assert w(Fraction(0)) == Fraction(5, 7)
    assert abs(w.determinant) == 1
    xs = np.linspace(0, 1, 11)
    assert np.allclose(w.derivative(xs), w.derivative_chain(xs), rtol=1e-14)
    # finite difference
    h = 1e-6
    fd = (float(w(0.5 + h)) - float(w(0.5 - h))) / (2 * h)
    assert abs(abs(fd) - float(w.derivative(0.5))) < 1e-8


def test_word_from_expansion_evaluates_to_rational():
    for alg in ALGS:
        for p, q in [(5, 7), (4, 5), (11, 30), (17, 19)]:
            e = expand(p, q, alg)
            assert word_from_expansion(e)(Fraction(0)) == Fraction(p, q)


def test_contraction_report_ordinary():
    rep = contraction_report("ordinary", max_length=8, samples_per_length=40)
    golden = (math.sqrt(5) - 1) / 2
    assert rep.rho_hat < 1
    assert rep.rho_hat >= golden ** 2 * 0.99
    assert rep.distortion_bound <= 2.0 + 1e-12
