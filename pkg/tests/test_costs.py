import json
import math
from fractions import Fraction

import numpy as np
import pytest

from euclid_llt.cf_core import BranchWord, expand
from euclid_llt.costs import (CostFunction, lattice_detect, moment_tail_report, total_cost, total_cost_exact,
                              word_cost, word_cost_exact)

E122 = expand(5, 7)


def test_total_cost_examples():
    assert total_cost(E122, CostFunction.constant(1)) == 3
    assert total_cost(E122, CostFunction.log()) == pytest.approx(2 * math.log(2), abs=1e-15)
    assert total_cost(E122, CostFunction.indicator(2)) == 2
    assert total_cost_exact(E122, CostFunction.constant(Fraction(1, 3))) == 1


def test_word_cost():
    c = CostFunction.log()
    assert word_cost(BranchWord.from_digits([7]), c) == pytest.approx(math.log(7))
    assert word_cost(BranchWord.from_digits([1, 2, 2]), CostFunction.constant(1)) == 3
    assert word_cost_exact(BranchWord.from_digits([1, 2, 2]), CostFunction.identity()) == 5
    assert word_cost_exact(BranchWord.from_digits([3]), c) is None


def test_values_match_pointwise():
    for c in [CostFunction.log(), CostFunction.bitlength(), CostFunction.identity(), CostFunction.indicator(3)]:
        m = np.arange(1, 300)
        assert np.array_equal(c.values(m), np.array([c(int(k)) for k in m]))


def test_bitlength_matches_int_bit_length():
    c = CostFunction.bitlength()
    for m in range(1, 5000):
        assert c(m) == m.bit_length()


def test_table_cost_tail_rules():
    c = CostFunction.from_table([1, 2, 3], tail="constant", tail_value=7)
    assert [c(m) for m in (1, 2, 3, 4, 100)] == [1, 2, 3, 7, 7]
    assert c.is_rational_valued


@pytest.mark.parametrize("text,expected", [
    ("one", [1, 1, 1]),
    ("const:2.5", [2.5, 2.5, 2.5]),
    ("identity", [1, 2, 3]),
    ("indicator:2", [0, 1, 0]),
    ("bitlength", [1, 2, 2]),
])
def test_parse(text, expected):
    c = CostFunction.parse(text)
    assert [c(m) for m in (1, 2, 3)] == expected


def test_config_round_trip():
    for c in [CostFunction.constant(Fraction(3, 2)), CostFunction.log(), CostFunction.indicator(4),
              CostFunction.from_table([1, 0, 2], tail="constant", tail_value=5)]:
        d = CostFunction.from_config(json.dumps(c.to_config()))
        m = np.arange(1, 50)
        assert np.array_equal(c.values(m), d.values(m))


def test_zero_cost_rejected():
    with pytest.raises(ValueError):
        CostFunction.constant(0)


def test_lattice_examples():
    one = lattice_detect(CostFunction.constant(1))
    assert one.is_lattice and one.span == 1 and one.shift == 0
    ident = lattice_detect(CostFunction.identity())
    assert ident.is_lattice and ident.span == 1 and ident.shift == 0
    assert lattice_detect(CostFunction.log()).kind == "nonlattice-heuristic"
    bl = lattice_detect(CostFunction.bitlength())
    assert bl.span == 1


def test_lattice_rational_shift():
    c = CostFunction.from_table([Fraction(1, 2), Fraction(5, 2)], tail="constant", tail_value=Fraction(9, 2))
    lc = lattice_detect(c, M=8)
    assert lc.span_exact == 2 and lc.shift_exact == Fraction(1, 2)


def test_moment_tail_trends():
    assert moment_tail_report(CostFunction.constant(1), 3, 0.5, 10**6).moment_trend == "converging"
    assert moment_tail_report(CostFunction.log(), 3, 0.5, 10**6).moment_trend == "converging"
    assert moment_tail_report(CostFunction.identity(), 3, 0.5, 10**5).moment_trend == "diverging"
