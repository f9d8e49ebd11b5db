import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from partmi.core import InputError
from partmi.counting import BudgetExceeded, log_omega_exact
from partmi.measures import MeasureSpec, h0_from_sizes, i0_factorial, score_table
from partmi.verify import (
    BoundCheckConfig,
    check_bound,
    compositions,
    count_full_tables,
    enumerate_tables,
    flip_table,
    single_flip_delta,
)

from oracles import brute_force_full_tables

# -- enumeration ------------------------------------------------------------


@pytest.mark.parametrize("q_c, q_g, n, count", [
    (1, 1, 3, 1),
    (2, 1, 2, 1),
    (2, 2, 3, 8),
    (2, 2, 2, 2),
    (3, 2, 4, 30),
])
def test_enumeration_counts(q_c, q_g, n, count):
    brute = brute_force_full_tables(q_c, q_g, n)
    assert len(brute) == count
    got = [t.counts.tolist() for t in enumerate_tables(q_c, q_g, n)]
    assert sorted(got) == sorted(brute)
    assert count_full_tables(q_c, q_g, n) == count


@pytest.mark.parametrize("q_c, q_g, n", [(2, 3, 6), (3, 3, 5), (4, 2, 6), (1, 4, 7)])
def test_enumeration_matches_bruteforce(q_c, q_g, n):
    got = sorted(t.counts.tolist() for t in enumerate_tables(q_c, q_g, n))
    assert got == sorted(brute_force_full_tables(q_c, q_g, n))
    assert len(got) == count_full_tables(q_c, q_g, n)


def test_enumeration_rejects_impossible():
    with pytest.raises(InputError):
        list(enumerate_tables(3, 2, 2))


def test_enumeration_budget():
    with pytest.raises(BudgetExceeded):
        list(enumerate_tables(3, 3, 8, budget=10))


def test_compositions():
    c = compositions(3, 3)
    assert c.shape == (math.comb(5, 2), 3)
    assert (c.sum(axis=1) == 3).all() and (c >= 0).all()
    assert len({tuple(r) for r in c.tolist()}) == len(c)


# -- bound ------------------------------------------------------------------


def test_bound_two_by_two_exact():
    res = check_bound(BoundCheckConfig(2, 2, 30, "exact"))
    assert res.ok
    assert res.cases_checked == sum(count_full_tables(2, 2, n) for n in range(2, 31))
    # permuted diagonals: diagonal and anti-diagonal for each split of n
    assert res.equality_cases == sum(2 * (n - 1) for n in range(2, 31))
    assert res.max_gap < 0


def test_bound_three_by_two_ec():
    res = check_bound(BoundCheckConfig(3, 2, 20, "ec"))
    assert res.ok and res.cases_checked > 0


def test_bound_equality_example():
    # c = g with sizes (2, 1) reaches equality; at n = 3 the equality tables
    # are the four permuted diagonals
    ct = np.array([[2, 0], [0, 1]])
    spec = MeasureSpec("reduced", "none", "exact")
    i_cg = score_table(ct, spec).score
    i_gg = h0_from_sizes([2, 1]) - log_omega_exact([2, 1], [2, 1]).log_omega
    assert i_cg == pytest.approx(i_gg, abs=1e-12)
    res = check_bound(BoundCheckConfig(2, 2, 3, "exact", n_min=3))
    assert res.cases_checked == 8 and res.equality_cases == 4 and res.ok


def test_bound_budget():
    with pytest.raises(BudgetExceeded):
        check_bound(BoundCheckConfig(3, 3, 12, budget=1000))


def test_bound_config_validation():
    with pytest.raises(InputError):
        BoundCheckConfig(3, 3, 2)
    with pytest.raises(InputError):
        BoundCheckConfig(0, 3, 5)


def test_bound_result_serialises():
    d = check_bound(BoundCheckConfig(2, 2, 4)).as_dict()
    assert d["violations"] == [] and d["omega_mode"] == "exact"
    assert d["cases_checked"] == sum(count_full_tables(2, 2, n) for n in (2, 3, 4))


# -- single flip ------------------------------------------------------------


def test_single_flip_two_groups_of_two():
    d = single_flip_delta([2, 2], 0, 1)
    assert d.alpha == 4.0
    assert d.delta_i0 == pytest.approx(math.log(3), abs=1e-15)
    assert d.delta_rmi == pytest.approx(math.log(2 * 6 / 5), abs=1e-12)


def closed_form(sizes, a, b):
    n = sum(sizes)
    sq = sum(x * x for x in sizes)
    alpha = (n * n - n + (n * n - sq) / len(sizes)) / (sq - n)
    n1, n2 = sizes[a], sizes[b]
    d_lo = math.log((n1 + alpha - 1) * (n2 + 1) / (n1 * (n2 + alpha)))
    return math.log(n2 + 1), d_lo, math.log(n1 * (n2 + alpha) / (n1 + alpha - 1))


@given(st.lists(st.integers(1, 60), min_size=2, max_size=8), st.data())
@settings(deadline=None)
def test_single_flip_closed_form(sizes, data):
    q = len(sizes)
    a = data.draw(st.integers(0, q - 1))
    b = data.draw(st.integers(0, q - 1))
    if a == b or sizes[a] < 2:
        return
    d = single_flip_delta(sizes, a, b)
    di0, dlo, drmi = closed_form(sizes, a, b)
    assert d.delta_i0 == pytest.approx(di0, abs=1e-9)
    assert d.delta_log_omega == pytest.approx(dlo, abs=1e-9)
    assert d.delta_rmi == pytest.approx(drmi, abs=1e-9)
    assert d.delta_rmi > 0
    # the I0 change also follows from the measures module directly
    g_table = np.diag(sizes)
    assert d.delta_i0 == pytest.approx(
        i0_factorial(g_table) - i0_factorial(flip_table(sizes, a, b)), abs=1e-9)


@pytest.mark.parametrize("sizes, a, b", [
    ([1, 3], 0, 1),
    ([2, 2], 0, 0),
    ([2, 2], 0, 2),
    ([0, 2], 1, 0),
])
def test_single_flip_domain(sizes, a, b):
    with pytest.raises(InputError):
        single_flip_delta(sizes, a, b)


def test_flip_table_margins():
    t = flip_table([3, 2, 4], 2, 0)
    assert t.col_sums.tolist() == [3, 2, 4]
    assert t.row_sums.tolist() == [4, 2, 3]
