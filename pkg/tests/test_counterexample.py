import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from patchforge.counterexample import (
    BudgetExceeded, QTable, admissible_closed_form, build_phi_dp, build_scheme, choose_p,
    count_partitions, counting_bound, d, d_p, exceeds, generate_Nn, oracle_Nn, q_admissible,
    set_partitions,
)
from patchforge.trees import TreeError, complete_binary_tree, random_tree


def test_distance_examples():
    T = complete_binary_tree(2)
    assert d(T, "00", "00") == 0
    assert d(T, "00", "01") == 1 and d_p(T, "00", "01", 2) == 1
    assert d(T, "00", "11") == 2 and d_p(T, "00", "11", 2) == 0
    with pytest.raises(TreeError):
        d(T, "0", "00")


def test_distance_is_not_symmetric_on_uneven_trees():
    # leaf a at depth 1, leaf b at depth 3, both under the root
    from patchforge.trees import Tree
    T = Tree.build({"a": "r", "u": "r", "v": "u", "b": "v"}, "r", {}, ())
    assert d(T, "a", "b") == 1 and d(T, "b", "a") == 3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([2, 3]))
def test_exactly_one_residue_formula_holds(seed, p):
    T = random_tree(random.Random(seed), random.Random(seed).randint(1, 8), 0)
    phis = [build_phi_dp(i, p) for i in range(p)]
    for x, y in itertools.product(T.leaves, repeat=2):
        got = [T.checker.check(f, {"x": x, "y": y}) for f in phis]
        assert got.count(True) == 1
        assert got.index(True) == d_p(T, x, y, p)


def test_equal_leaves_have_residue_zero():
    T = complete_binary_tree(2)
    f = build_phi_dp(0, 3)
    assert all(T.checker.check(f, {"x": x, "y": x}) for x in T.leaves)


def test_phi_rejects_bad_residue():
    with pytest.raises(ValueError):
        build_phi_dp(2, 2)
    with pytest.raises(ValueError):
        build_phi_dp(-1, 3)


def test_constant_zero_table_on_N1_is_full():
    qt = QTable.constant(2, 0)
    assert len(oracle_Nn(1, 2, qt)) == 16
    N = generate_Nn(1, build_scheme(2, qt))
    assert len(N.rel("R")) == 16


def test_N2_matches_oracle():
    qt = QTable.random(2, 4)
    N = generate_Nn(2, build_scheme(2, qt))
    assert len(N.universe) == 4
    assert set(N.rel("R")) == oracle_Nn(2, 2, qt)


def test_generate_cap():
    with pytest.raises(BudgetExceeded):
        generate_Nn(5, build_scheme(2, QTable.constant(2)))


def test_scheme_rejects_mismatched_table():
    with pytest.raises(ValueError):
        build_scheme(3, QTable.constant(2))


def test_choose_p():
    assert choose_p(4) == 7
    assert exceeds(7, 4) and not exceeds(6, 4)
    m = 2 ** 16
    p = choose_p(m)
    assert p * p > 32 * p + m * m
    assert not ((p - 1) ** 2 > 32 * (p - 1) + m * m)


@pytest.mark.parametrize("m", [3, 5, 6, 10])
def test_choose_p_non_power_of_two(m):
    import math
    p = choose_p(m)
    f = lambda p: p * p - 2 * p * math.log2(m) - m * m
    assert f(p) > 0 and f(p - 1) <= 0


def test_choose_p_case2():
    p = choose_p(4, "case2")
    assert p * p > 2 * p + 4 * p and not ((p - 1) ** 2 > 2 * (p - 1) + 4 * (p - 1))
    with pytest.raises(ValueError):
        choose_p(1)


@pytest.mark.parametrize("n,m", [(0, 2), (1, 1), (3, 2), (4, 3), (5, 5)])
def test_partition_count(n, m):
    assert count_partitions(n, m) == len(set(set_partitions(n, m)))


def test_parity_table_admissibility():
    qt = QTable.from_function(3, lambda i, j: (i + j) % 2)
    for mode in ("case1", "case2"):
        assert q_admissible(qt, 2, mode) == admissible_closed_form(qt, 2, mode)
    # rows 0 and 2 agree, so two classes per side suffice
    assert not q_admissible(qt, 2, "case1")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 4), st.integers(1, 3),
       st.sampled_from(["case1", "case2"]), st.sampled_from([1, 2]))
def test_admissible_matches_closed_form(seed, p, m, mode, axis):
    qt = QTable.random(p, seed)
    assert q_admissible(qt, m, mode, axis=axis) == admissible_closed_form(qt, m, mode, axis=axis)


def test_admissibility_budget():
    with pytest.raises(BudgetExceeded):
        q_admissible(QTable.constant(9), 4, budget=10)


def test_counting_bound_is_a_probability():
    assert 0 <= counting_bound(7, 4) <= 1
    assert counting_bound(2, 4) == 1.0
