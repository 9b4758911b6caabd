import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from patchforge.fixtures import GRAPH, leaf_scheme, sample_scheme
from patchforge.mso import FALSE, model_check, parse
from patchforge.structures import Vocabulary, iso_check
from patchforge.trees import (
    InterpScheme, Tree, TreeError, complete_binary_tree, db_shapes, half, interpret,
    leaf_property_holds, random_db_tree, random_tree, rooted_shapes, segments, shape_tree, t3,
    wlog_check, wlog_transform, wlog_tree, y_set,
)

MAXIMAL = parse("(not (exists y (and (le x y) (not (= x y)))))")


def naive_meet(T, x, y):
    common = [a for a in T.nodes if T.le(a, x) and T.le(a, y)]
    return max(common, key=T.depth)


def test_meet_of_siblings():
    T = complete_binary_tree(2)
    assert T.meet("00", "01") == "0"
    assert T.meet("00", "10") == ""
    assert T.meet("01", "01") == "01"


def test_tree_basics():
    T = complete_binary_tree(2)
    assert T.root == "" and len(T) == 7
    assert T.leaves == ["00", "01", "10", "11"]
    assert T.depth("01") == 2 and T.ancestors("01") == ("", "0", "01")
    assert T.le("", "11") and not T.le("0", "11")
    assert T.is_db()
    assert T.structure.rel("rt") == {("",)}


def test_root_is_minimal_in_the_order():
    T = complete_binary_tree(1)
    assert model_check(T.structure, parse("(forall x (le r x))"), {"r": ""})


def test_y_set_examples():
    T = complete_binary_tree(2)
    Y = y_set(T, ["00", "01", "10"])
    assert set(Y) == {"00", "01", "10", "0", ""}
    assert len(Y) == 5 <= 2 * 3
    assert set(y_set(T, ["11"])) == {"11", ""}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_meet_and_y_bound(seed):
    rng = random.Random(seed)
    T = random_db_tree(rng, 7)
    for x, y in itertools.product(T.leaves, repeat=2):
        assert T.meet(x, y) == naive_meet(T, x, y)
    xs = rng.sample(T.leaves, rng.randint(1, len(T.leaves)))
    assert len(y_set(T, xs)) <= 2 * len(xs)


def test_build_rejects_cycles_and_missing_root():
    with pytest.raises(TreeError):
        Tree.build({1: 2, 2: 1}, 1)
    with pytest.raises(TreeError):
        Tree.build({1: 0}, 5, nodes=[0, 1])


def test_t3_segment():
    T = complete_binary_tree(3)
    seg = t3(T, "", "010")
    # path "", "0", "01", "010" plus the subtrees hanging off "0" and "01"
    assert seg == {"", "0", "01", "010", "00", "000", "001", "011"}
    assert t3(T, "01", "01") == {"01"}


def test_halves_and_segments():
    T = complete_binary_tree(2)
    assert half(T, "R") == {"", "0", "00", "01"}
    assert half(T, "L") == {"", "1", "10", "11"}
    S = segments(T, ["00", "10"])
    assert S.parent_y == {"00": "", "10": ""}
    assert S.R_R(T, "", "00") and not S.R_R(T, "", "10")
    assert S.R_L(T, "", "10")


def test_segments_need_maximal_points():
    with pytest.raises(TreeError):
        segments(complete_binary_tree(2), ["0"])


def test_tree_json_round_trip():
    T = random_db_tree(random.Random(4), 5, k=3)
    back = Tree.from_dict(T.to_dict())
    assert back.to_dict() == T.to_dict()
    T2 = complete_binary_tree(2)
    assert Tree.from_dict(T2.to_dict()).to_dict() == T2.to_dict()


def test_shape_counts():
    assert [len(rooted_shapes(n)) for n in range(1, 9)] == [1, 1, 2, 4, 9, 20, 48, 115]
    assert len(db_shapes(5)) == 1 + 1 + 2 + 5 + 14
    for s in rooted_shapes(6):
        assert len(shape_tree(s)) == 6


def trivial_scheme(eq=MAXIMAL):
    return InterpScheme(Vocabulary(), 0, 2, (eq,), {}, True, "maximal")


def test_interpret_examples():
    T = complete_binary_tree(1)
    M = interpret(trivial_scheme(), T)
    assert len(M) == 2 and set(M.universe) == {("0", 0), ("1", 0)}
    assert len(interpret(trivial_scheme(FALSE), T)) == 0


def test_interpret_relation():
    c = InterpScheme(GRAPH, 0, 2, (MAXIMAL,),
                     {("E", (0, 0)): parse("(and (P1 x1) (P2 x2))")}, True, "cross")
    M = interpret(c, complete_binary_tree(2))
    assert len(M) == 4
    assert set(M.rel("E")) == {(("00", 0), (b, 0)) for b in ("01", "11")} | \
        {(("10", 0), (b, 0)) for b in ("01", "11")}


def test_interpret_rejects_missing_colors():
    c = leaf_scheme()
    with pytest.raises(TreeError):
        interpret(c, complete_binary_tree(1))


def test_leaf_property():
    T = random_db_tree(random.Random(1), 6, k=3)
    assert leaf_property_holds(leaf_scheme(), T)
    everything = InterpScheme(Vocabulary(), 0, 2, (parse("(= x x)"),), {}, False)
    assert not leaf_property_holds(everything, complete_binary_tree(1))


def test_wlog_size_example():
    c = sample_scheme()
    assert c.k1 == 1
    T = Tree.build({1: 0}, 0, {"P1": {1}}, ("P1",), [0, 1])
    ok, size, expected = wlog_check(c, T)
    assert ok and size == expected == 2 + 2 * 2


def test_wlog_with_k1_zero():
    c = leaf_scheme()
    T = random_db_tree(random.Random(2), 4, k=3)
    ok, size, expected = wlog_check(c, T)
    assert ok and size == expected == 2 * len(T)
    c2 = wlog_transform(c)
    assert c2.k1 == 0 and c2.k2 == c.k2 + 2


def test_wlog_tree_shape():
    c = sample_scheme()
    T = complete_binary_tree(1, k=1)
    T2 = wlog_tree(c, T)
    # every original edge now passes through the k1+1 chain nodes
    assert T2.parent["0"] == ("chain", "", 1)
    assert T2.parent[("chain", "", 0)] == ""
    # with k2 = 1 the new colors are P2 (old nodes) and P3 (chain nodes)
    assert T2.colors["P3"] == {x for x in T2.nodes if isinstance(x, tuple)}
    assert T2.colors["P2"] == set(T.nodes)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_wlog_random(seed):
    rng = random.Random(seed)
    c = sample_scheme()
    T = random_tree(rng, rng.randint(1, 6), c.k2)
    ok, size, expected = wlog_check(c, T)
    assert ok and size == expected


def test_scheme_json_round_trip():
    for c in (sample_scheme(), leaf_scheme()):
        back = InterpScheme.from_dict(c.to_dict())
        assert back.to_dict() == c.to_dict()
        T = random_tree(random.Random(0), 5, c.k2)
        assert iso_check(interpret(c, T), interpret(back, T))[0]
