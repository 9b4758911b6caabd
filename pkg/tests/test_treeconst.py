import random

import pytest
from hypothesis import given, settings, strategies as st

from patchforge.counterexample import QTable, build_scheme, generate_Nn
from patchforge.fixtures import GRAPH, LEAF, leaf_scheme
from patchforge.mso import FALSE, parse
from patchforge.structures import Vocabulary, iso_check, relabel, restrict
from patchforge.treeconst import (
    ConsistencyViolation, CorrectTree, LeafModel, LeafPropertyViolation, SStar, SemanticOp,
    interp_to_const, lemma_const_probe, lemma_ind_replay, oplus, s_u, singleton_tree,
    static_arity_ok,
)
from patchforge.trees import (
    InterpScheme, Tree, TreeError, complete_binary_tree, interpret, k_colors, random_db_tree,
)

K3 = k_colors(3)


def rel_names(S, prefix):
    return [n for n in S.vocabulary.names if n.startswith(prefix)]


def test_single_node_tree():
    T = singleton_tree("x", [], ("P1", "P2"))
    S = CorrectTree(T).leaf_structure(["x"])
    assert S.universe == ("x",)
    assert not S.rel("RR") and not S.rel("RL") and not S.rel("RRrt") and not S.rel("RLrt")
    (r3,) = rel_names(S, "R3_")
    (r2,) = rel_names(S, "R2_")
    assert S.rel(r3) == {("x", "x", "x")} and S.rel(r2) == {("x", "x")}
    assert S.rel("rt") == {("x",)} and S.rel("le") == {("x", "x")}


def test_depth_one_branching_relations():
    T = complete_binary_tree(1)
    S = CorrectTree(T).leaf_structure(["0", "1"])
    # x1 != x2 meet at the root, and root ^ x3 is the root again: no strict step up
    assert ("0", "1", "0") not in S.rel("RR")
    assert ("0", "1", "0") not in S.rel("RL")
    # a meet strictly below the root sits under one of its successors
    assert ("0", "0") in S.rel("RRrt") and ("1", "1") in S.rel("RLrt")
    assert ("0", "0", "1") in S.rel("RR") and ("1", "1", "0") in S.rel("RL")


def test_extension_is_deterministic():
    T = random_db_tree(random.Random(3), 6, k=3)
    a = CorrectTree(T).leaf_structure(T.leaves)
    b = CorrectTree(T).leaf_structure(T.leaves)
    assert a == b


def test_restriction_commutes_with_extension():
    T = random_db_tree(random.Random(8), 6, k=3)
    full = CorrectTree(T).leaf_structure(T.leaves)
    A = T.leaves[::2]
    a, b = restrict(full, A), CorrectTree(T).leaf_structure(A)
    # lazily named types only enter the vocabulary once realized
    rel = lambda S, n: S.rel(n) if n in S.vocabulary.names else set()
    for n in set(a.vocabulary.names) | set(b.vocabulary.names):
        assert (rel(a, n) or set()) == (rel(b, n) or set()), n


def test_oplus_of_singletons():
    a = singleton_tree("a", [], K3)
    b = singleton_tree("b", ["P3"], K3)
    T = oplus(a, b, ["P3"])
    assert len(T) == 3 and T.is_db()
    assert T.root in T.colors["P3"]
    assert T.child_in(T.root, "P1") == "a" and T.child_in(T.root, "P2") == "b"
    with pytest.raises(TreeError):
        oplus(singleton_tree("c", [], K3), singleton_tree("d", [], K3), ["P1"])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_oplus_preserves_db(seed):
    rng = random.Random(seed)
    T1 = random_db_tree(rng, 4, k=3)
    T2 = random_db_tree(rng, 4, k=3)
    T2 = T2.relabeled({x: ("r", x) for x in T2.nodes})
    assert oplus(T1, T2, []).is_db()


def test_s_u_on_singletons():
    L1 = LeafModel(singleton_tree("a", [], K3), frozenset({"a"}))
    L2 = LeafModel(singleton_tree("b", [], K3), frozenset({"b"}))
    audit = SemanticOp("s_u")
    out = s_u(["P3"], L1, L2, audit)
    S = out.structure
    assert set(S.universe) == {"a", "b"}
    direct = CorrectTree(out.host).leaf_structure(["a", "b"])
    assert S == direct
    assert ("a", "a") in S.rel("RRrt") and ("b", "b") in S.rel("RLrt")
    assert audit.checks > 0


def sstar_scheme(body):
    return InterpScheme(GRAPH, 0, 2, (parse(LEAF),), {("E", (0, 0)): body}, True, "probe")


def test_s_star_false_gives_empty():
    T = complete_binary_tree(2)
    L = LeafModel(T, frozenset(T.leaves))
    out = SStar(sstar_scheme(FALSE)).apply(L)
    assert not out.rel("E")


def test_s_star_equality_gives_diagonal():
    T = complete_binary_tree(2)
    L = LeafModel(T, frozenset(T.leaves))
    out = SStar(sstar_scheme(parse("(= x1 x2)"))).apply(L)
    assert set(out.rel("E")) == {(x, x) for x in T.leaves}


def test_trivial_scheme_pipeline():
    c = InterpScheme(Vocabulary(), 0, 2, (parse(LEAF),), {}, True, "maximal")
    K = interp_to_const(c)
    out = K.pipeline(complete_binary_tree(1))
    assert len(out) == 2 and not out.vocabulary.symbols


def test_residue_scheme_pipeline_gives_N2():
    c = build_scheme(2, QTable.random(2, 0))
    K = interp_to_const(c, 1)
    T = complete_binary_tree(2)
    got = K.pipeline(T)
    want = generate_Nn(2, c)
    assert iso_check(got, relabel(want, {e: e[0] for e in want.universe}))[0]


def test_pipeline_on_random_trees():
    K = interp_to_const(leaf_scheme(), 1)
    rng = random.Random(11)
    for _ in range(10):
        T = random_db_tree(rng, 6, k=3)
        assert K.check(T, replay=True)
    assert static_arity_ok(K) and K.aux_arity() == 3
    assert all(a <= 3 for n, a in K.tau_plus.symbols)


def test_lemma_ind_replay():
    T = random_db_tree(random.Random(5), 7, k=3)
    same, built = lemma_ind_replay(T, T.leaves[:3])
    assert same and len(built) == 3


def test_leaf_property_required():
    c = InterpScheme(Vocabulary(), 0, 2, (parse("(= x x)"),), {}, True, "all")
    K = interp_to_const(c)
    with pytest.raises(LeafPropertyViolation):
        K.pipeline(complete_binary_tree(1))
    with pytest.raises(LeafPropertyViolation):
        interp_to_const(InterpScheme(Vocabulary(), 0, 2, (parse(LEAF),), {}, False))
    with pytest.raises(LeafPropertyViolation):
        interp_to_const(c, samples=[complete_binary_tree(1)])


def hidden_ancestor_tree(marked: bool) -> Tree:
    """r -> a -> y -> {x1, x2}; a carries P3 only when marked."""
    parent = {"a": "r", "b": "r", "y": "a", "c": "a", "x1": "y", "x2": "y"}
    colors = {"P1": {"a", "y", "x1"}, "P2": {"b", "c", "x2"},
              "P3": {"x1", "x2"} | ({"a"} if marked else set())}
    return Tree.build(parent, "r", colors, K3)


def test_rank_zero_segments_trigger_the_alarm():
    # at rank 0 the segment from the root to the meet forgets the P3 node inside it,
    # so two trees give the pair (x1, x2) the same type but different edges
    K = interp_to_const(leaf_scheme(), 0)
    assert K.check(hidden_ancestor_tree(True), replay=False)
    with pytest.raises(ConsistencyViolation):
        K.check(hidden_ancestor_tree(False), replay=False)


def test_rank_one_segments_are_enough_there():
    K = interp_to_const(leaf_scheme(), 1)
    assert K.check(hidden_ancestor_tree(True))
    assert K.check(hidden_ancestor_tree(False))


def test_semantic_op_detects_clash():
    op = SemanticOp("t")
    op.record("k", True)
    op.record("k", True)
    with pytest.raises(ConsistencyViolation):
        op.record("k", False)


def test_probe_on_small_sample():
    rng = random.Random(0)
    trees = [random_db_tree(rng, 6, 3) for _ in range(20)]
    r = lemma_const_probe(trees, rng=rng)
    assert r.passed and r.samples == 120
