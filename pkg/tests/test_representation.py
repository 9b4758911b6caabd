import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from patchforge.addition import cadd, cleaf, eval_construction
from patchforge.campaigns import representation_campaign
from patchforge.fixtures import aux_const_spec, marked_graph_spec, random_marked_term
from patchforge.representation import (
    Representation, RepresentationError, build_representation, decode_representation, permuted,
    rep_colors, representation_term, validate_representation,
)
from patchforge.structures import iso_check


def test_leaf_representation():
    spec = marked_graph_spec()
    rep = build_representation(spec, cleaf("v"))
    T = rep.tree
    assert len(T) == 1
    assert T.colors["R_v"] == {T.root} and T.colors["P1"] == {T.root}
    M = decode_representation(spec, rep)
    assert iso_check(M.expanded(), spec.bases["v"].expanded())[0]


def test_sum_representation_is_three_node_db_tree():
    spec = marked_graph_spec()
    rep = build_representation(spec, cadd("join", cleaf("v"), cleaf("e")))
    T = rep.tree
    assert len(T) == 3 and T.is_db(("S1", "S2"))
    assert T.colors["Q_join"] == {T.root}


def test_predicate_count():
    spec = marked_graph_spec()
    assert (len(spec.bases), len(spec.ops), spec.k_star) == (2, 1, 1)
    assert len(rep_colors(spec)) == 2 + 1 + 1 + 2 == 6
    spec2 = aux_const_spec()
    assert len(rep_colors(spec2)) == len(spec2.bases) + len(spec2.ops) + spec2.k_star + 2


def test_term_read_back():
    t = cadd("join", cleaf("v"), cadd("join", cleaf("e"), cleaf("v")))
    assert representation_term(build_representation(marked_graph_spec(), t)) == t


def test_json_round_trip():
    spec = marked_graph_spec()
    rep = build_representation(spec, random_marked_term(random.Random(2), 4))
    back = Representation.from_dict(rep.to_dict())
    assert back.to_dict() == rep.to_dict()


def test_permuted_representation_decodes_isomorphically():
    spec = marked_graph_spec()
    rep = build_representation(spec, random_marked_term(random.Random(5), 4))
    ids = list(rep.tree.nodes)
    shuffled = [f"n{i}" for i in range(len(ids))]
    random.Random(1).shuffle(shuffled)
    other = permuted(rep, dict(zip(ids, shuffled)))
    a, b = decode_representation(spec, rep), decode_representation(spec, other)
    assert iso_check(a.expanded(), b.expanded())[0]


def test_corrupted_labels_are_rejected():
    spec = marked_graph_spec()
    rep = build_representation(spec, cadd("join", cleaf("v"), cleaf("e")))
    root = rep.tree.root
    bad = replace(rep, labels={**rep.labels, root: ("base", "v")})
    assert validate_representation(spec, bad)
    with pytest.raises(RepresentationError):
        decode_representation(spec, bad)
    unknown = replace(rep, labels={**rep.labels, root: ("op", "nope")})
    assert any("unknown operation" in d for d in validate_representation(spec, unknown))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_round_trip(seed):
    spec = marked_graph_spec()
    t = random_marked_term(random.Random(seed), 4)
    M = eval_construction(spec, t)
    rep = build_representation(spec, t)
    assert validate_representation(spec, rep) == []
    assert iso_check(M.expanded(), decode_representation(spec, rep).expanded())[0]


def test_campaign():
    r = representation_campaign(marked_graph_spec(), terms=50, seed=3)
    assert r["passed"] and r["predicates"] == r["expected_predicates"] == 6
