import random
from dataclasses import replace

import pytest

from patchforge.addition import (
    AdditionOp, ConstructibleSpec, Rule, Table, cadd, cleaf, cnull, eval_construction, random_cterm,
)
from patchforge.fixtures import GRAPH, aux_const_spec, colored_graph_pw_spec, marked_graph_spec
from patchforge.patchwidth import eval_term, leaf, recolor_term, union
from patchforge.structures import ConstStructure, Structure, Vocabulary, iso_check, reduct
from patchforge.translators import (
    TranslationError, const_to_pw, pw_to_const, roundtrip_verify, verify_const_to_pw,
    verify_pw_to_const,
)


def test_leaf_translates_to_leaf():
    spec = colored_graph_pw_spec()
    tr = pw_to_const(spec)
    assert tr.translate(leaf("e")) == cleaf("e")
    assert set(tr.target.bases) == set(spec.bases)
    for n, B in spec.bases.items():
        assert tr.target.bases[n].structure == B


def test_recolor_becomes_sum_with_null():
    spec = colored_graph_pw_spec()
    tr = pw_to_const(spec)
    t = recolor_term(1, 2, leaf("e"))
    ct = tr.translate(t)
    assert ct == cadd("rho_1_2", cleaf("e"), cnull())
    assert iso_check(eval_term(spec, t), eval_construction(tr.target, ct).structure)[0]


def test_union_becomes_disjoint_sum():
    tr = pw_to_const(colored_graph_pw_spec())
    assert tr.translate(union(leaf("p1"), leaf("p2"))) == cadd("s_u", cleaf("p1"), cleaf("p2"))


def test_pw_to_const_sample_and_empty_sample():
    spec = colored_graph_pw_spec()
    assert roundtrip_verify(spec, 40, seed=1).passed
    empty = verify_pw_to_const(spec, [])
    assert empty.passed and empty.samples == []


def two_aux_spec():
    plus = Vocabulary.of(("E", 2), ("A", 2), ("U", 1))
    b = ConstStructure(Structure.build(plus, [0, 1], {"E": [(0, 1)], "A": [(1, 0)], "U": [(0,)]}), ())
    mix = Table(rule=Rule("hash", seed=5))
    op = AdditionOp(plus, tables={("A", (1,), (2,)): mix, ("E", (2,), (1,)): mix}, name="mix")
    return ConstructibleSpec(GRAPH, plus, {"b": b}, {"mix": op}, 2, 0, "two-aux")


def test_k_prime_with_two_auxiliary_symbols():
    spec = two_aux_spec()
    tr = const_to_pw(spec)
    assert tr.k_prime == 2 * (2 + 1) + 2 == 8
    r = roundtrip_verify(spec, 30, seed=2)
    assert r.metrics["k_prime"] == r.metrics["expected_k_prime"] == 8
    assert r.passed


def test_residual_symbols_are_reported():
    r = roundtrip_verify(aux_const_spec(), 10, seed=0)
    assert r.passed
    assert set(r.residual_symbols) == {"E'", "U'", "P1", "P2"}


def test_disjoint_sum_of_two_points():
    V = GRAPH
    pt = ConstStructure(Structure.build(V, [0]), ())
    spec = ConstructibleSpec(V, V, {"pt": pt}, {"s_u": AdditionOp.disjoint_sum(V)}, 2, 0, "points")
    tr = const_to_pw(spec)
    pt_term = tr.translate(cadd("s_u", cleaf("pt"), cleaf("pt")))
    M = reduct(eval_term(tr.target, pt_term), V)
    assert len(M) == 2 and not M.rel("E")
    r = roundtrip_verify(spec, 20, seed=0)
    assert r.passed and r.metrics["k_prime"] == 4


def test_corrupted_reference_is_caught():
    spec = aux_const_spec()
    glue = spec.ops["glue"]
    bad_table = Table(rule=Rule("hash", seed=99))
    corrupted = replace(glue, tables={k: bad_table for k in glue.tables})
    reference = replace(spec, ops={**spec.ops, "glue": corrupted})
    rng = random.Random(0)
    terms = [random_cterm(spec, rng, 3, ops=["glue"]) for _ in range(40)]
    r = verify_const_to_pw(spec, terms, reference=reference)
    assert r.failures > 0


def test_marks_are_rejected():
    with pytest.raises(TranslationError):
        const_to_pw(marked_graph_spec())


def test_pw_to_const_then_back():
    spec = colored_graph_pw_spec()
    const = pw_to_const(spec).target
    r = roundtrip_verify(const, 30, seed=4)
    assert r.passed and r.metrics["k_prime"] == 8
