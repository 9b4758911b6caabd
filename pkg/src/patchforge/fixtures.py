"""Small ready-made classes and schemes used by the tests, campaigns and CLI."""
from __future__ import annotations

import random

from .addition import (
    COPY, AdditionOp, ConstructibleSpec, ConstructionTerm, Rule, Table, cadd, cleaf,
)
from .mso import parse
from .structures import ConstStructure, Structure, Vocabulary
from .trees import InterpScheme

GRAPH = Vocabulary.of(("E", 2))
ORDER = Vocabulary.of(("lt", 2))


def linear_order_spec() -> ConstructibleSpec:
    """Finite linear orders: one point, closed under concatenation."""
    pt = ConstStructure(Structure.build(ORDER, [0], {}), ())
    before = Table(rule=Rule("const", value=True))
    after = Table(rule=Rule("const", value=False))
    cat = AdditionOp(ORDER, tables={("lt", (1,), (2,)): before, ("lt", (2,), (1,)): after},
                     default_rule=COPY, name="cat")
    return ConstructibleSpec(ORDER, ORDER, {"pt": pt}, {"cat": cat}, 2, 0, "linear-orders")


def linear_order_term(n: int) -> ConstructionTerm:
    t = cleaf("pt")
    for _ in range(n - 1):
        t = cadd("cat", t, cleaf("pt"))
    return t


def marked_graph_spec(seed: int = 7) -> ConstructibleSpec:
    """Graphs with one marked vertex: two bases, one joining operation.

    ``join`` keeps the first operand's mark, forgets the second one's, and
    decides edges across the two operands with a fixed hash rule.
    """
    v = ConstStructure(Structure.build(GRAPH, [0], {}), (0,))
    e = ConstStructure(Structure.build(GRAPH, [0, 1], {"E": [(0, 1), (1, 0)]}), (0,))
    refl = frozenset({(1, 1)})
    mixed = Table(rule=Rule("hash", seed=seed))
    join = AdditionOp(GRAPH, k=1, k1=1, k2=1, A1=frozenset({1}), g1={1: 1},
                      B1=refl, B2=refl,
                      tables={("E", (1,), (2,)): mixed, ("E", (2,), (1,)): mixed},
                      default_rule=COPY, name="join")
    return ConstructibleSpec(GRAPH, GRAPH, {"v": v, "e": e}, {"join": join}, 2, 1, "marked-graphs")


def random_marked_term(rng: random.Random, depth: int = 3) -> ConstructionTerm:
    if depth <= 0 or rng.random() < 0.3:
        return cleaf(rng.choice(["v", "e"]))
    return cadd("join", random_marked_term(rng, depth - 1), random_marked_term(rng, depth - 1))


def sample_scheme() -> InterpScheme:
    """A k1=1 scheme mixing first-order and set quantifiers."""
    return InterpScheme(
        GRAPH, 1, 1,
        (parse("(P1 x)"), parse("(exists y (and (le x y) (not (= x y))))")),
        {("E", (0, 0)): parse("(and (le x1 x2) (not (= x1 x2)))"),
         ("E", (0, 1)): parse("(not (= x1 x2))"),
         ("E", (1, 1)): parse("(exists-set X (and (in x1 X) (not (in x2 X)) "
                              "(forall z (implies (in z X) (le x2 z)))))"),
         ("E", (1, 0)): parse("(le x2 x1)")},
        False, "sample")


LEAF = "(not (exists y (and (le x y) (not (= x y)))))"


def leaf_scheme() -> InterpScheme:
    """k1=0 scheme with the leaf property: marked leaves, edges through a P3 ancestor."""
    return InterpScheme(
        GRAPH, 0, 3,
        (parse(f"(and {LEAF} (P3 x))"),),
        {("E", (0, 0)): parse("(and (not (= x1 x2)) "
                              "(exists z (and (P3 z) (le z x1) (le z x2))))")},
        True, "leaf-edges")


def singleton_union_spec() -> "PWClassSpec":
    """Disjoint unions of a single point: the class of all finite sets."""
    from .patchwidth import PWClassSpec
    V = Vocabulary()
    pt = Structure.build(V.with_colors(1), [0], {"P1": [(0,)]})
    return PWClassSpec(V, "colored", 1, Vocabulary(), {"pt": pt}, (), "singleton-unions")


EVEN_ORDER = ("(exists-set X (and "
              "(forall x (implies (not (exists y (lt y x))) (in x X))) "
              "(forall x (implies (not (exists y (lt x y))) (not (in x X)))) "
              "(forall x (forall y (implies (and (lt x y) (not (exists z (and (lt x z) (lt z y))))) "
              "(iff (in x X) (not (in y X))))))))")


def colored_graph_pw_spec() -> "PWClassSpec":
    """2-colored graphs built from points and an edge, with one edge-adding modification."""
    from .patchwidth import PWClassSpec
    V = GRAPH.with_colors(2)
    p1 = Structure.build(V, [0], {"P1": [(0,)]})
    p2 = Structure.build(V, [0], {"P2": [(0,)]})
    e = Structure.build(V, [0, 1], {"P1": [(0,)], "P2": [(1,)], "E": [(0, 1)]})
    pool = (("E", parse("(or (E x1 x2) (and (P1 x1) (P2 x2)))")),
            ("E", parse("(and (E x1 x2) (not (= x1 x2)))")))
    return PWClassSpec(GRAPH, "colored", 2, Vocabulary(), {"p1": p1, "p2": p2, "e": e}, pool,
                       "colored-graphs")


def aux_const_spec(seed: int = 3) -> ConstructibleSpec:
    """Mark-free class over E with a unary helper U; cross edges follow a hash rule."""
    plus = Vocabulary.of(("E", 2), ("U", 1))
    a = ConstStructure(Structure.build(plus, [0], {"U": [(0,)]}), ())
    b = ConstStructure(Structure.build(plus, [0, 1], {"E": [(0, 1)]}), ())
    mixed = Table(rule=Rule("hash", seed=seed))
    glue = AdditionOp(plus, tables={("E", (1,), (2,)): mixed, ("E", (2,), (1,)): mixed},
                      default_rule=COPY, name="glue")
    flip = AdditionOp(plus, tables={("U", (1,), ()): Table(rule=Rule("formula", parse("(not (U x1))")))},
                      default_rule=COPY, name="flip")
    return ConstructibleSpec(GRAPH, plus, {"a": a, "b": b}, {"glue": glue, "flip": flip}, 2, 0,
                             "aux-graphs")
