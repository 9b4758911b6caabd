"""Seeded verification campaigns.  Every report is plain JSON-able data with no
timings or process-dependent ids, so equal seeds give byte-identical output."""
from __future__ import annotations

import itertools
import json
import random
from collections import defaultdict

from .addition import (
    AdditionOp, Rule, addition_theorem_check, clone_const, const_theory, eval_construction,
)
from .counterexample import (
    QTable, build_phi_dp, build_scheme, choose_p, d_p, exceeds, generate_Nn, oracle_Nn,
)
from .fixtures import GRAPH, random_marked_term
from .representation import build_representation, decode_representation, rep_colors
from .structures import ConstStructure, Structure, iso_check, relabel
from .treeconst import ConsistencyViolation, interp_to_const, lemma_const_probe, static_arity_ok
from .trees import (
    random_db_tree, random_tree, rooted_shapes, shape_tree, wlog_check, wlog_transform,
)


def dumps(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=str)


# ---------------------------------------------------------------------------
# addition theorem

def _random_const(rng: random.Random, n: int, k: int) -> ConstStructure:
    elems = list(range(n))
    edges = [(a, b) for a in elems for b in elems if rng.random() < 0.35]
    S = Structure.build(GRAPH, elems, {"E": edges})
    marks = tuple(rng.sample(elems, k)) if k else ()
    return ConstStructure(S, marks)


def _permuted(rng: random.Random, M: ConstStructure) -> ConstStructure:
    elems = list(M.structure.universe)
    shuffled = elems[:]
    rng.shuffle(shuffled)
    mp = dict(zip(elems, shuffled))
    return ConstStructure(relabel(M.structure, mp), tuple(mp[a] for a in M.marks))


def campaign_ops(seed: int) -> list[AdditionOp]:
    """Operations with at most one mark per side, decided by hashing the key."""
    refl = frozenset({(1, 1)})
    h = lambda i: Rule("hash", seed=seed * 31 + i)
    return [
        AdditionOp(GRAPH, default_rule=h(0), name="h00"),
        AdditionOp(GRAPH, k=1, k1=1, k2=1, A1=frozenset({1}), g1={1: 1}, B1=refl, B2=refl,
                   default_rule=h(1), name="h11"),
        AdditionOp(GRAPH, k=0, k1=1, k2=0, B1=refl, default_rule=h(2), name="h10"),
        AdditionOp(GRAPH, k=1, k1=0, k2=1, A2=frozenset({1}), g2={1: 1}, B2=refl,
                   default_rule=h(3), name="h01"),
    ]


def addition_theorem_campaign(cases: int = 200, q_values=(1, 2), seed: int = 0,
                              max_size: int = 5) -> dict:
    rng = random.Random(seed)
    ops = campaign_ops(seed)
    pools: dict = {}
    for q in q_values:
        for k in (0, 1):
            groups = defaultdict(list)
            for _ in range(60):
                M = _random_const(rng, rng.randint(max(1, k), max_size), k)
                groups[const_theory(M, q).digest].append(M)
            # every class gets an isomorphic copy, so each has a partner
            for members in groups.values():
                members.append(_permuted(rng, members[0]))
            pools[(q, k)] = sorted(groups.values(), key=lambda g: -len(g))
    out = {"cases": 0, "hypothesis_satisfied": 0, "violations": 0, "nontrivial_pairs": 0,
           "by_q": {str(q): 0 for q in q_values}, "by_op": {s.name: 0 for s in ops}, "failures": []}
    i = 0
    while out["hypothesis_satisfied"] < cases:
        q = q_values[i % len(q_values)]
        s = ops[i % len(ops)]
        i += 1
        g1 = rng.choice(pools[(q, s.k1)])
        g2 = rng.choice(pools[(q, s.k2)])
        M, M_ = (clone_const(x) for x in rng.sample(g1, 2))
        N, N_ = (clone_const(x) for x in rng.sample(g2, 2))
        v = addition_theorem_check(s, (M, M_), (N, N_), q)
        out["cases"] += 1
        if not v.hypothesis:
            continue
        out["hypothesis_satisfied"] += 1
        out["by_q"][str(q)] += 1
        out["by_op"][s.name] += 1
        if not (iso_check(M.expanded(), M_.expanded())[0] and iso_check(N.expanded(), N_.expanded())[0]):
            out["nontrivial_pairs"] += 1
        if not v.holds:
            out["violations"] += 1
            out["failures"].append({"op": s.name, "q": q, "detail": v.detail})
    out["passed"] = out["violations"] == 0
    out["seed"] = seed
    out["caps"] = {"max_size": max_size, "q": list(q_values)}
    return out


# ---------------------------------------------------------------------------
# trees

def wlog_campaign(scheme, trees: int = 30, max_nodes: int = 8, seed: int = 0) -> dict:
    rng = random.Random(seed)
    c2 = wlog_transform(scheme)
    rows = []
    for _ in range(trees):
        T = random_tree(rng, rng.randint(1, max_nodes), scheme.k2)
        ok, size, expect = wlog_check(scheme, T, c2)
        rows.append({"nodes": len(T), "iso": ok, "size": size, "expected_size": expect})
    fails = sum(1 for r in rows if not r["iso"] or r["size"] != r["expected_size"])
    return {"trees": trees, "failures": fails, "passed": fails == 0, "rows": rows, "seed": seed,
            "caps": {"max_nodes": max_nodes}}


def representation_campaign(spec, terms: int = 50, depth: int = 4, seed: int = 0) -> dict:
    rng = random.Random(seed)
    rows = []
    for _ in range(terms):
        t = random_marked_term(rng, depth)
        M = eval_construction(spec, t)
        D = decode_representation(spec, build_representation(spec, t))
        rows.append({"term": str(t), "iso": iso_check(M.expanded(), D.expanded())[0]})
    count = len(rep_colors(spec))
    expected = len(spec.bases) + len(spec.ops) + spec.k_star + 2
    fails = sum(1 for r in rows if not r["iso"])
    return {"terms": terms, "failures": fails, "predicates": count, "expected_predicates": expected,
            "passed": fails == 0 and count == expected, "rows": rows, "seed": seed}


def lemma_const_campaign(trees: int = 60, max_leaves: int = 7, seed: int = 0, q: int = 1) -> dict:
    rng = random.Random(seed)
    ts = [random_db_tree(rng, max_leaves, 3) for _ in range(trees)]
    r = lemma_const_probe(ts, q=q, rng=rng)
    d = r.to_dict()
    d.update(passed=r.passed and r.matching_pairs >= 100, seed=seed, q=q,
             caps={"trees": trees, "max_leaves": max_leaves})
    return d


def main_theorem_campaign(scheme, trees: int = 30, max_leaves: int = 7, seed: int = 0,
                          q: int = 1, replay: bool = True) -> dict:
    rng = random.Random(seed)
    K = interp_to_const(scheme, q)
    rows = []
    loud = 0
    for _ in range(trees):
        T = random_db_tree(rng, max_leaves, scheme.k2)
        try:
            ok = K.check(T, replay=replay)
            rows.append({"leaves": len(T.leaves), "iso": ok})
        except ConsistencyViolation as e:
            loud += 1
            rows.append({"leaves": len(T.leaves), "iso": False, "violation": str(e)[:200]})
    fails = sum(1 for r in rows if not r["iso"])
    arity_ok = static_arity_ok(K)
    return {"trees": trees, "failures": fails, "loud_failures": loud, "aux_arity": K.aux_arity(),
            "static_arity_ok": arity_ok, "compiled": K.to_dict(),
            "passed": fails == 0 and loud == 0 and arity_ok, "rows": rows, "seed": seed,
            "caps": {"max_leaves": max_leaves, "q": q}}


# ---------------------------------------------------------------------------
# counterexample

def residue_sweep(trees: int = 200, max_nodes: int = 15, moduli=(2, 3), seed: int = 0,
                  exhaustive_nodes: int = 10) -> dict:
    """Every rooted shape with at most exhaustive_nodes nodes, then random larger trees."""
    rng = random.Random(seed)
    formulas = {p: [build_phi_dp(i, p) for i in range(p)] for p in moduli}
    pairs = bad = 0
    lo = min(exhaustive_nodes + 1, max_nodes)
    sample = [shape_tree(s) for n in range(1, exhaustive_nodes + 1) for s in rooted_shapes(n)]
    shapes = len(sample)
    sample += [random_tree(rng, rng.randint(lo, max_nodes), 0) for _ in range(trees)]
    for T in sample:
        ck = T.checker
        for x, y in itertools.product(T.leaves, repeat=2):
            for p in moduli:
                want = d_p(T, x, y, p)
                got = [ck.check(f, {"x": x, "y": y}) for f in formulas[p]]
                pairs += 1
                if got != [i == want for i in range(p)]:
                    bad += 1
    return {"pairs": pairs, "discrepancies": bad, "passed": bad == 0, "seed": seed,
            "exhaustive_shapes": shapes,
            "caps": {"exhaustive_nodes": exhaustive_nodes, "random_trees": trees,
                     "max_nodes": max_nodes, "moduli": list(moduli)}}


def counterexample_campaign(seed: int = 0) -> dict:
    sweep = residue_sweep(seed=seed)
    qt = QTable.random(2, seed)
    N = generate_Nn(2, build_scheme(2, qt))
    oracle = oracle_Nn(2, 2, qt)
    p4, pbig = choose_p(4), choose_p(2 ** 16)
    minimal = exceeds(pbig, 2 ** 16) and not exceeds(pbig - 1, 2 ** 16)
    nn_ok = set(N.rel("R")) == oracle
    return {"sweep": sweep, "N2_matches_oracle": nn_ok, "N2_size": len(N.universe),
            "N2_tuples": len(oracle), "q": qt.to_dict(), "choose_p_4": p4,
            "choose_p_2^16": pbig, "choose_p_2^16_minimal": minimal,
            "passed": sweep["passed"] and nn_ok and p4 == 7 and minimal, "seed": seed}


__all__ = [
    "addition_theorem_campaign", "campaign_ops", "counterexample_campaign", "dumps",
    "lemma_const_campaign", "main_theorem_campaign", "representation_campaign", "residue_sweep",
    "wlog_campaign",
]
