"""Monadic interpretations in DB trees as constructions over maximal elements.

The correct extension of a DB tree adds, on maximal nodes, relations that
record how pairs and triples of leaves sit in the tree: which successor of a
meet leads to another meet, and the rank-q characteristics of the segments
between meets.  Restricted to a set A of maximal nodes this gives a
tau+-structure.  Two kinds of operation act on such structures:

* ``s_u`` joins two trees under a fresh root of color u;
* ``s*`` redefines each target relation from the quantifier-free type of a
  tuple in A.

Both are evaluated semantically, from the host tree each leaf structure
carries, and every decision is recorded under its quantifier-free key.  A key
that is later seen with a different value means the operation is not a
function of quantifier-free types; that raises ``ConsistencyViolation``.
"""
from __future__ import annotations

import itertools
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .addition import _sigma_type
from .mso import characteristic, xvars
from .structures import (
    Structure, Vocabulary, fresh_id, iso_check, qf_type, reduct, relabel,
)
from .trees import (
    InterpScheme, Tree, TreeError, half, interpret, k_colors, leaf_property_holds, t3,
    y_set,
)

DB = ("P1", "P2")
FIXED_AUX = (("RR", 3), ("RL", 3), ("RRrt", 2), ("RLrt", 2))


class ConsistencyViolation(RuntimeError):
    """An operation gave two values for one quantifier-free key."""


class LeafPropertyViolation(ValueError):
    pass


# ---------------------------------------------------------------------------
# correct extension

def _seg_type(T: Tree, nodes: set, consts: tuple, q: int) -> str:
    S = _induced(T, nodes)
    return characteristic(S, consts, q).digest


def _induced(T: Tree, nodes: set) -> Structure:
    from .structures import restrict
    return restrict(T.structure, nodes)


class CorrectTree:
    """Correct-extension relations of a DB tree, computed on demand."""

    def __init__(self, T: Tree, q: int = 1):
        if not T.is_db(DB):
            raise TreeError("correct extensions need a DB tree")
        self.T, self.q = T, q
        self._seg: dict = {}
        self._halves = None

    def segment_type(self, y, y2) -> str:
        key = (y, y2)
        d = self._seg.get(key)
        if d is None:
            d = _seg_type(self.T, t3(self.T, y, y2), (y, y2), self.q)
            self._seg[key] = d
        return d

    def halves(self) -> tuple[str, str]:
        if self._halves is None:
            T = self.T
            self._halves = tuple(_seg_type(T, half(T, side, DB), (T.root,), self.q)
                                 for side in ("R", "L"))
        return self._halves

    def _below(self, top, y, color) -> bool:
        """y lies strictly below top, on the side of top's successor in color."""
        c = self.T.child_in(top, color)
        return c is not None and self.T.le(c, y)

    def leaf_structure(self, A: Iterable) -> Structure:
        """The tau+-structure on A (a set of maximal nodes)."""
        T = self.T
        A = [x for x in T.nodes if x in set(A)]
        for x in A:
            if not T.is_maximal(x):
                raise TreeError(f"{x!r} is not maximal")
        rels: dict = defaultdict(set)
        symbols = dict(FIXED_AUX)
        # tree vocabulary restricted to A
        rels["le"] = {(x, x) for x in A}
        rels["rt"] = {(x,) for x in A if x == T.root}
        for c in T.color_names:
            rels[c] = {(x,) for x in A if x in T.colors[c]}
        hr, hl = self.halves()
        symbols[f"RR0_{hr}"] = 0
        symbols[f"RL0_{hl}"] = 0
        rels[f"RR0_{hr}"] = True
        rels[f"RL0_{hl}"] = True
        for x1, x2 in itertools.product(A, repeat=2):
            y = T.meet(x1, x2)
            name = f"R2_{self.segment_type(T.root, y)}"
            symbols[name] = 2
            rels[name].add((x1, x2))
            if y != T.root:
                if self._below(T.root, y, DB[0]):
                    rels["RRrt"].add((x1, x2))
                if self._below(T.root, y, DB[1]):
                    rels["RLrt"].add((x1, x2))
            for x3 in A:
                y2 = T.meet(y, x3)
                name = f"R3_{self.segment_type(y2, y)}"
                symbols[name] = 3
                rels[name].add((x1, x2, x3))
                if y2 != y:
                    if self._below(y2, y, DB[0]):
                        rels["RR"].add((x1, x2, x3))
                    if self._below(y2, y, DB[1]):
                        rels["RL"].add((x1, x2, x3))
        vocab = T.vocabulary.union(Vocabulary(tuple(sorted(symbols.items()))))
        return Structure.build(vocab, A, dict(rels))


def correct_vocabulary(structures: Iterable[Structure], base: Vocabulary | None = None) -> Vocabulary:
    """Union of the realized symbols: the tau+ inventory of a sample."""
    out = base or Vocabulary()
    for S in structures:
        out = out.union(S.vocabulary)
    return out


# ---------------------------------------------------------------------------
# joining trees

def oplus(T1: Tree, T2: Tree, u: Iterable[str]) -> Tree:
    """Fresh root colored u; T1's root becomes the P1 successor, T2's the P2 one."""
    if set(T1.nodes) & set(T2.nodes):
        raise TreeError("trees must be disjoint")
    u = frozenset(u)
    names = tuple(sorted(set(T1.color_names) | set(T2.color_names) | u | set(DB),
                         key=lambda c: (len(c), c)))
    if u & set(DB):
        raise TreeError("root color may not include P1 or P2")
    c = ("root", fresh_id())
    parent = {**T1.parent, **T2.parent, T1.root: c, T2.root: c}
    colors = {n: set(T1.colors.get(n, ())) | set(T2.colors.get(n, ())) for n in names}
    colors[DB[0]].add(T1.root)
    colors[DB[1]].add(T2.root)
    for n in u:
        colors[n].add(c)
    return Tree.build(parent, c, colors, names, [c] + list(T1.nodes) + list(T2.nodes))


def singleton_tree(x, colors: Iterable[str], color_names: tuple) -> Tree:
    cs = {n: ({x} if n in set(colors) else set()) for n in color_names}
    return Tree.build({}, x, cs, color_names, [x])


@dataclass
class LeafModel:
    """A leaf restriction together with the host tree it came from."""
    host: Tree
    A: frozenset
    q: int = 1

    @property
    def structure(self) -> Structure:
        return CorrectTree(self.host, self.q).leaf_structure(self.A)


class SemanticOp:
    """Records decisions under (R, w1, w2, p, q1, q2) keys and checks they never clash."""

    def __init__(self, name: str):
        self.name = name
        self.table: dict = {}
        self.checks = 0

    def record(self, key, value: bool, where: str = ""):
        self.checks += 1
        old = self.table.setdefault(key, value)
        if old != value:
            raise ConsistencyViolation(f"{self.name}: key {key!r} decided both ways {where}")

    def audit(self, M1: Structure, M2: Structure, out: Structure, tag=()) -> None:
        """Register every decision of out = M1 (+) M2 under its qf key."""
        U1, U2 = M1.elements, M2.elements
        cache: dict = {}

        def qt(M, xs):
            k = (id(M), xs)
            t = cache.get(k)
            if t is None:
                t = qf_type(xs, M).key
                cache[k] = t
            return t

        for R, n in out.vocabulary.symbols:
            if n == 0:
                key = (tag, R, (), (), _sigma_type((), (), U1, U2), qt(M1, ()), qt(M2, ()))
                self.record(key, bool(out.relations[R]))
                continue
            rel = out.relations[R]
            for xs in itertools.product(out.universe, repeat=n):
                w1 = tuple(i for i in range(1, n + 1) if xs[i - 1] in U1)
                w2 = tuple(i for i in range(1, n + 1) if xs[i - 1] in U2)
                p = _sigma_type(xs, (), U1, U2)
                key = (tag, R, w1, w2, p,
                       qt(M1, tuple(xs[i - 1] for i in w1)), qt(M2, tuple(xs[i - 1] for i in w2)))
                self.record(key, xs in rel)


def s_u(u: Iterable[str], L1: LeafModel, L2: LeafModel, audit: SemanticOp | None = None) -> LeafModel:
    host = oplus(L1.host, L2.host, u)
    out = LeafModel(host, L1.A | L2.A, L1.q)
    if audit is not None:
        audit.audit(L1.structure, L2.structure, out.structure, tag=tuple(sorted(u)))
    return out


def lemma_ind_replay(T: Tree, A: Iterable, q: int = 1, audit: SemanticOp | None = None) -> tuple[bool, Structure]:
    """Rebuild T restricted to A from singleton models with s_u; compare with the direct restriction."""
    A = frozenset(A)
    names = T.color_names

    def go(t) -> LeafModel:
        cs = [n for n in T.color_set(t) if n not in DB]
        if T.is_maximal(t):
            return LeafModel(singleton_tree(t, cs, names), A & {t}, q)
        a, b = T.child_in(t, DB[0]), T.child_in(t, DB[1])
        return s_u(cs, go(a), go(b), audit)

    built = go(T.root).structure
    direct = CorrectTree(T, q).leaf_structure(A)
    same = (built.vocabulary == direct.vocabulary and built.elements == direct.elements
            and all(built.relations[n] == direct.relations[n] for n in built.vocabulary.names))
    return same, built


# ---------------------------------------------------------------------------
# s* and the pipeline

class SStar:
    """Redefines each target relation from the quantifier-free type of the tuple.

    The first host tree realizing a type is its witness; every later
    occurrence of the type must agree with it.
    """

    def __init__(self, c: InterpScheme):
        if c.k1 != 0:
            raise ValueError("s* needs a scheme with k1 = 0")
        self.c = c
        self.op = SemanticOp("s*")
        self.witness: dict = {}

    def apply(self, L: LeafModel, S: Structure | None = None) -> Structure:
        S = S if S is not None else L.structure
        ck = L.host.checker
        rels = {}
        for R, n in self.c.tau.symbols:
            phi = self.c.rel(R, (0,) * n)
            names = xvars(n)
            if n == 0:
                val = ck.check(phi, {})
                key = (R, qf_type((), S).key)
                self._note(key, val, L)
                rels[R] = val
                continue
            table = set()
            for xs in itertools.product(S.universe, repeat=n):
                val = ck.check(phi, dict(zip(names, xs)))
                self._note((R, qf_type(xs, S).key), val, L)
                if val:
                    table.add(xs)
            rels[R] = table
        V = S.vocabulary.union(self.c.tau)
        out = Structure.build(V, S.universe, {**{n: S.relations[n] for n in S.vocabulary.names}, **rels})
        return out

    def _note(self, key, val, L):
        self.witness.setdefault(key, L.host)
        self.op.record(key, val, "(s* type with two witnesses)")


@dataclass
class TreeConstClass:
    """The constructible class extracted from a leaf-property scheme."""
    c: InterpScheme
    q: int
    tau_plus: Vocabulary = field(default_factory=Vocabulary)
    bases: list = field(default_factory=list)
    s_star: SStar | None = None
    s_u_audit: SemanticOp = field(default_factory=lambda: SemanticOp("s_u"))

    @property
    def operations(self) -> list[str]:
        rest = k_colors(self.c.k2)[2:]
        subsets = [()] + [u for r in range(1, len(rest) + 1) for u in itertools.combinations(rest, r)]
        return [f"s_u{{{','.join(u)}}}" for u in subsets] + ["s*"]

    def aux_arity(self) -> int:
        aux = [a for n, a in self.tau_plus.symbols if n not in self.c.tau]
        return max(aux, default=0)

    def leaf_set(self, T: Tree) -> frozenset:
        ck = T.checker
        A = frozenset(t for t in T.nodes if ck.check(self.c.eq_formulas[0], {"x": t}))
        bad = [t for t in A if not T.is_maximal(t)]
        if bad:
            raise LeafPropertyViolation(f"non-maximal nodes {bad!r} satisfy the universe formula")
        return A

    def pipeline(self, T: Tree, replay: bool = False) -> Structure:
        """Correct-extend T, restrict to the universe leaves, apply s*, keep tau."""
        A = self.leaf_set(T)
        L = LeafModel(T, A, self.q)
        S = L.structure
        if replay:
            ok, _ = lemma_ind_replay(T, A, self.q, self.s_u_audit)
            if not ok:
                raise ConsistencyViolation("replaying the tree with s_u gave a different structure")
        self.tau_plus = self.tau_plus.union(S.vocabulary)
        out = self.s_star.apply(L, S)
        return reduct(out, self.c.tau)

    def check(self, T: Tree, replay: bool = True) -> bool:
        got = self.pipeline(T, replay)
        want = interpret(self.c, T)
        want = relabel(want, {e: e[0] for e in want.universe})
        return iso_check(got, want)[0]

    def to_dict(self) -> dict:
        return {
            "scheme": self.c.name,
            "q": self.q,
            "operations": self.operations,
            "bases": "singleton correct models and Null structures",
            "aux_symbols": len([n for n in self.tau_plus.names if n not in self.c.tau]),
            "aux_arity": self.aux_arity(),
            "s_star_keys": len(self.s_star.op.table),
            "s_u_keys": len(self.s_u_audit.table),
        }


def interp_to_const(c: InterpScheme, q: int = 1, samples: Iterable[Tree] = ()) -> TreeConstClass:
    if c.k1 != 0:
        raise ValueError("normalize the scheme to k1 = 0 first")
    if not c.leaf_property:
        raise LeafPropertyViolation("scheme does not declare the leaf property")
    K = TreeConstClass(c, q, s_star=SStar(c))
    for T in samples:
        if not leaf_property_holds(c, T):
            raise LeafPropertyViolation("leaf property fails on a sample tree")
        K.pipeline(T)
    return K


def static_arity_ok(K: TreeConstClass) -> bool:
    base = [a for _, a in FIXED_AUX]
    return max(base) <= 3 and K.aux_arity() <= 3


# ---------------------------------------------------------------------------
# determinism probe for the decomposition data

def decomposition_signature(T: Tree, xs: tuple, q: int = 1) -> str:
    """Y with its order, successor sides, segment types and half types, named by xs."""
    Y = y_set(T, xs)

    def ychildren(y):
        out = []
        for side, color in (("R", DB[0]), ("L", DB[1])):
            c = T.child_in(y, color)
            if c is None:
                continue
            sub = [z for z in Y if z != y and T.le(c, z)]
            tops = [z for z in sub if not any(w != z and T.le(w, z) for w in sub)]
            for z in tops:
                out.append((side, z))
        return out

    def enc(y):
        here = tuple(i for i, x in enumerate(xs) if x == y)
        kids = tuple((side, _seg_type(T, t3(T, y, z), (y, z), q), enc(z)) for side, z in ychildren(y))
        return (here, kids)

    halves = tuple(_seg_type(T, half(T, s, DB), (T.root,), q) for s in ("R", "L"))
    return repr((enc(T.root), halves))


@dataclass
class ProbeReport:
    samples: int
    matching_pairs: int
    violations: int
    examples: list

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"samples": self.samples, "matching_pairs": self.matching_pairs,
                "violations": self.violations, "examples": self.examples[:5]}


def lemma_const_probe(trees: Iterable[Tree], arities=(1, 2), q: int = 1,
                      rng: random.Random | None = None, per_tree: int = 6) -> ProbeReport:
    rng = rng or random.Random(0)
    groups: dict = defaultdict(list)
    n = 0
    for T in trees:
        L = T.leaves
        for _ in range(per_tree):
            k = rng.choice(arities)
            xs = tuple(rng.choice(L) for _ in range(k))
            sig = decomposition_signature(T, xs, q)
            ch = characteristic(T.structure, xs, q).digest
            groups[(k, sig)].append((ch, T, xs))
            n += 1
    pairs = viol = 0
    examples = []
    for (k, sig), items in groups.items():
        counts = Counter(ch for ch, _, _ in items)
        m = len(items)
        pairs += m * (m - 1) // 2
        bad = m * (m - 1) // 2 - sum(v * (v - 1) // 2 for v in counts.values())
        viol += bad
        if bad:
            examples.append({"arity": k, "types": len(counts)})
    return ProbeReport(n, pairs, viol, examples)


__all__ = [
    "ConsistencyViolation", "CorrectTree", "LeafModel", "LeafPropertyViolation", "ProbeReport",
    "SStar", "SemanticOp", "TreeConstClass", "correct_vocabulary", "decomposition_signature",
    "interp_to_const", "lemma_const_probe", "lemma_ind_replay", "oplus", "s_u", "singleton_tree",
    "static_arity_ok",
]
