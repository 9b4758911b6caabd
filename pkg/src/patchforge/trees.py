"""Rooted trees as structures, interpretation schemes, and the k1=0 normalization.

Trees are ordered root-minimal: ``le(a, b)`` holds when a is an ancestor of b
or equal to it.  The root constant is the unary predicate ``rt``.  The meet
of two nodes is their deepest common ancestor.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .mso import (
    FALSE, And, Atom, Checker, Eq, Exists, Forall, Formula, Implies, NameSupply, Not,
    conj, disj, exactly, parse, relativize, substitute, to_text, xvars,
)
from .mso.formula import all_vars
from .structures import Structure, Vocabulary, iso_check

LE, RT = "le", "rt"


class TreeError(ValueError):
    pass


def tree_vocabulary(color_names: Iterable[str]) -> Vocabulary:
    return Vocabulary(((LE, 2), (RT, 1)) + tuple((c, 1) for c in color_names))


def k_colors(k: int) -> tuple[str, ...]:
    return tuple(f"P{i}" for i in range(1, k + 1))


@dataclass(frozen=True, eq=False)
class Tree:
    nodes: tuple
    parent: Mapping                 # child -> parent; the root has no entry
    root: object
    colors: Mapping[str, frozenset] = field(default_factory=dict)
    color_names: tuple[str, ...] = ()
    attrs: Mapping = field(default_factory=dict)

    @classmethod
    def build(cls, parent: Mapping, root, colors: Mapping | None = None,
              color_names: Iterable[str] | None = None, nodes: Iterable | None = None,
              attrs: Mapping | None = None) -> "Tree":
        colors = {c: frozenset(v) for c, v in (colors or {}).items()}
        if color_names is None:
            color_names = sorted(colors, key=_color_sort)
        color_names = tuple(color_names)
        for c in color_names:
            colors.setdefault(c, frozenset())
        if nodes is None:
            nodes = [root] + [x for x in parent if x != root]
        T = cls(tuple(nodes), dict(parent), root, colors, color_names, dict(attrs or {}))
        problems = T.diagnostics()
        if problems:
            raise TreeError("; ".join(problems))
        return T

    def diagnostics(self) -> list[str]:
        out = []
        ns = set(self.nodes)
        if len(ns) != len(self.nodes):
            out.append("duplicate nodes")
        if self.root not in ns:
            out.append("root not a node")
        if self.root in self.parent:
            out.append("root has a parent")
        for x in self.nodes:
            if x != self.root and x not in self.parent:
                out.append(f"node {x!r} has no parent")
        for c, v in self.colors.items():
            if not v <= ns:
                out.append(f"color {c} outside the tree")
        if not out:
            for x in self.nodes:
                seen = set()
                y = x
                while y != self.root:
                    if y in seen:
                        out.append("parent relation has a cycle")
                        return out
                    seen.add(y)
                    y = self.parent[y]
        return out

    def __len__(self):
        return len(self.nodes)

    @cached_property
    def kids(self) -> dict:
        out = {x: [] for x in self.nodes}
        for c in self.nodes:
            if c in self.parent:
                out[self.parent[c]].append(c)
        return out

    def children(self, x) -> list:
        return self.kids[x]

    def is_maximal(self, x) -> bool:
        return not self.kids[x]

    @cached_property
    def leaves(self) -> list:
        return [x for x in self.nodes if not self.kids[x]]

    @cached_property
    def _anc(self) -> dict:
        out = {}
        for x in self.nodes:
            path = [x]
            while path[-1] != self.root:
                path.append(self.parent[path[-1]])
            out[x] = tuple(reversed(path))      # root .. x
        return out

    def ancestors(self, x) -> tuple:
        """Root-to-x path, x included."""
        return self._anc[x]

    def depth(self, x) -> int:
        return len(self._anc[x]) - 1

    def le(self, a, b) -> bool:
        anc = self._anc[b]
        d = len(self._anc[a]) - 1
        return d < len(anc) and anc[d] == a

    def meet(self, x, y):
        """Deepest common ancestor."""
        ax, ay = self._anc[x], self._anc[y]
        m = self.root
        for a, b in zip(ax, ay):
            if a != b:
                break
            m = a
        return m

    def subtree(self, x) -> set:
        out = set()
        stack = [x]
        while stack:
            y = stack.pop()
            out.add(y)
            stack.extend(self.kids[y])
        return out

    def color_set(self, x) -> frozenset:
        return frozenset(c for c in self.color_names if x in self.colors[c])

    def child_in(self, x, color: str):
        for c in self.kids[x]:
            if c in self.colors.get(color, ()):
                return c
        return None

    def is_db(self, db_colors: tuple[str, str] = ("P1", "P2")) -> bool:
        a, b = db_colors
        A, B = self.colors.get(a, frozenset()), self.colors.get(b, frozenset())
        if self.root in A or self.root in B or A & B:
            return False
        if (A | B) != set(self.nodes) - {self.root}:
            return False
        for x in self.nodes:
            ks = self.kids[x]
            if not ks:
                continue
            if len(ks) != 2:
                return False
            if not ((ks[0] in A and ks[1] in B) or (ks[0] in B and ks[1] in A)):
                return False
        return True

    @cached_property
    def vocabulary(self) -> Vocabulary:
        return tree_vocabulary(self.color_names)

    @cached_property
    def structure(self) -> Structure:
        le = [(a, x) for x in self.nodes for a in self._anc[x]]
        rels = {LE: le, RT: [(self.root,)]}
        for c in self.color_names:
            rels[c] = [(x,) for x in self.colors[c]]
        return Structure.build(self.vocabulary, self.nodes, rels)

    @cached_property
    def checker(self) -> Checker:
        return Checker(self.structure)

    def relabeled(self, mapping: Mapping) -> "Tree":
        f = lambda x: mapping.get(x, x)
        return Tree.build({f(c): f(p) for c, p in self.parent.items()}, f(self.root),
                          {c: {f(x) for x in v} for c, v in self.colors.items()},
                          self.color_names, [f(x) for x in self.nodes],
                          {f(x): v for x, v in self.attrs.items()})

    def to_dict(self) -> dict:
        from .structures import _id_to_json
        j = _id_to_json
        return {
            "nodes": [j(x) for x in self.nodes],
            "parent": {str(c): j(p) for c, p in self.parent.items()},
            "root": j(self.root),
            "colors": {c: sorted((j(x) for x in self.colors[c]), key=repr) for c in self.color_names},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Tree":
        from .structures import _id_from_json, reserve_ids
        g = _id_from_json
        nodes = [g(x) for x in d["nodes"]]
        par = d.get("parent", {})
        items = par.items() if isinstance(par, dict) else par
        parent = {}
        for c, p in items:
            c = g(c)
            if isinstance(par, dict):
                # JSON object keys are strings; map back to node ids
                c = _match_key(c, nodes)
            parent[c] = g(p)
        colors = {c: {g(x) for x in v} for c, v in d.get("colors", {}).items()}
        reserve_ids(nodes)
        return cls.build(parent, g(d["root"]), colors, None, nodes)


def _match_key(key, nodes):
    for x in nodes:
        if x == key or str(x) == key:
            return x
    return key


def _color_sort(c: str):
    head = c.rstrip("0123456789")
    tail = c[len(head):]
    return (head, int(tail) if tail else -1)


# ---------------------------------------------------------------------------
# builders

def complete_binary_tree(n: int, k: int = 2) -> Tree:
    """Complete binary tree of depth n over binary strings; left children in P1, right in P2."""
    nodes = ["".join(b) for d in range(n + 1) for b in itertools.product("01", repeat=d)]
    parent = {x: x[:-1] for x in nodes if x}
    colors = {"P1": {x for x in nodes if x.endswith("0")}, "P2": {x for x in nodes if x.endswith("1")}}
    return Tree.build(parent, "", colors, k_colors(max(k, 2)), nodes)


def random_tree(rng: random.Random, n_nodes: int, k: int = 1, p_color: float = 0.4) -> Tree:
    nodes = list(range(n_nodes))
    parent = {i: rng.randrange(i) for i in range(1, n_nodes)}
    colors = {c: {x for x in nodes if rng.random() < p_color} for c in k_colors(k)}
    return Tree.build(parent, 0, colors, k_colors(k), nodes)


def random_db_tree(rng: random.Random, max_leaves: int, k: int = 2, p_color: float = 0.4,
                   min_leaves: int = 1) -> Tree:
    """Random directed binary tree; colors P3..Pk are sprinkled at random."""
    target = rng.randint(min_leaves, max_leaves)
    parent: dict = {}
    colors = {c: set() for c in k_colors(max(k, 2))}
    leaves = [0]
    nxt = 1
    while len(leaves) < target:
        x = leaves.pop(rng.randrange(len(leaves)))
        a, b = nxt, nxt + 1
        nxt += 2
        parent[a] = parent[b] = x
        colors["P1"].add(a)
        colors["P2"].add(b)
        leaves += [a, b]
    nodes = list(range(nxt))
    for c in k_colors(max(k, 2))[2:]:
        colors[c] = {x for x in nodes if rng.random() < p_color}
    return Tree.build(parent, 0, colors, k_colors(max(k, 2)), nodes)


def db_shapes(max_leaves: int) -> list[Tree]:
    """All DB tree shapes with at most max_leaves leaves, up to isomorphism."""
    shapes_by_n: dict[int, list] = {1: [None]}
    for n in range(2, max_leaves + 1):
        out = []
        seen = set()
        for a in range(1, n):
            for L in shapes_by_n[a]:
                for R in shapes_by_n[n - a]:
                    key = (L, R)
                    if key in seen:
                        continue
                    seen.add(key)
                    out.append(key)
        shapes_by_n[n] = out
    trees = []
    for n in range(1, max_leaves + 1):
        for shape in shapes_by_n[n]:
            trees.append(_shape_tree(shape))
    return trees


def rooted_shapes(n: int) -> list[tuple]:
    """All unlabeled rooted trees with n nodes; a shape is the sorted tuple of child shapes."""
    memo: dict[int, list] = {1: [()]}

    def forests(total: int, cap: tuple | None) -> list:
        # multisets of shapes summing to total, listed in non-increasing order
        if total == 0:
            return [()]
        out = []
        for size in range(total, 0, -1):
            for s in shapes(size):
                if cap is not None and (size, s) > cap:
                    continue
                for rest in forests(total - size, (size, s)):
                    out.append((s,) + rest)
        return out

    def shapes(m: int) -> list:
        if m not in memo:
            memo[m] = [tuple(f) for f in forests(m - 1, None)]
        return memo[m]
    return shapes(n)


def shape_tree(shape: tuple, k: int = 0) -> Tree:
    """Realize a rooted shape with integer nodes in preorder and no colors set."""
    parent = {}
    counter = itertools.count()

    def go(s):
        x = next(counter)
        for c in s:
            parent[go(c)] = x
        return x
    root = go(shape)
    nodes = sorted(set(parent) | {root})
    return Tree.build(parent, root, {}, k_colors(k), nodes)


def _shape_tree(shape) -> Tree:
    parent, colors = {}, {"P1": set(), "P2": set()}
    counter = itertools.count()

    def go(s):
        x = next(counter)
        if s is not None:
            a = go(s[0])
            b = go(s[1])
            parent[a] = parent[b] = x
            colors["P1"].add(a)
            colors["P2"].add(b)
        return x
    root = go(shape)
    nodes = sorted(set(parent) | {root})
    return Tree.build(parent, root, colors, ("P1", "P2"), nodes)


# ---------------------------------------------------------------------------
# maximal tuples: the set Y, segments and halves

def y_set(T: Tree, xs) -> list:
    Y = set(xs) | {T.meet(a, b) for a in xs for b in xs} | {T.root}
    return [x for x in T.nodes if x in Y]


def t3(T: Tree, y, y2) -> set:
    """Segment from ancestor y to y2, plus subtrees hanging off its interior."""
    if y == y2:
        return {y}
    if not T.le(y, y2):
        raise TreeError("segment endpoints must be ordered")
    path = T.ancestors(y2)
    i = path.index(y)
    out = set(path[i:])
    for s, nxt in zip(path[i + 1:-1], path[i + 2:]):
        for c in T.children(s):
            if c != nxt:
                out |= T.subtree(c)
    return out


def half(T: Tree, side: str = "R", db_colors=("P1", "P2")) -> set:
    """T_R (successor in the first DB color) or T_L, with the root."""
    c = T.child_in(T.root, db_colors[0] if side == "R" else db_colors[1])
    return {T.root} | (T.subtree(c) if c is not None else set())


@dataclass
class Segments:
    Y: list
    parent_y: dict           # y -> nearest proper ancestor in Y
    F_R: dict
    F_L: dict
    T3: dict                 # (y, y') -> node set, consecutive Y pairs
    T_R: set
    T_L: set

    def R_R(self, T: Tree, y, y2) -> bool:
        return self.F_R.get(y) is not None and T.le(self.F_R[y], y2)

    def R_L(self, T: Tree, y, y2) -> bool:
        return self.F_L.get(y) is not None and T.le(self.F_L[y], y2)


def segments(T: Tree, xs, db_colors=("P1", "P2")) -> Segments:
    if not T.is_db(db_colors):
        raise TreeError("segments need a DB tree")
    for x in xs:
        if not T.is_maximal(x):
            raise TreeError(f"{x!r} is not maximal")
    Y = y_set(T, xs)
    Ys = set(Y)
    parent_y = {}
    for y in Y:
        if y == T.root:
            continue
        for a in reversed(T.ancestors(y)[:-1]):
            if a in Ys:
                parent_y[y] = a
                break
    F_R = {y: T.child_in(y, db_colors[0]) for y in Y if not T.is_maximal(y)}
    F_L = {y: T.child_in(y, db_colors[1]) for y in Y if not T.is_maximal(y)}
    T3 = {(p, y): t3(T, p, y) for y, p in parent_y.items()}
    return Segments(Y, parent_y, F_R, F_L, T3, half(T, "R", db_colors), half(T, "L", db_colors))


# ---------------------------------------------------------------------------
# interpretation schemes

@dataclass(frozen=True)
class InterpScheme:
    tau: Vocabulary
    k1: int
    k2: int
    eq_formulas: tuple[Formula, ...]                 # phi_{=,l}(x), l = 0..k1
    rel_formulas: Mapping[tuple, Formula] = field(default_factory=dict)   # (R, eta) -> phi(x1..xn)
    leaf_property: bool = False
    name: str = "c"

    def rel(self, R: str, eta: tuple) -> Formula:
        return self.rel_formulas.get((R, tuple(eta)), FALSE)

    @property
    def tree_colors(self) -> tuple[str, ...]:
        return k_colors(self.k2)

    def max_rank(self) -> int:
        from .mso import qdepth
        return max([qdepth(f) for f in self.eq_formulas] +
                   [qdepth(f) for f in self.rel_formulas.values()] + [0])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "tau": [list(s) for s in self.tau.symbols],
            "k1": self.k1, "k2": self.k2,
            "eq": [to_text(f) for f in self.eq_formulas],
            "rel": [[R, list(eta), to_text(f)] for (R, eta), f in sorted(self.rel_formulas.items(),
                                                                        key=lambda kv: repr(kv[0]))],
            "leaf_property": self.leaf_property,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "InterpScheme":
        tau = Vocabulary.of(*[tuple(x) for x in d["tau"]])
        rels = {(R, tuple(eta)): parse(text) for R, eta, text in d.get("rel", [])}
        return cls(tau, int(d.get("k1", 0)), int(d.get("k2", 0)),
                   tuple(parse(t) for t in d["eq"]), rels, bool(d.get("leaf_property", False)),
                   d.get("name", "c"))


def interpret(c: InterpScheme, T: Tree) -> Structure:
    for name in c.tree_colors:
        if name not in T.colors:
            raise TreeError(f"tree lacks color {name} required by the scheme")
    ck = T.checker
    universe = []
    for t in T.nodes:
        for l in range(c.k1 + 1):
            if ck.check(c.eq_formulas[l], {"x": t}):
                universe.append((t, l))
    rels = {}
    for R, n in c.tau.symbols:
        names = xvars(n)
        table = []
        if n == 0:
            rels[R] = ck.check(c.rel(R, ()), {})
            continue
        for combo in itertools.product(universe, repeat=n):
            eta = tuple(l for _, l in combo)
            phi = c.rel(R, eta)
            if phi == FALSE:
                continue
            if ck.check(phi, dict(zip(names, (t for t, _ in combo)))):
                table.append(combo)
        rels[R] = table
    return Structure.build(c.tau, universe, rels)


def leaf_property_holds(c: InterpScheme, T: Tree) -> bool:
    if c.k1 != 0:
        return False
    ck = T.checker
    return all(T.is_maximal(t) for t in T.nodes if ck.check(c.eq_formulas[0], {"x": t}))


# ---------------------------------------------------------------------------
# normalization to k1 = 0

def _between(x: str, y: str, z: str) -> Formula:
    """z strictly between y and x on the path."""
    return conj(Atom(LE, (y, z)), Atom(LE, (z, x)), Not(Eq(z, y)), Not(Eq(z, x)))


def psi(l: int, x: str, y: str, s2: str, supply: NameSupply) -> Formula:
    """y < x with exactly l nodes strictly between them, all in s2."""
    z = supply.elem("z")
    allin = Forall(z, Implies(_between(x, y, z), Atom(s2, (z,))))
    count = exactly(l, "z", lambda v: _between(x, y, v), supply)
    return conj(Atom(LE, (y, x)), Not(Eq(y, x)), allin, count)


def _guarded_exists(ys: list[str], guard, body: Formula) -> Formula:
    for y in reversed(ys):
        body = Exists(y, conj(guard(y), body))
    return body


def wlog_transform(c: InterpScheme) -> InterpScheme:
    s1, s2 = f"P{c.k2 + 1}", f"P{c.k2 + 2}"

    def lift(phi: Formula, mapping: dict) -> Formula:
        return relativize(substitute(phi, mapping), s1)

    guard = lambda v: Atom(s1, (v,))
    sup = NameSupply({"x"} | {s1, s2})
    alts = []
    for l in range(c.k1 + 1):
        y = sup.elem("y")
        body = conj(psi(l, "x", y, s2, sup), lift(c.eq_formulas[l], {"x": y}))
        alts.append(_guarded_exists([y], guard, body))
    eq0 = conj(Atom(s2, ("x",)), disj(*alts))

    rels = {}
    for R, n in c.tau.symbols:
        xs = xvars(n)
        alts = []
        for eta in itertools.product(range(c.k1 + 1), repeat=n):
            phi = c.rel(R, eta)
            if phi == FALSE:
                continue
            sup = NameSupply(set(xs) | all_vars(phi) | {s1, s2})
            ys = [sup.elem("y") for _ in xs]
            inner = conj(*(psi(l, x, y, s2, sup) for l, x, y in zip(eta, xs, ys)),
                         lift(phi, dict(zip(xs, ys))))
            alts.append(_guarded_exists(ys, guard, inner))
        if alts:
            rels[(R, (0,) * n)] = conj(*(Atom(s2, (x,)) for x in xs), disj(*alts))
    return InterpScheme(c.tau, 0, c.k2 + 2, (eq0,), rels, False, c.name + "'")


def wlog_tree(c: InterpScheme, T: Tree) -> Tree:
    """Insert the chain t < (t,0) < ... < (t,k1) below every child of t."""
    k1 = c.k1
    chain = lambda t, l: ("chain", t, l)
    parent = {}
    for t in T.nodes:
        parent[chain(t, 0)] = t
        for l in range(1, k1 + 1):
            parent[chain(t, l)] = chain(t, l - 1)
    for ch, p in T.parent.items():
        parent[ch] = chain(p, k1)
    nodes = list(T.nodes) + [chain(t, l) for t in T.nodes for l in range(k1 + 1)]
    names = k_colors(c.k2 + 2)
    colors = {n: set(T.colors.get(n, ())) for n in names[:c.k2]}
    colors[names[c.k2]] = set(T.nodes)
    colors[names[c.k2 + 1]] = {chain(t, l) for t in T.nodes for l in range(k1 + 1)}
    return Tree.build(parent, T.root, colors, names, nodes)


def wlog_check(c: InterpScheme, T: Tree, c2: InterpScheme | None = None) -> tuple[bool, int, int]:
    """(isomorphic?, |T'|, expected |T|(k1+2))."""
    c2 = c2 or wlog_transform(c)
    T2 = wlog_tree(c, T)
    ok, _ = iso_check(interpret(c, T), interpret(c2, T2))
    return ok, len(T2), len(T) * (c.k1 + 2)


__all__ = [
    "InterpScheme", "LE", "RT", "Segments", "Tree", "TreeError", "complete_binary_tree",
    "db_shapes", "half", "interpret", "k_colors", "leaf_property_holds", "psi", "random_db_tree",
    "random_tree", "rooted_shapes", "segments", "shape_tree", "t3", "tree_vocabulary",
    "wlog_check", "wlog_transform", "wlog_tree", "y_set",
]
