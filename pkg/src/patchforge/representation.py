"""Tree representations of constructions and a decoder back to structures.

A construction term becomes a directed binary tree: the left argument of an
operation is colored S1, the right one S2.  Each node carries P_k when its
structure has k > 0 marks, Q_<op> at operation nodes and R_<base> at base
leaves.  Labels are also stored as node attributes, so decoding never parses
predicate names.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

from .addition import (
    ConstructibleSpec, ConstructionTerm, apply_addition, clone_const, cnull,
)
from .structures import ConstStructure, StructureError, make_null
from .trees import Tree, TreeError

S1, S2 = "S1", "S2"


class RepresentationError(ValueError):
    pass


def rep_colors(spec: ConstructibleSpec) -> tuple[str, ...]:
    return ((S1, S2) + tuple(f"P{k}" for k in range(1, spec.k_star + 1))
            + tuple(f"Q_{s}" for s in sorted(spec.ops)) + tuple(f"R_{b}" for b in sorted(spec.bases)))


@dataclass(frozen=True)
class Representation:
    tree: Tree
    labels: Mapping            # node -> ("op", name) | ("base", name) | ("null", X)
    marks: Mapping             # node -> number of marks of the node's structure

    def to_dict(self) -> dict:
        d = self.tree.to_dict()
        d["labels"] = {str(x): list(v[:1]) + [v[1] if v[0] != "null" else list(v[1])]
                       for x, v in self.labels.items()}
        d["marks"] = {str(x): k for x, k in self.marks.items()}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Representation":
        T = Tree.from_dict(d)
        lookup = {str(x): x for x in T.nodes}
        labels = {}
        for key, (kind, val) in d.get("labels", {}).items():
            labels[lookup[key]] = (kind, tuple(val) if kind == "null" else val)
        marks = {lookup[k]: int(v) for k, v in d.get("marks", {}).items()}
        return cls(T, labels, marks)


def _marks_of(spec: ConstructibleSpec, t: ConstructionTerm) -> int:
    if t.op == "leaf":
        return spec.bases[t.name].k
    if t.op == "null":
        return 0
    return spec.ops[t.name].k


def build_representation(spec: ConstructibleSpec, t: ConstructionTerm) -> Representation:
    names = rep_colors(spec)
    colors = {c: set() for c in names}
    parent, labels, marks, nodes = {}, {}, {}, []
    counter = itertools.count()

    def go(u: ConstructionTerm):
        x = next(counter)
        nodes.append(x)
        if u.op == "leaf":
            if u.name not in spec.bases:
                raise RepresentationError(f"unknown base {u.name!r}")
            labels[x] = ("base", u.name)
            colors[f"R_{u.name}"].add(x)
        elif u.op == "null":
            labels[x] = ("null", tuple(u.X))
        elif u.op == "add":
            if u.name not in spec.ops:
                raise RepresentationError(f"unknown operation {u.name!r}")
            labels[x] = ("op", u.name)
            colors[f"Q_{u.name}"].add(x)
            for side, arg in zip((S1, S2), u.args):
                y = go(arg)
                parent[y] = x
                colors[side].add(y)
        else:
            raise RepresentationError(f"unknown constructor {u.op}")
        k = _marks_of(spec, u)
        marks[x] = k
        if k:
            colors[f"P{k}"].add(x)
        return x

    root = go(t)
    T = Tree.build(parent, root, colors, names, nodes)
    return Representation(T, labels, marks)


def validate_representation(spec: ConstructibleSpec, rep: Representation) -> list[str]:
    T = rep.tree
    out = []
    if not T.is_db((S1, S2)):
        out.append("tree part is not a directed binary tree over S1/S2")
    for x in T.nodes:
        lab = rep.labels.get(x)
        if lab is None:
            out.append(f"node {x!r} is unlabeled")
            continue
        kind, name = lab
        ks = [k for k in range(1, spec.k_star + 1) if x in T.colors.get(f"P{k}", ())]
        if len(ks) > 1:
            out.append(f"node {x!r} has several mark counts")
        k = ks[0] if ks else 0
        if k != rep.marks.get(x, k):
            out.append(f"node {x!r}: mark predicate disagrees with stored count")
        if kind == "op":
            if T.is_maximal(x):
                out.append(f"maximal node {x!r} labeled by an operation")
                continue
            if name not in spec.ops:
                out.append(f"node {x!r}: unknown operation {name}")
                continue
            s = spec.ops[name]
            if x not in T.colors.get(f"Q_{name}", ()):
                out.append(f"node {x!r}: Q_{name} missing")
            if k != s.k:
                out.append(f"node {x!r}: operation {name} produces {s.k} marks, node has {k}")
            for side, want in ((S1, s.k1), (S2, s.k2)):
                c = T.child_in(x, side)
                if c is None:
                    continue
                have = [j for j in range(1, spec.k_star + 1) if c in T.colors.get(f"P{j}", ())]
                have = have[0] if have else 0
                if have != want:
                    out.append(f"node {x!r}: {side} successor has {have} marks, {name} expects {want}")
        elif kind == "base":
            if not T.is_maximal(x):
                out.append(f"internal node {x!r} labeled by a base")
            if name not in spec.bases:
                out.append(f"node {x!r}: unknown base {name}")
            elif spec.bases[name].k != k:
                out.append(f"node {x!r}: base {name} has {spec.bases[name].k} marks, node has {k}")
        elif kind == "null":
            if not T.is_maximal(x):
                out.append(f"internal node {x!r} labeled by a null structure")
        else:
            out.append(f"node {x!r}: unknown label kind {kind}")
    return out


def decode_representation(spec: ConstructibleSpec, rep: Representation) -> ConstStructure:
    problems = validate_representation(spec, rep)
    if problems:
        raise RepresentationError("; ".join(problems))
    T = rep.tree

    def go(x) -> ConstStructure:
        kind, name = rep.labels[x]
        if kind == "base":
            return clone_const(spec.bases[name])
        if kind == "null":
            return ConstStructure(make_null(name, spec.tau_plus), ())
        left = go(T.child_in(x, S1))
        right = go(T.child_in(x, S2))
        try:
            return apply_addition(spec.ops[name], left, right)
        except (StructureError, ValueError) as e:
            raise RepresentationError(f"node {x!r}: {e}") from None

    return go(T.root)


def representation_term(rep: Representation) -> ConstructionTerm:
    """Read the construction term back off a representation."""
    from .addition import cadd, cleaf
    T = rep.tree

    def go(x):
        kind, name = rep.labels[x]
        if kind == "base":
            return cleaf(name)
        if kind == "null":
            return cnull(name)
        return cadd(name, go(T.child_in(x, S1)), go(T.child_in(x, S2)))
    return go(T.root)


def permuted(rep: Representation, mapping: Mapping) -> Representation:
    f = lambda x: mapping.get(x, x)
    return Representation(rep.tree.relabeled(mapping), {f(x): v for x, v in rep.labels.items()},
                          {f(x): v for x, v in rep.marks.items()})


__all__ = [
    "Representation", "RepresentationError", "S1", "S2", "build_representation",
    "decode_representation", "permuted", "rep_colors", "representation_term",
    "validate_representation",
]
