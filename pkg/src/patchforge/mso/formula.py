"""MSO formula AST, structural helpers and formula builders."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return conj(self, other)

    def __or__(self, other):
        return disj(self, other)

    def __invert__(self):
        return Not(self)

    def __str__(self):
        from .sexpr import to_text
        return to_text(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Atom(Formula):
    rel: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class In(Formula):
    elem: str
    set: str


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ExistsSet(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ForallSet(Formula):
    var: str
    body: Formula


QUANTIFIERS = (Exists, Forall, ExistsSet, ForallSet)
ELEMENT_QUANTIFIERS = (Exists, Forall)
SET_QUANTIFIERS = (ExistsSet, ForallSet)


class FormulaError(ValueError):
    pass


def children(phi: Formula) -> tuple[Formula, ...]:
    if isinstance(phi, (And, Or)):
        return phi.parts
    if isinstance(phi, (Implies, Iff)):
        return (phi.left, phi.right)
    if isinstance(phi, Not):
        return (phi.body,)
    if isinstance(phi, QUANTIFIERS):
        return (phi.body,)
    return ()


def qdepth(phi: Formula) -> int:
    if isinstance(phi, QUANTIFIERS):
        return 1 + qdepth(phi.body)
    return max((qdepth(c) for c in children(phi)), default=0)


def free_vars(phi: Formula) -> tuple[frozenset[str], frozenset[str]]:
    """(free element variables, free set variables)."""
    if isinstance(phi, Atom):
        return frozenset(phi.args), frozenset()
    if isinstance(phi, Eq):
        return frozenset((phi.left, phi.right)), frozenset()
    if isinstance(phi, In):
        return frozenset((phi.elem,)), frozenset((phi.set,))
    if isinstance(phi, Const):
        return frozenset(), frozenset()
    if isinstance(phi, ELEMENT_QUANTIFIERS):
        e, s = free_vars(phi.body)
        return e - {phi.var}, s
    if isinstance(phi, SET_QUANTIFIERS):
        e, s = free_vars(phi.body)
        return e, s - {phi.var}
    es, ss = frozenset(), frozenset()
    for c in children(phi):
        e, s = free_vars(c)
        es |= e
        ss |= s
    return es, ss


def is_quantifier_free(phi: Formula) -> bool:
    return qdepth(phi) == 0


def relations_used(phi: Formula) -> set[tuple[str, int]]:
    if isinstance(phi, Atom):
        return {(phi.rel, len(phi.args))}
    out: set = set()
    for c in children(phi):
        out |= relations_used(c)
    return out


def is_sentence(phi: Formula) -> bool:
    e, s = free_vars(phi)
    return not e and not s


# ---------------------------------------------------------------------------
# smart constructors

def conj(*parts: Formula) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.parts)
        elif p == TRUE:
            continue
        elif p == FALSE:
            return FALSE
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.parts)
        elif p == FALSE:
            continue
        elif p == TRUE:
            return TRUE
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def neg(phi: Formula) -> Formula:
    if phi == TRUE:
        return FALSE
    if phi == FALSE:
        return TRUE
    if isinstance(phi, Not):
        return phi.body
    return Not(phi)


def atom(rel: str, *args: str) -> Atom:
    return Atom(rel, tuple(args))


def exists(vars_: str | Sequence[str], body: Formula) -> Formula:
    if isinstance(vars_, str):
        vars_ = [vars_]
    for v in reversed(list(vars_)):
        body = Exists(v, body)
    return body


def forall(vars_: str | Sequence[str], body: Formula) -> Formula:
    if isinstance(vars_, str):
        vars_ = [vars_]
    for v in reversed(list(vars_)):
        body = Forall(v, body)
    return body


def distinct(vars_: Sequence[str]) -> Formula:
    return conj(*(Not(Eq(a, b)) for a, b in itertools.combinations(vars_, 2)))


def exactly(n: int, var: str, cond, fresh: "NameSupply") -> Formula:
    """Exactly n elements satisfy cond(var_name) -> Formula."""
    ws = [fresh.elem("w") for _ in range(n)]
    v = fresh.elem("v")
    inner = forall(v, Implies(cond(v), disj(*(Eq(v, w) for w in ws))))
    return exists(ws, conj(distinct(ws), *(cond(w) for w in ws), inner))


class NameSupply:
    """Fresh variable names, avoiding a reserved set."""

    def __init__(self, reserved: Iterable[str] = ()):
        self.reserved = set(reserved)
        self._n = itertools.count()

    def elem(self, base: str = "v") -> str:
        while True:
            name = f"{base}_{next(self._n)}"
            if name not in self.reserved:
                self.reserved.add(name)
                return name

    def set(self, base: str = "S") -> str:
        return self.elem(base)


def all_vars(phi: Formula) -> set[str]:
    out: set[str] = set()
    if isinstance(phi, Atom):
        out |= set(phi.args)
    elif isinstance(phi, Eq):
        out |= {phi.left, phi.right}
    elif isinstance(phi, In):
        out |= {phi.elem, phi.set}
    elif isinstance(phi, QUANTIFIERS):
        out.add(phi.var)
    for c in children(phi):
        out |= all_vars(c)
    return out


# ---------------------------------------------------------------------------
# transformations

def substitute(phi: Formula, mapping: dict[str, str]) -> Formula:
    """Rename free variables, renaming bound variables to avoid capture."""
    if not mapping:
        return phi
    supply = NameSupply(all_vars(phi) | set(mapping) | set(mapping.values()))
    return _subst(phi, dict(mapping), supply)


def _subst(phi: Formula, m: dict[str, str], supply: NameSupply) -> Formula:
    r = lambda v: m.get(v, v)
    if isinstance(phi, Const):
        return phi
    if isinstance(phi, Atom):
        return Atom(phi.rel, tuple(r(a) for a in phi.args))
    if isinstance(phi, Eq):
        return Eq(r(phi.left), r(phi.right))
    if isinstance(phi, In):
        return In(r(phi.elem), r(phi.set))
    if isinstance(phi, Not):
        return Not(_subst(phi.body, m, supply))
    if isinstance(phi, And):
        return And(tuple(_subst(p, m, supply) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(_subst(p, m, supply) for p in phi.parts))
    if isinstance(phi, Implies):
        return Implies(_subst(phi.left, m, supply), _subst(phi.right, m, supply))
    if isinstance(phi, Iff):
        return Iff(_subst(phi.left, m, supply), _subst(phi.right, m, supply))
    if isinstance(phi, QUANTIFIERS):
        inner = {k: v for k, v in m.items() if k != phi.var}
        var = phi.var
        if var in inner.values():
            new = supply.elem(var)
            inner[var] = new
            var = new
        return type(phi)(var, _subst(phi.body, inner, supply))
    raise FormulaError(f"unknown node {phi!r}")


def relativize(phi: Formula, pred: str, *, is_set: bool = False) -> Formula:
    """Restrict every quantifier to the unary predicate (or set variable) ``pred``.

    Element quantifiers become guarded; set quantifiers range over subsets of
    ``pred`` only.
    """
    guard = (lambda v: In(v, pred)) if is_set else (lambda v: Atom(pred, (v,)))
    supply = NameSupply(all_vars(phi) | {pred})

    def go(f: Formula) -> Formula:
        if isinstance(f, Exists):
            return Exists(f.var, conj(guard(f.var), go(f.body)))
        if isinstance(f, Forall):
            return Forall(f.var, Implies(guard(f.var), go(f.body)))
        if isinstance(f, ExistsSet):
            z = supply.elem("z")
            return ExistsSet(f.var, conj(Forall(z, Implies(In(z, f.var), guard(z))), go(f.body)))
        if isinstance(f, ForallSet):
            z = supply.elem("z")
            return ForallSet(f.var, Implies(Forall(z, Implies(In(z, f.var), guard(z))), go(f.body)))
        if isinstance(f, Not):
            return Not(go(f.body))
        if isinstance(f, And):
            return And(tuple(go(p) for p in f.parts))
        if isinstance(f, Or):
            return Or(tuple(go(p) for p in f.parts))
        if isinstance(f, Implies):
            return Implies(go(f.left), go(f.right))
        if isinstance(f, Iff):
            return Iff(go(f.left), go(f.right))
        return f

    return go(phi)


def rename_relations(phi: Formula, mapping: dict[str, str]) -> Formula:
    if isinstance(phi, Atom):
        return Atom(mapping.get(phi.rel, phi.rel), phi.args)
    if isinstance(phi, Not):
        return Not(rename_relations(phi.body, mapping))
    if isinstance(phi, And):
        return And(tuple(rename_relations(p, mapping) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(rename_relations(p, mapping) for p in phi.parts))
    if isinstance(phi, Implies):
        return Implies(rename_relations(phi.left, mapping), rename_relations(phi.right, mapping))
    if isinstance(phi, Iff):
        return Iff(rename_relations(phi.left, mapping), rename_relations(phi.right, mapping))
    if isinstance(phi, QUANTIFIERS):
        return type(phi)(phi.var, rename_relations(phi.body, mapping))
    return phi


def xvars(n: int) -> list[str]:
    return [f"x{i}" for i in range(1, n + 1)]
