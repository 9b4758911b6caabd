"""Addition operations on k-const structures and constructible classes."""
from __future__ import annotations

import hashlib
import itertools
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .mso import Formula, parse, to_text, xvars
from .mso.characteristic import characteristic
from .mso.sexpr import Quoted, read_text
from .structures import (
    ConstStructure, QfType, Structure, StructureError, Vocabulary, freshen, make_null,
    qf_type, structure_from_dict, structure_to_dict,
)

log = logging.getLogger(__name__)


class Undefined(ValueError):
    """The addition is not defined on the given operands."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}{': ' + detail if detail else ''}")
        self.reason = reason


# ---------------------------------------------------------------------------
# decision tables

@dataclass(frozen=True)
class Rule:
    """Fallback for table keys not listed explicitly.

    kind "copy": a tuple lying entirely in one operand keeps its value there
    (OR when it lies in both), mixed tuples are false.
    kind "formula": a quantifier-free formula in x1..xn evaluated on the type
    of the tuple in operand ``side`` (default: whichever operand holds it).
    kind "const": a fixed value.
    kind "hash": a pseudo-random but deterministic function of the key.
    """
    kind: str
    formula: Formula | None = None
    side: int = 0
    value: bool = False
    seed: int = 0

    def to_json(self):
        if self.kind == "copy":
            return "copy"
        if self.kind == "formula":
            d = {"formula": to_text(self.formula)}
            if self.side:
                d["side"] = self.side
            return d
        if self.kind == "const":
            return {"const": self.value}
        return {"hash": self.seed}

    @classmethod
    def from_json(cls, d) -> "Rule":
        if d == "copy":
            return cls("copy")
        if "formula" in d:
            return cls("formula", formula=parse(d["formula"]), side=int(d.get("side", 0)))
        if "const" in d:
            return cls("const", value=bool(d["const"]))
        if "hash" in d:
            return cls("hash", seed=int(d["hash"]))
        raise ValueError(f"unknown rule {d!r}")


COPY = Rule("copy")


@dataclass(frozen=True)
class Table:
    entries: Mapping[tuple[str, str, str], bool] = field(default_factory=dict)
    rule: Rule | None = None
    default: bool = False


TableKey = tuple  # (R, w1 tuple, w2 tuple)


def table_key(R: str, w1, w2) -> TableKey:
    return (R, tuple(sorted(w1)), tuple(sorted(w2)))


def _key_text(k: TableKey) -> str:
    return f"{k[0]}|{','.join(map(str, k[1]))}|{','.join(map(str, k[2]))}"


def _key_parse(s: str) -> TableKey:
    R, a, b = s.split("|")
    w = lambda t: tuple(int(x) for x in t.split(",") if x)
    return (R, w(a), w(b))


def eval_qf_on_type(phi: Formula, t: QfType, names: list[str]) -> bool:
    """Truth of a quantifier-free formula on a type, variables named by position."""
    from .mso.formula import And, Atom, Const, Eq, Iff, Implies, Not, Or
    pos = {v: i for i, v in enumerate(names)}

    def go(f):
        if isinstance(f, Const):
            return f.value
        if isinstance(f, Atom):
            return t.holds(f.rel, tuple(pos[a] for a in f.args))
        if isinstance(f, Eq):
            return t.equal(pos[f.left], pos[f.right])
        if isinstance(f, Not):
            return not go(f.body)
        if isinstance(f, And):
            return all(go(p) for p in f.parts)
        if isinstance(f, Or):
            return any(go(p) for p in f.parts)
        if isinstance(f, Implies):
            return (not go(f.left)) or go(f.right)
        if isinstance(f, Iff):
            return go(f.left) == go(f.right)
        raise ValueError(f"not quantifier-free: {f}")
    return go(phi)


# ---------------------------------------------------------------------------
# the operation record

@dataclass(frozen=True)
class AdditionOp:
    tau: Vocabulary
    k: int = 0
    k1: int = 0
    k2: int = 0
    A1: frozenset = frozenset()
    A2: frozenset = frozenset()
    g1: Mapping[int, int] = field(default_factory=dict)
    g2: Mapping[int, int] = field(default_factory=dict)
    B1: frozenset = frozenset()
    B2: frozenset = frozenset()
    B: frozenset = frozenset()
    tables: Mapping[TableKey, Table] = field(default_factory=dict)
    default_rule: Rule | None = COPY
    default: bool = False
    name: str = "s"

    @classmethod
    def disjoint_sum(cls, tau: Vocabulary, name: str = "s_u") -> "AdditionOp":
        """The operation in S_{tau,0,0,0} that computes plain disjoint union."""
        return cls(tau, name=name)

    def table_for(self, R: str, w1, w2) -> Table | None:
        return self.tables.get(table_key(R, w1, w2))

    def with_tables(self, tables, default_rule=None, name=None) -> "AdditionOp":
        from dataclasses import replace
        return replace(self, tables=dict(tables), default_rule=default_rule,
                       name=name or self.name)


def _reflexive_pattern(k: int) -> frozenset:
    return frozenset((i, i) for i in range(1, k + 1))


def validate_op(s: AdditionOp) -> list[str]:
    out = []
    for l, (A, g, kl) in enumerate(((s.A1, s.g1, s.k1), (s.A2, s.g2, s.k2)), 1):
        if not set(A) <= set(range(1, kl + 1)):
            out.append(f"A{l} not within 1..{kl}")
        if set(g) != set(A):
            out.append(f"g{l} domain differs from A{l}")
        if len(set(g.values())) != len(g):
            out.append(f"g{l} not injective")
        if not set(g.values()) <= set(range(1, s.k + 1)):
            out.append(f"g{l} image outside 1..{s.k}")
    im1, im2 = set(s.g1.values()), set(s.g2.values())
    if im1 & im2:
        out.append("g-images overlap")
    if im1 | im2 != set(range(1, s.k + 1)):
        out.append(f"images of g1, g2 do not cover 1..{s.k}")
    for l, (Bl, kl) in enumerate(((s.B1, s.k1), (s.B2, s.k2)), 1):
        if any(not (1 <= i <= kl and 1 <= j <= kl) for i, j in Bl):
            out.append(f"B{l} not within 1..{kl} squared")
        elif not _is_equivalence(Bl, kl):
            out.append(f"warning: B{l} is not an equivalence relation")
    if any(not (1 <= i <= s.k1 and 1 <= j <= s.k2) for i, j in s.B):
        out.append("B not within 1..k1 x 1..k2")
    for (R, w1, w2) in s.tables:
        if R not in s.tau:
            out.append(f"table for unknown relation {R}")
            continue
        n = s.tau.arity(R)
        if not (set(w1) | set(w2)) <= set(range(1, n + 1)):
            out.append(f"table {_key_text((R, w1, w2))}: positions outside 1..{n}")
    return out


def _is_equivalence(B, k) -> bool:
    B = set(B)
    if any((i, i) not in B for i in range(1, k + 1)):
        return False
    if any((j, i) not in B for i, j in B):
        return False
    return all((i, l) in B for i, j in B for j2, l in B if j == j2)


# ---------------------------------------------------------------------------
# evaluation

def _lift(M: Structure, tau: Vocabulary) -> Structure:
    """View M as a tau-structure; symbols M lacks are empty (Null_X has only 0-ary ones)."""
    if M.vocabulary == tau:
        return M
    extra = set(M.vocabulary.names) - set(tau.names)
    if extra:
        raise StructureError(f"operand has symbols outside the operation vocabulary: {sorted(extra)}")
    for n in M.vocabulary.names:
        if M.vocabulary.arity(n) != tau.arity(n):
            raise StructureError(f"arity clash for {n}")
    return Structure.build(tau, M.universe, {n: M.relations[n] for n in M.vocabulary.names})


def _sigma_type(xs: tuple, marks: tuple, U1: frozenset, U2: frozenset) -> str:
    """Quantifier-free type of xs with the marks as constants and the two universes as predicates."""
    allv = xs + marks
    first: dict = {}
    eq = []
    for i, a in enumerate(allv):
        first.setdefault(a, i)
        eq.append(first[a])
    mem = "".join(("1" if a in U1 else "0") + ("1" if a in U2 else "0") for a in allv)
    return json.dumps([eq, mem], separators=(",", ":"))


def definedness(s: AdditionOp, M1: ConstStructure, M2: ConstStructure) -> None:
    a1, a2 = M1.marks, M2.marks
    if len(a1) != s.k1 or len(a2) != s.k2:
        raise Undefined("arity", f"operation expects {s.k1}+{s.k2} marks, got {len(a1)}+{len(a2)}")
    shared = set(M1.universe) & set(M2.universe)
    if not shared <= (set(a1) & set(a2)):
        raise Undefined("universe-overlap")
    for name, marks, Bl in (("pattern-B1", a1, s.B1), ("pattern-B2", a2, s.B2)):
        for i in range(1, len(marks) + 1):
            for j in range(1, len(marks) + 1):
                if (marks[i - 1] == marks[j - 1]) != ((i, j) in Bl):
                    raise Undefined(name, f"marks {i},{j}")
    for i in range(1, s.k1 + 1):
        for j in range(1, s.k2 + 1):
            if (a1[i - 1] == a2[j - 1]) != ((i, j) in s.B):
                raise Undefined("pattern-B", f"marks {i},{j}")


class _Decider:
    def __init__(self, s: AdditionOp, M1: Structure, M2: Structure, stats: Counter | None,
                 realized: set | None = None):
        self.s = s
        self.realized = realized
        self.M1, self.M2 = M1, M2
        self.stats = stats
        self._qcache: dict = {}

    def qtype(self, l: int, xs: tuple) -> QfType:
        key = (l, xs)
        t = self._qcache.get(key)
        if t is None:
            t = qf_type(xs, self.M1 if l == 1 else self.M2)
            self._qcache[key] = t
        return t

    def decide(self, R: str, xs: tuple, w1: tuple, w2: tuple, p: str) -> bool:
        s = self.s
        q1 = self.qtype(1, tuple(xs[i - 1] for i in w1))
        q2 = self.qtype(2, tuple(xs[i - 1] for i in w2))
        if self.realized is not None:
            self.realized.add((s.name, R, w1, w2, q1.key, q2.key))
        tbl = s.tables.get((R, w1, w2))
        if tbl is not None:
            hit = tbl.entries.get((p, q1.key, q2.key))
            if hit is not None:
                return hit
            rule = tbl.rule
        else:
            rule = s.default_rule
        if rule is not None:
            return self.apply_rule(rule, R, xs, w1, w2, p, q1, q2)
        if self.stats is not None:
            self.stats[_key_text((R, w1, w2))] += 1
        log.debug("default value used for %s", _key_text((R, w1, w2)))
        return tbl.default if tbl is not None else s.default

    def apply_rule(self, rule, R, xs, w1, w2, p, q1, q2) -> bool:
        n = len(xs)
        full = tuple(range(1, n + 1))
        if rule.kind == "copy":
            if n == 0:
                return q1.holds(R) or q2.holds(R)
            return ((w1 == full and q1.holds(R, tuple(range(n))))
                    or (w2 == full and q2.holds(R, tuple(range(n)))))
        if rule.kind == "const":
            return rule.value
        if rule.kind == "formula":
            side = rule.side or (1 if w1 == full else 2 if w2 == full else 0)
            if side == 1 and w1 == full:
                return eval_qf_on_type(rule.formula, q1, xvars(n))
            if side == 2 and w2 == full:
                return eval_qf_on_type(rule.formula, q2, xvars(n))
            return False
        if rule.kind == "hash":
            h = hashlib.sha256(f"{rule.seed}|{_key_text((R, w1, w2))}|{p}|{q1.key}|{q2.key}".encode())
            return bool(h.digest()[0] & 1)
        raise ValueError(f"unknown rule kind {rule.kind}")


def apply_addition(s: AdditionOp, M1: ConstStructure, M2: ConstStructure,
                   stats: Counter | None = None, realized: set | None = None) -> ConstStructure:
    """M1 (+)_s M2.  ``stats`` counts default-value hits per table; ``realized``
    collects every (op, R, w1, w2, q1, q2) key consulted."""
    if not isinstance(M1, ConstStructure):
        M1 = ConstStructure(M1, ())
    if not isinstance(M2, ConstStructure):
        M2 = ConstStructure(M2, ())
    definedness(s, M1, M2)
    S1, S2 = _lift(M1.structure, s.tau), _lift(M2.structure, s.tau)
    a1, a2 = M1.marks, M2.marks
    drop = set(a1) | set(a2)
    keep = {a1[i - 1] for i in s.A1} | {a2[i - 1] for i in s.A2}
    universe = []
    seen = set()
    for x in S1.universe + S2.universe:
        if x in seen:
            continue
        if x not in drop or x in keep:
            universe.append(x)
            seen.add(x)
    marks = [None] * s.k
    for i in s.A1:
        marks[s.g1[i] - 1] = a1[i - 1]
    for i in s.A2:
        marks[s.g2[i] - 1] = a2[i - 1]
    if any(m is None for m in marks):
        raise Undefined("marks", "g1, g2 images do not cover the result marks")

    U1, U2 = S1.elements, S2.elements
    allmarks = tuple(a1) + tuple(a2)
    dec = _Decider(s, S1, S2, stats, realized)
    rels = {}
    for R, n in s.tau.symbols:
        if n == 0:
            rels[R] = dec.decide(R, (), (), (), _sigma_type((), allmarks, U1, U2))
            continue
        table = set()
        for xs in itertools.product(universe, repeat=n):
            w1 = tuple(i for i in range(1, n + 1) if xs[i - 1] in U1)
            w2 = tuple(i for i in range(1, n + 1) if xs[i - 1] in U2)
            p = _sigma_type(xs, allmarks, U1, U2)
            if dec.decide(R, xs, w1, w2, p):
                table.add(xs)
        rels[R] = table
    return ConstStructure(Structure.build(s.tau, universe, rels), tuple(marks))


# ---------------------------------------------------------------------------
# constructible classes

@dataclass(frozen=True)
class ConstructibleSpec:
    tau: Vocabulary
    tau_plus: Vocabulary
    bases: Mapping[str, ConstStructure] = field(default_factory=dict)
    ops: Mapping[str, AdditionOp] = field(default_factory=dict)
    m_star: int = 2
    k_star: int = 0
    name: str = "const"

    def diagnostics(self) -> list[str]:
        out = []
        if not self.tau.issubset(self.tau_plus):
            out.append("tau not contained in tau_plus")
        for n, a in self.tau_plus.symbols:
            if n not in self.tau and a > self.m_star:
                out.append(f"auxiliary symbol {n} has arity {a} > m*={self.m_star}")
        for name, B in self.bases.items():
            if B.k > self.k_star:
                out.append(f"base {name} has {B.k} marks > k*={self.k_star}")
            if B.structure.vocabulary != self.tau_plus:
                out.append(f"base {name}: vocabulary differs from tau_plus")
        for name, s in self.ops.items():
            if max(s.k, s.k1, s.k2) > self.k_star:
                out.append(f"operation {name} exceeds k*={self.k_star}")
            if s.tau != self.tau_plus:
                out.append(f"operation {name}: vocabulary differs from tau_plus")
            out.extend(f"operation {name}: {d}" for d in validate_op(s) if not d.startswith("warning"))
        return out


@dataclass(frozen=True)
class ConstructionTerm:
    op: str                      # leaf | add | null
    name: str = ""               # base name or operation name
    args: tuple["ConstructionTerm", ...] = ()
    X: tuple[str, ...] = ()

    def __str__(self):
        return cterm_to_text(self)

    @property
    def size(self) -> int:
        return 1 + sum(a.size for a in self.args)


def cleaf(name: str) -> ConstructionTerm:
    return ConstructionTerm("leaf", name)


def cadd(op: str, t1: ConstructionTerm, t2: ConstructionTerm) -> ConstructionTerm:
    return ConstructionTerm("add", op, (t1, t2))


def cnull(X=()) -> ConstructionTerm:
    return ConstructionTerm("null", X=tuple(sorted(X)))


def cterm_to_text(t: ConstructionTerm) -> str:
    if t.op == "leaf":
        return t.name
    if t.op == "null":
        return "(" + " ".join(("null",) + t.X) + ")"
    return f"(add {t.name} {cterm_to_text(t.args[0])} {cterm_to_text(t.args[1])})"


def cterm_from_text(text: str) -> ConstructionTerm:
    def go(e):
        if isinstance(e, str) and not isinstance(e, Quoted):
            return cleaf(e)
        if isinstance(e, list) and e and e[0] == "null":
            return cnull(e[1:])
        if isinstance(e, list) and len(e) == 4 and e[0] == "add":
            return cadd(e[1], go(e[2]), go(e[3]))
        raise ValueError(f"malformed construction term {e!r}")
    return go(read_text(text))


class EvalError(ValueError):
    def __init__(self, path: str, err: Exception):
        super().__init__(f"at {path or 'root'}: {err}")
        self.path = path
        self.cause = err


def clone_const(M: ConstStructure) -> ConstStructure:
    S, mapping = freshen(M.structure)
    return ConstStructure(S, tuple(mapping[a] for a in M.marks))


def eval_construction(spec: ConstructibleSpec, t: ConstructionTerm,
                      stats: Counter | None = None, _path: str = "",
                      realized: set | None = None) -> ConstStructure:
    """Evaluate bottom-up; every leaf is instantiated with fresh element ids."""
    if t.op == "leaf":
        if t.name not in spec.bases:
            raise EvalError(_path, KeyError(f"unknown base {t.name!r}"))
        return clone_const(spec.bases[t.name])
    if t.op == "null":
        try:
            return ConstStructure(make_null(t.X, spec.tau_plus), ())
        except StructureError as e:
            raise EvalError(_path, e) from None
    if t.op == "add":
        if t.name not in spec.ops:
            raise EvalError(_path, KeyError(f"unknown operation {t.name!r}"))
        M1 = eval_construction(spec, t.args[0], stats, _path + "1", realized)
        M2 = eval_construction(spec, t.args[1], stats, _path + "2", realized)
        try:
            return apply_addition(spec.ops[t.name], M1, M2, stats, realized)
        except (Undefined, StructureError) as e:
            raise EvalError(_path, e) from None
    raise EvalError(_path, ValueError(f"unknown constructor {t.op}"))


def random_cterm(spec: ConstructibleSpec, rng, depth: int = 3,
                 ops: list[str] | None = None) -> ConstructionTerm:
    """Random term; a Null operand is used only where the operation expects no marks."""
    names = sorted(spec.bases)
    ops = sorted(spec.ops) if ops is None else ops
    if depth <= 0 or not ops or rng.random() < 0.25:
        return cleaf(rng.choice(names))
    op = rng.choice(ops)
    left = random_cterm(spec, rng, depth - 1, ops)
    if spec.ops[op].k2 == 0 and rng.random() < 0.3:
        return cadd(op, left, cnull())
    return cadd(op, left, random_cterm(spec, rng, depth - 1, ops))


# ---------------------------------------------------------------------------
# addition theorem

@dataclass
class TheoremVerdict:
    holds: bool
    hypothesis: bool
    q: int
    detail: str = ""


def const_theory(M: ConstStructure, q: int, max_size: int | None = None):
    """q-theory of a const structure: its characteristic with the marks as constants."""
    return characteristic(M.structure, M.marks, q, max_size=max_size)


def addition_theorem_check(s: AdditionOp, MM, NN, q: int, max_size: int | None = None) -> TheoremVerdict:
    (M, M_), (N, N_) = MM, NN
    if const_theory(M, q, max_size) != const_theory(M_, q, max_size) or \
            const_theory(N, q, max_size) != const_theory(N_, q, max_size):
        return TheoremVerdict(True, False, q, "hypothesis not satisfied")
    S = apply_addition(s, M, N)
    S_ = apply_addition(s, M_, N_)
    eq = const_theory(S, q, max_size) == const_theory(S_, q, max_size)
    return TheoremVerdict(eq, True, q, "" if eq else "sums differ")


# ---------------------------------------------------------------------------
# JSON

def op_to_dict(s: AdditionOp) -> dict:
    tables = {}
    for key, tbl in sorted(s.tables.items(), key=lambda kv: _key_text(kv[0])):
        d = {"entries": sorted([list(k) + [v] for k, v in tbl.entries.items()]),
             "default": tbl.default}
        if tbl.rule is not None:
            d["rule"] = tbl.rule.to_json()
        tables[_key_text(key)] = d
    return {
        "name": s.name,
        "tau": [list(x) for x in s.tau.symbols],
        "k": s.k, "k1": s.k1, "k2": s.k2,
        "A1": sorted(s.A1), "A2": sorted(s.A2),
        "g1": {str(i): v for i, v in sorted(s.g1.items())},
        "g2": {str(i): v for i, v in sorted(s.g2.items())},
        "B1": sorted(map(list, s.B1)), "B2": sorted(map(list, s.B2)), "B": sorted(map(list, s.B)),
        "tables": tables,
        "default_rule": s.default_rule.to_json() if s.default_rule else None,
        "default": s.default,
    }


def op_from_dict(d: Mapping, tau: Vocabulary | None = None) -> AdditionOp:
    if tau is None:
        tau = Vocabulary.of(*[tuple(x) for x in d["tau"]])
    k, k1, k2 = int(d.get("k", 0)), int(d.get("k1", 0)), int(d.get("k2", 0))
    tables = {}
    for key, td in d.get("tables", {}).items():
        entries = {(p, a, b): bool(v) for p, a, b, v in td.get("entries", [])}
        rule = Rule.from_json(td["rule"]) if td.get("rule") is not None else None
        tables[_key_parse(key)] = Table(entries, rule, bool(td.get("default", False)))
    dr = d.get("default_rule", "copy")
    return AdditionOp(
        tau, k, k1, k2,
        frozenset(d.get("A1", [])), frozenset(d.get("A2", [])),
        {int(i): int(v) for i, v in d.get("g1", {}).items()},
        {int(i): int(v) for i, v in d.get("g2", {}).items()},
        frozenset(tuple(x) for x in d.get("B1", _reflexive_pattern(k1))),
        frozenset(tuple(x) for x in d.get("B2", _reflexive_pattern(k2))),
        frozenset(tuple(x) for x in d.get("B", [])),
        tables, Rule.from_json(dr) if dr is not None else None,
        bool(d.get("default", False)), d.get("name", "s"),
    )


def cspec_to_dict(spec: ConstructibleSpec) -> dict:
    return {
        "name": spec.name,
        "tau": [list(x) for x in spec.tau.symbols],
        "tau_plus": [list(x) for x in spec.tau_plus.symbols],
        "m_star": spec.m_star, "k_star": spec.k_star,
        "bases": {n: structure_to_dict(B) for n, B in sorted(spec.bases.items())},
        "ops": {n: op_to_dict(s) for n, s in sorted(spec.ops.items())},
    }


def cspec_from_dict(d: Mapping) -> ConstructibleSpec:
    tau = Vocabulary.of(*[tuple(x) for x in d["tau"]])
    tau_plus = Vocabulary.of(*[tuple(x) for x in d.get("tau_plus", d["tau"])])
    bases = {}
    for n, bd in d.get("bases", {}).items():
        B = structure_from_dict(bd)
        if not isinstance(B, ConstStructure):
            B = ConstStructure(B if isinstance(B, Structure) else B.structure, ())
        bases[n] = B
    ops = {n: op_from_dict(od, tau_plus) for n, od in d.get("ops", {}).items()}
    for n, s in ops.items():
        if s.name == "s":
            ops[n] = s.with_tables(s.tables, s.default_rule, n)
    return ConstructibleSpec(tau, tau_plus, bases, ops, int(d.get("m_star", 2)),
                             int(d.get("k_star", 0)), d.get("name", "const"))


__all__ = [
    "AdditionOp", "COPY", "ConstructibleSpec", "ConstructionTerm", "EvalError", "Rule", "Table",
    "TheoremVerdict", "Undefined", "addition_theorem_check", "apply_addition", "cadd", "cleaf",
    "clone_const", "cnull", "const_theory", "cspec_from_dict", "cspec_to_dict", "cterm_from_text",
    "cterm_to_text", "definedness", "eval_construction", "eval_qf_on_type", "op_from_dict",
    "op_to_dict", "random_cterm", "table_key", "validate_op",
]
