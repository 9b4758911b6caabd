"""Translations between patch-width classes and constructible classes.

``pw_to_const`` turns each patch-width operation into an addition operation
without marks: union is the plain disjoint sum, and recolorings and
modifications become operations that act on the left operand while the right
one is Null.

``const_to_pw`` goes the other way for mark-free operations.  Every addition
is compiled into patch operations: tag the operands with two fresh unary
predicates, save each relation R into a primed copy R', take the disjoint
union and redefine every R by a quantifier-free formula B_R over the primed
copies and the tags.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from .addition import (
    AdditionOp, ConstructibleSpec, ConstructionTerm, Rule, Table, cadd, cleaf, cnull,
    eval_construction, random_cterm, table_key,
)
from .mso import FALSE, TRUE, Atom, Eq, Formula, Not, conj, disj, parse, to_text, xvars
from .mso.formula import rename_relations
from .patchwidth import (
    PatchTerm, PWClassSpec, eval_term, leaf, modify_term, random_term, union,
)
from .structures import (
    ConstStructure, QfType, Structure, Vocabulary, iso_check, reduct,
)


class TranslationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# patch-width -> constructible

def _op_id(prefix: str, text: str) -> str:
    return f"{prefix}_{hashlib.sha1(text.encode()).hexdigest()[:8]}"


@dataclass
class PwToConst:
    source: PWClassSpec
    target: ConstructibleSpec
    recolor_ops: dict
    modify_ops: dict

    def translate(self, t: PatchTerm) -> ConstructionTerm:
        if t.op == "leaf":
            return cleaf(t.name)
        if t.op == "union":
            return cadd("s_u", self.translate(t.args[0]), self.translate(t.args[1]))
        if t.op == "recolor":
            return cadd(self.recolor_ops[(t.i, t.j)], self.translate(t.args[0]), cnull())
        if t.op == "modify":
            key = (t.rel, to_text(t.body))
            if key not in self.modify_ops:
                raise TranslationError(f"modification {key} not in the compiled operation set")
            return cadd(self.modify_ops[key], self.translate(t.args[0]), cnull())
        raise TranslationError(f"unknown constructor {t.op}")


def _collect_modifies(t: PatchTerm, out: set):
    if t.op == "modify":
        out.add((t.rel, to_text(t.body)))
    for a in t.args:
        _collect_modifies(a, out)


def pw_to_const(spec: PWClassSpec, extra_terms=()) -> PwToConst:
    if not spec.tau.nice:
        raise TranslationError("patch-width vocabulary must be nice")
    tau_plus = spec.vocabulary
    full = lambda R: tuple(range(1, tau_plus.arity(R) + 1))
    ops: dict[str, AdditionOp] = {"s_u": AdditionOp.disjoint_sum(tau_plus, "s_u")}
    recolor_ops = {}
    k = spec.colors
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            name = f"rho_{i}_{j}"
            tables = {}
            if i != j:
                tables[table_key(f"P{j}", (1,), ())] = Table(
                    rule=Rule("formula", formula=parse(f"(or (P{i} x1) (P{j} x1))"), side=1))
                tables[table_key(f"P{i}", (1,), ())] = Table(rule=Rule("const", value=False))
            ops[name] = AdditionOp(tau_plus, tables=tables, name=name)
            recolor_ops[(i, j)] = name
    mods = {(R, to_text(b)) for R, b in spec.formula_pool}
    for t in extra_terms:
        _collect_modifies(t, mods)
    modify_ops = {}
    for R, text in sorted(mods):
        name = _op_id(f"delta_{R}", text)
        tables = {table_key(R, full(R), ()): Table(rule=Rule("formula", formula=parse(text), side=1))}
        ops[name] = AdditionOp(tau_plus, tables=tables, name=name)
        modify_ops[(R, text)] = name
    bases = {n: ConstStructure(B, ()) for n, B in spec.bases.items()}
    m_star = max([a for n, a in tau_plus.symbols if n not in spec.tau] or [1])
    target = ConstructibleSpec(spec.tau, tau_plus, bases, ops, m_star, 0, spec.name + "-const")
    return PwToConst(spec, target, recolor_ops, modify_ops)


# ---------------------------------------------------------------------------
# constructible -> patch-width

def type_formula(t: QfType, vocab: Vocabulary, names: list[str], prime) -> Formula:
    """Conjunction of all literals of the type, relation symbols renamed by ``prime``."""
    lits = []
    for sign, sym, pos in t.literals(vocab):
        if sym == "=":
            f = Eq(names[pos[0]], names[pos[1]])
        else:
            f = Atom(prime(sym), tuple(names[p] for p in pos))
        lits.append(f if sign else Not(f))
    return conj(*lits)


def _sigma_from_types(n: int, w1: tuple, w2: tuple, q1: QfType, q2: QfType) -> str:
    """The sigma-type a mark-free sum assigns to a tuple with these side types."""
    cls = {}
    for l, (w, q) in enumerate(((w1, q1), (w2, q2)), 1):
        for idx, i in enumerate(w):
            cls[i] = (l, q.eq[idx])
    first: dict = {}
    eq = []
    for i in range(1, n + 1):
        first.setdefault(cls[i], i - 1)
        eq.append(first[cls[i]])
    mem = "".join("10" if i in w1 else "01" for i in range(1, n + 1))
    return json.dumps([eq, mem], separators=(",", ":"))


def _partitions(n: int):
    for mask in range(1 << n):
        w1 = tuple(i for i in range(1, n + 1) if mask >> (i - 1) & 1)
        w2 = tuple(i for i in range(1, n + 1) if not mask >> (i - 1) & 1)
        yield w1, w2


@dataclass
class ConstToPw:
    source: ConstructibleSpec
    target: PWClassSpec
    tags: tuple[str, str]
    prime: dict
    bodies: dict            # (op, R) -> Formula B_R
    notes: list = field(default_factory=list)

    @property
    def k_prime(self) -> int:
        """Number of relation symbols of the compiled vocabulary."""
        return len(self.target.vocabulary.symbols)

    def _prepare(self, t: PatchTerm, side: int) -> PatchTerm:
        mine, other = self.tags[side - 1], self.tags[2 - side]
        t = modify_term(other, FALSE, t)
        t = modify_term(mine, TRUE, t)
        for R, n in self.source.tau_plus.symbols:
            t = modify_term(self.prime[R], Atom(R, tuple(xvars(n))), t)
        return t

    def compile_op(self, op: str, t1: PatchTerm | None, t2: PatchTerm | None) -> PatchTerm:
        if t1 is None and t2 is None:
            raise TranslationError("sum of two Null operands is empty; patch-width has no empty structure")
        parts = []
        if t1 is not None:
            parts.append(self._prepare(t1, 1))
        if t2 is not None:
            parts.append(self._prepare(t2, 2))
        t = parts[0] if len(parts) == 1 else union(parts[0], parts[1])
        for R, _n in self.source.tau_plus.symbols:
            t = modify_term(R, self.bodies[(op, R)], t)
        return t

    def translate(self, t: ConstructionTerm) -> PatchTerm:
        if t.op == "leaf":
            return leaf(t.name)
        if t.op == "null":
            return None
        if t.op == "add":
            a = self.translate(t.args[0])
            b = self.translate(t.args[1])
            return self.compile_op(t.name, a, b)
        raise TranslationError(f"unknown constructor {t.op}")


def _fresh_names(taken: set, bases) -> tuple[str, str]:
    for a, b in bases:
        if a not in taken and b not in taken:
            return a, b
    i = 0
    while f"T{i}a" in taken or f"T{i}b" in taken:
        i += 1
    return f"T{i}a", f"T{i}b"


def const_to_pw(spec: ConstructibleSpec, realized: set | None = None) -> ConstToPw:
    """Compile a mark-free constructible spec into an m-ary patch-width spec.

    ``realized`` holds (op, R, w1, w2, q1, q2) keys; pseudo-random table rules
    are compiled over these keys only.
    """
    tau_plus = spec.tau_plus
    if not tau_plus.nice:
        raise TranslationError("tau_plus must be nice")
    for name, s in spec.ops.items():
        if s.k or s.k1 or s.k2:
            raise TranslationError(f"operation {name} uses marks")
    for name, B in spec.bases.items():
        if B.k:
            raise TranslationError(f"base {name} has marks")
    taken = set(tau_plus.names)
    prime = {}
    for R in tau_plus.names:
        p = R + "'"
        while p in taken:
            p += "'"
        prime[R] = p
        taken.add(p)
    tags = _fresh_names(taken, [("P1", "P2"), ("S1", "S2"), ("side1", "side2")])
    aux_pairs = [s for s in tau_plus.symbols if s[0] not in spec.tau]
    aux_pairs += [(prime[R], n) for R, n in tau_plus.symbols]
    aux_pairs += [(tags[0], 1), (tags[1], 1)]
    aux = Vocabulary(tuple(aux_pairs))
    work = spec.tau.union(aux)
    bases = {}
    for n, B in spec.bases.items():
        S = B.structure
        bases[n] = Structure.build(work, S.universe, {r: S.relations[r] for r in S.vocabulary.names})
    notes = ["type formulas use the conjunction of a type's literals"]
    bodies = {}
    pr = lambda R: prime[R]
    realized = realized or set()
    for oname, s in sorted(spec.ops.items()):
        for R, n in tau_plus.symbols:
            names = xvars(n)
            branches = []
            for w1, w2 in _partitions(n):
                side = conj(*[Atom(tags[0], (names[i - 1],)) for i in w1],
                            *[Atom(tags[1], (names[i - 1],)) for i in w2])
                val = _value_formula(s, oname, R, n, w1, w2, names, pr, realized)
                branches.append(conj(side, val))
            bodies[(oname, R)] = disj(*branches)
    target = PWClassSpec(spec.tau, "m_ary", len(aux_pairs), aux, bases, (), spec.name + "-pw")
    return ConstToPw(spec, target, tags, prime, bodies, notes)


def _value_formula(s: AdditionOp, oname, R, n, w1, w2, names, pr, realized) -> Formula:
    tau_plus = s.tau
    full = tuple(range(1, n + 1))
    n1 = [names[i - 1] for i in w1]
    n2 = [names[i - 1] for i in w2]

    def pair(k1, k2):
        q1, q2 = QfType.from_key(k1), QfType.from_key(k2)
        return conj(type_formula(q1, tau_plus, n1, pr), type_formula(q2, tau_plus, n2, pr))

    def rule_formula(rule: Rule | None, default: bool) -> Formula:
        if rule is None:
            return TRUE if default else FALSE
        if rule.kind == "const":
            return TRUE if rule.value else FALSE
        if rule.kind == "copy":
            if w1 == full or w2 == full:
                return Atom(pr(R), tuple(names))
            return FALSE
        if rule.kind == "formula":
            side = rule.side or (1 if w1 == full else 2 if w2 == full else 0)
            if (side == 1 and w1 == full) or (side == 2 and w2 == full):
                return rename_relations(rule.formula, {r: pr(r) for r in tau_plus.names})
            return FALSE
        if rule.kind == "hash":
            from .addition import _Decider
            keys = sorted((a, b) for (o, r, x1, x2, a, b) in realized
                          if o == oname and r == R and x1 == w1 and x2 == w2)
            out = []
            for k1, k2 in keys:
                q1, q2 = QfType.from_key(k1), QfType.from_key(k2)
                p = _sigma_from_types(n, w1, w2, q1, q2)
                if _Decider(s, None, None, None).apply_rule(rule, R, tuple(range(n)), w1, w2, p, q1, q2):
                    out.append(pair(k1, k2))
            return disj(*out)
        raise TranslationError(f"unknown rule {rule.kind}")

    tbl = s.tables.get((R, w1, w2))
    if tbl is None:
        return rule_formula(s.default_rule, s.default)
    true_keys, all_keys = [], []
    for (p, k1, k2), v in sorted(tbl.entries.items()):
        q1, q2 = QfType.from_key(k1), QfType.from_key(k2)
        if _sigma_from_types(n, w1, w2, q1, q2) != p:
            continue                      # key cannot occur for mark-free operands
        all_keys.append(pair(k1, k2))
        if v:
            true_keys.append(pair(k1, k2))
    fallback = rule_formula(tbl.rule, tbl.default)
    if not all_keys:
        return fallback
    return disj(*true_keys, conj(Not(disj(*all_keys)), fallback))


# ---------------------------------------------------------------------------
# verification

@dataclass
class TranslationReport:
    source: str
    target: str
    direction: str
    metrics: dict
    symbol_map: dict
    residual_symbols: list
    samples: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(1 for s in self.samples if not s["iso"])

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {
            "source": self.source, "target": self.target, "direction": self.direction,
            "metrics": self.metrics, "symbol_map": self.symbol_map,
            "residual_symbols": self.residual_symbols, "samples": self.samples,
            "failures": self.failures, "passed": self.passed, "notes": self.notes,
        }


def verify_pw_to_const(spec: PWClassSpec, terms) -> TranslationReport:
    terms = list(terms)
    tr = pw_to_const(spec, terms)
    rep = TranslationReport(spec.name, tr.target.name, "pw2const",
                            {"bases": len(spec.bases), "ops": len(tr.target.ops)},
                            {}, [])
    for t in terms:
        M = eval_term(spec, t)
        ct = tr.translate(t)
        N = eval_construction(tr.target, ct).structure
        ok, _ = iso_check(M, N)
        rep.samples.append({"term": str(t), "translated": str(ct), "iso": ok})
    return rep


def verify_const_to_pw(spec: ConstructibleSpec, terms, reference: ConstructibleSpec | None = None,
                       ) -> TranslationReport:
    """Compile ``spec`` and compare against evaluation in ``reference`` (default: spec itself).

    A reference that differs from spec (say, one corrupted table) must
    produce recorded mismatches.
    """
    terms = list(terms)
    reference = reference or spec
    realized: set = set()
    source_vals = []
    for t in terms:
        source_vals.append(eval_construction(reference, t, realized=realized).structure)
        if reference is not spec:
            eval_construction(spec, t, realized=realized)
    tr = const_to_pw(spec, realized)
    k = len([s for s in spec.tau_plus.symbols if s[0] not in spec.tau])
    metrics = {"k": k, "tau": len(spec.tau.symbols),
               "k_prime": tr.k_prime,
               "expected_k_prime": 2 * (k + len(spec.tau.symbols)) + 2,
               "bases": len(spec.bases), "ops": len(spec.ops)}
    residual = sorted(set(tr.target.vocabulary.names) - set(spec.tau_plus.names))
    symbol_map = {R: tr.prime[R] for R in spec.tau_plus.names}
    symbol_map.update({"side1": tr.tags[0], "side2": tr.tags[1]})
    rep = TranslationReport(spec.name, tr.target.name, "const2pw", metrics, symbol_map, residual,
                            notes=list(tr.notes))
    for t, M in zip(terms, source_vals):
        pt = tr.translate(t)
        N = reduct(eval_term(tr.target, pt), spec.tau_plus)
        ok, _ = iso_check(reduct(M, spec.tau_plus), N)
        rep.samples.append({"term": str(t), "iso": ok, "patch_size": pt.size})
    return rep


def roundtrip_verify(spec, sample_size: int, seed: int = 0, depth: int = 3,
                     reference=None) -> TranslationReport:
    rng = random.Random(seed)
    if isinstance(spec, PWClassSpec):
        terms = [random_term(spec, rng, depth) for _ in range(sample_size)]
        return verify_pw_to_const(spec, terms)
    terms = [random_cterm(spec, rng, depth) for _ in range(sample_size)]
    return verify_const_to_pw(spec, terms, reference)
