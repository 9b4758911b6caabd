"""Patch-width term algebra: disjoint union, recoloring and quantifier-free modification."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .mso import Checker, Formula, free_vars, parse, qdepth, to_text, xvars
from .mso.sexpr import Quoted, quote, read_text
from .structures import (
    ColoredStructure, Structure, StructureError, Vocabulary, disjoint_union, freshen,
    structure_from_dict, structure_to_dict, validate,
)


class PatchError(ValueError):
    pass


@dataclass(frozen=True)
class PWClassSpec:
    """Generating data of a patch-width class.

    ``mode`` is "colored" (k disjoint colors P1..Pk) or "m_ary" (arbitrary
    auxiliary relations ``aux``).  Bases are structures over the working
    vocabulary.  ``formula_pool`` lists the (R, body) pairs term enumeration
    may use for modifications.
    """
    tau: Vocabulary
    mode: str = "colored"
    k: int = 1
    aux: Vocabulary = Vocabulary()
    bases: Mapping[str, Structure] = field(default_factory=dict)
    formula_pool: tuple[tuple[str, Formula], ...] = ()
    name: str = "pw"

    @property
    def vocabulary(self) -> Vocabulary:
        if self.mode == "colored":
            return self.tau.with_colors(self.k)
        return self.tau.union(self.aux)

    @property
    def colors(self) -> int:
        """Number of recolorable predicates P1..Pk."""
        if self.mode == "colored":
            return self.k
        k = 0
        while f"P{k + 1}" in self.aux and self.aux.arity(f"P{k + 1}") == 1:
            k += 1
        return k

    @property
    def m(self) -> int:
        return max((a for _, a in self.aux.symbols), default=1 if self.mode == "colored" else 0)

    def modifiable(self) -> tuple[str, ...]:
        return self.tau.names if self.mode == "colored" else self.vocabulary.names

    def diagnostics(self) -> list[str]:
        out = []
        if not self.tau.nice:
            out.append("tau is not nice")
        V = self.vocabulary
        for name, B in self.bases.items():
            if B.vocabulary != V:
                out.append(f"base {name}: vocabulary differs from working vocabulary")
                continue
            d = validate(ColoredStructure(B, self.k)) if self.mode == "colored" else validate(B)
            out.extend(f"base {name}: {x}" for x in d)
        for R, body in self.formula_pool:
            try:
                check_body(self, R, body)
            except PatchError as e:
                out.append(f"pool entry {R}: {e}")
        return out


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True)
class PatchTerm:
    op: str                         # leaf | union | recolor | modify
    name: str = ""                  # base name for leaves
    args: tuple["PatchTerm", ...] = ()
    i: int = 0
    j: int = 0
    rel: str = ""
    body: Formula | None = None

    def __str__(self):
        return term_to_text(self)

    @property
    def size(self) -> int:
        return 1 + sum(a.size for a in self.args)

    @property
    def height(self) -> int:
        return 1 + max((a.height for a in self.args), default=0)

    def leaves(self) -> list[str]:
        if self.op == "leaf":
            return [self.name]
        return [n for a in self.args for n in a.leaves()]


def leaf(name: str) -> PatchTerm:
    return PatchTerm("leaf", name=name)


def union(t1: PatchTerm, t2: PatchTerm) -> PatchTerm:
    return PatchTerm("union", args=(t1, t2))


def recolor_term(i: int, j: int, t: PatchTerm) -> PatchTerm:
    return PatchTerm("recolor", args=(t,), i=i, j=j)


def modify_term(R: str, body: Formula | str, t: PatchTerm) -> PatchTerm:
    if isinstance(body, str):
        body = parse(body)
    return PatchTerm("modify", args=(t,), rel=R, body=body)


def term_to_text(t: PatchTerm) -> str:
    if t.op == "leaf":
        return t.name
    if t.op == "union":
        return f"(u {term_to_text(t.args[0])} {term_to_text(t.args[1])})"
    if t.op == "recolor":
        return f"(rho {t.i} {t.j} {term_to_text(t.args[0])})"
    return f"(delta {t.rel} {quote(to_text(t.body))} {term_to_text(t.args[0])})"


def term_from_text(text: str) -> PatchTerm:
    return _term(read_text(text))


def _term(e) -> PatchTerm:
    if isinstance(e, str):
        if isinstance(e, Quoted):
            raise PatchError("unexpected string where a term was expected")
        return leaf(e)
    if not e:
        raise PatchError("empty term")
    head = e[0]
    if head == "u" and len(e) == 3:
        return union(_term(e[1]), _term(e[2]))
    if head == "rho" and len(e) == 4:
        try:
            return recolor_term(int(e[1]), int(e[2]), _term(e[3]))
        except ValueError:
            raise PatchError("rho indices must be integers") from None
    if head == "delta" and len(e) == 4 and isinstance(e[2], Quoted):
        return modify_term(e[1], parse(e[2]), _term(e[3]))
    raise PatchError(f"malformed term {e!r}")


# ---------------------------------------------------------------------------
# operations

def recolor(M: Structure | ColoredStructure, i: int, j: int, k: int | None = None):
    """Move every element of color P_i to P_j."""
    colored = isinstance(M, ColoredStructure)
    S = M.structure if colored else M
    if colored:
        k = M.k
    if k is not None and not (1 <= i <= k and 1 <= j <= k):
        raise PatchError(f"recolor indices {i},{j} out of range 1..{k}")
    Pi, Pj = f"P{i}", f"P{j}"
    for P in (Pi, Pj):
        if P not in S.vocabulary or S.vocabulary.arity(P) != 1:
            raise PatchError(f"no unary color symbol {P}")
    if i != j:
        S = S.with_relations(**{Pj: S.rel(Pj) | S.rel(Pi), Pi: frozenset()})
    return ColoredStructure(S, k) if colored else S


def check_body(spec_or_vocab, R: str, body: Formula) -> None:
    V = spec_or_vocab.vocabulary if isinstance(spec_or_vocab, PWClassSpec) else spec_or_vocab
    if R not in V:
        raise PatchError(f"unknown relation {R}")
    if isinstance(spec_or_vocab, PWClassSpec) and R not in spec_or_vocab.modifiable():
        raise PatchError(f"relation {R} may not be modified in {spec_or_vocab.mode} mode")
    if qdepth(body) != 0:
        raise PatchError("modification body is not quantifier-free")
    ev, sv = free_vars(body)
    n = V.arity(R)
    if sv or not ev <= set(xvars(n)):
        raise PatchError(f"body free variables {sorted(ev | sv)} exceed x1..x{n}")


def modify(M: Structure, R: str, body: Formula | str) -> Structure:
    """Redefine R as the set of tuples satisfying the quantifier-free body."""
    if isinstance(body, str):
        body = parse(body)
    check_body(M.vocabulary, R, body)
    n = M.vocabulary.arity(R)
    ck = Checker(M)
    fn = ck.compile(body)
    names = xvars(n)
    if n == 0:
        return M.with_relations(**{R: bool(fn({}))})
    elems = ck.elems
    table = set()
    for combo in itertools.product(range(len(elems)), repeat=n):
        if fn(dict(zip(names, combo))):
            table.add(tuple(elems[c] for c in combo))
    return M.with_relations(**{R: frozenset(table)})


def eval_term(spec: PWClassSpec, t: PatchTerm) -> Structure:
    if t.op == "leaf":
        if t.name not in spec.bases:
            raise PatchError(f"unknown base {t.name!r}")
        return freshen(spec.bases[t.name])[0]
    if t.op == "union":
        return disjoint_union(eval_term(spec, t.args[0]), eval_term(spec, t.args[1]))
    if t.op == "recolor":
        return recolor(eval_term(spec, t.args[0]), t.i, t.j, spec.colors)
    if t.op == "modify":
        check_body(spec, t.rel, t.body)
        return modify(eval_term(spec, t.args[0]), t.rel, t.body)
    raise PatchError(f"unknown constructor {t.op}")


def enumerate_terms(spec: PWClassSpec, size_bound: int) -> Iterator[PatchTerm]:
    """Every term of height at most size_bound, lowest first.

    A leaf has height 1 and each operation adds one level above its deepest
    argument.  The order is fixed, so the stream is prefix-stable across runs.
    """
    by_height: dict[int, list[PatchTerm]] = {}
    below: list[PatchTerm] = []          # all terms of height < h
    k = spec.colors
    for h in range(1, size_bound + 1):
        out: list[PatchTerm] = []
        if h == 1:
            out = [leaf(n) for n in sorted(spec.bases)]
        else:
            top = by_height[h - 1]
            lower = below[:len(below) - len(top)]
            for t1 in top:
                for t2 in lower + top:
                    out.append(union(t1, t2))
            for t1 in lower:
                for t2 in top:
                    out.append(union(t1, t2))
            for t in top:
                for i in range(1, k + 1):
                    for j in range(1, k + 1):
                        out.append(recolor_term(i, j, t))
                for R, body in spec.formula_pool:
                    out.append(modify_term(R, body, t))
        by_height[h] = out
        below = below + out
        yield from out


# ---------------------------------------------------------------------------
# JSON

def spec_from_dict(d: Mapping, name: str = "pw") -> PWClassSpec:
    tau = Vocabulary.of(*[tuple(x) for x in d["tau"]])
    mode = d.get("mode", {"colored": 1})
    if "colored" in mode:
        m, k, aux = "colored", int(mode["colored"]), Vocabulary()
    elif "m_ary" in mode:
        aux = Vocabulary.of(*[tuple(x) for x in mode["m_ary"].get("aux", [])])
        m, k = "m_ary", len(aux.symbols)
    else:
        raise PatchError("mode must be colored or m_ary")
    bases = {}
    for bname, bd in d.get("bases", {}).items():
        B = structure_from_dict(bd)
        bases[bname] = B.structure if isinstance(B, ColoredStructure) else B
    pool = []
    for item in d.get("formula_pool", []):
        R, body = item
        pool.append((R, parse(body)))
    spec = PWClassSpec(tau, m, k, aux, bases, tuple(pool), d.get("name", name))
    return spec


def spec_to_dict(spec: PWClassSpec) -> dict:
    mode = ({"colored": spec.k} if spec.mode == "colored"
            else {"m_ary": {"aux": [list(s) for s in spec.aux.symbols]}})
    bases = {}
    for n, B in sorted(spec.bases.items()):
        bd = structure_to_dict(ColoredStructure(B, spec.k) if spec.mode == "colored" else B)
        bases[n] = bd
    return {
        "name": spec.name,
        "tau": [list(s) for s in spec.tau.symbols],
        "mode": mode,
        "bases": bases,
        "formula_pool": [[R, to_text(b)] for R, b in spec.formula_pool],
    }


def as_colored(spec: PWClassSpec, M: Structure) -> ColoredStructure:
    if spec.mode != "colored":
        raise StructureError("not a colored-mode spec")
    return ColoredStructure(M, spec.k)


def random_term(spec: PWClassSpec, rng, depth: int = 3) -> PatchTerm:
    """Random term of height at most depth + 1, drawn with the given rng."""
    names = sorted(spec.bases)
    if depth <= 0 or rng.random() < 0.25:
        return leaf(rng.choice(names))
    r = rng.random()
    if r < 0.45:
        return union(random_term(spec, rng, depth - 1), random_term(spec, rng, depth - 1))
    if r < 0.7 and spec.colors:
        k = spec.colors
        return recolor_term(rng.randint(1, k), rng.randint(1, k), random_term(spec, rng, depth - 1))
    if spec.formula_pool:
        R, body = rng.choice(spec.formula_pool)
        return modify_term(R, body, random_term(spec, rng, depth - 1))
    return union(random_term(spec, rng, depth - 1), random_term(spec, rng, depth - 1))
