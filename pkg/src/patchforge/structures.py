"""Finite relational structures and the basic operations on them."""
from __future__ import annotations

import itertools
import json
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Iterable, Mapping, Sequence

Elem = Hashable

_fresh_counter = itertools.count(1)
_fresh_lock = threading.Lock()
_fresh_floor = 0


def fresh_id() -> int:
    """Return a globally fresh element id."""
    with _fresh_lock:
        return next(_fresh_counter) + _fresh_floor


def reserve_ids(ids: Iterable[Elem]) -> None:
    """Make sure future fresh ids never collide with the given integer ids."""
    global _fresh_counter, _fresh_floor
    top = max((i for i in ids if isinstance(i, int) and not isinstance(i, bool)), default=None)
    if top is None:
        return
    with _fresh_lock:
        nxt = next(_fresh_counter) + _fresh_floor
        if top >= nxt:
            _fresh_floor = top + 1
            _fresh_counter = itertools.count(0)
        else:
            _fresh_counter = itertools.count(nxt - _fresh_floor)


class StructureError(ValueError):
    pass


class OverlappingUniverses(StructureError):
    pass


def mark_symbol(i: int) -> str:
    """Unary predicate naming the i-th mark of a const structure (1-based)."""
    return f"@{i}"


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        names = [n for n, _ in self.symbols]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate symbol names in {names}")
        for n, a in self.symbols:
            if a < 0:
                raise StructureError(f"negative arity for {n}")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "Vocabulary":
        return cls(tuple((str(n), int(a)) for n, a in pairs))

    @cached_property
    def _arity(self) -> dict[str, int]:
        return dict(self.symbols)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.symbols)

    @property
    def nice(self) -> bool:
        return all(a > 0 for _, a in self.symbols)

    def arity(self, name: str) -> int:
        try:
            return self._arity[name]
        except KeyError:
            raise StructureError(f"symbol {name!r} not in vocabulary") from None

    def __contains__(self, name: object) -> bool:
        return name in self._arity

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def with_colors(self, k: int, prefix: str = "P") -> "Vocabulary":
        """tau_k: add fresh unary P_1..P_k."""
        return self.extend([(f"{prefix}{i}", 1) for i in range(1, k + 1)])

    def extend(self, pairs: Iterable[tuple[str, int]]) -> "Vocabulary":
        return Vocabulary(self.symbols + tuple(pairs))

    def union(self, other: "Vocabulary") -> "Vocabulary":
        extra = []
        for n, a in other.symbols:
            if n in self:
                if self.arity(n) != a:
                    raise StructureError(f"arity clash for {n}")
            else:
                extra.append((n, a))
        return self.extend(extra)

    def restrict_to(self, names: Iterable[str]) -> "Vocabulary":
        keep = set(names)
        return Vocabulary(tuple(s for s in self.symbols if s[0] in keep))

    def issubset(self, other: "Vocabulary") -> bool:
        return all(n in other and other.arity(n) == a for n, a in self.symbols)

    def nullary(self) -> "Vocabulary":
        return Vocabulary(tuple(s for s in self.symbols if s[1] == 0))


@dataclass(frozen=True, eq=False)
class Structure:
    vocabulary: Vocabulary
    universe: tuple
    relations: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def build(cls, vocabulary: Vocabulary, universe: Iterable[Elem],
              relations: Mapping[str, Any] | None = None) -> "Structure":
        """Normalize relation tables; missing symbols are empty / false."""
        relations = dict(relations or {})
        rels: dict[str, Any] = {}
        for name, arity in vocabulary.symbols:
            val = relations.pop(name, None)
            if arity == 0:
                rels[name] = bool(val)
            else:
                rels[name] = frozenset(tuple(t) for t in (val or ()))
        if relations:
            raise StructureError(f"relations for unknown symbols: {sorted(relations)}")
        universe = tuple(universe)
        reserve_ids(universe)
        return cls(vocabulary, universe, rels)

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return (self.vocabulary == other.vocabulary
                and self.universe == other.universe
                and dict(self.relations) == dict(other.relations))

    def __len__(self) -> int:
        return len(self.universe)

    def __repr__(self):
        rels = ", ".join(f"{n}={self.rel(n) if a == 0 else len(self.rel(n))}"
                         for n, a in self.vocabulary.symbols)
        return f"Structure(|M|={len(self.universe)}, {rels})"

    @cached_property
    def elements(self) -> frozenset:
        return frozenset(self.universe)

    def rel(self, name: str):
        return self.relations[name]

    def holds(self, name: str, args: Sequence[Elem] = ()) -> bool:
        val = self.relations[name]
        if isinstance(val, bool):
            return val
        return tuple(args) in val

    @cached_property
    def atom_index(self) -> dict[tuple, frozenset[str]]:
        """Map each tuple occurring in some relation to the symbols containing it."""
        idx: dict[tuple, set[str]] = {}
        for name, arity in self.vocabulary.symbols:
            if arity == 0:
                continue
            for t in self.relations[name]:
                idx.setdefault(t, set()).add(name)
        return {t: frozenset(s) for t, s in idx.items()}

    @cached_property
    def true_nullary(self) -> frozenset[str]:
        return frozenset(n for n, a in self.vocabulary.symbols if a == 0 and self.relations[n])

    def with_relations(self, **changes) -> "Structure":
        rels = dict(self.relations)
        rels.update(changes)
        return Structure.build(self.vocabulary, self.universe, rels)


@dataclass(frozen=True)
class ColoredStructure:
    structure: Structure
    k: int

    def color_names(self) -> list[str]:
        return [f"P{i}" for i in range(1, self.k + 1)]

    def color_of(self, a: Elem) -> int:
        for i in range(1, self.k + 1):
            if (a,) in self.structure.rel(f"P{i}"):
                return i
        raise StructureError(f"element {a!r} uncolored")


@dataclass(frozen=True)
class ConstStructure:
    """A structure with k marked elements; marks may repeat."""
    structure: Structure
    marks: tuple = ()

    @property
    def k(self) -> int:
        return len(self.marks)

    @property
    def universe(self) -> tuple:
        return self.structure.universe

    def expanded(self) -> Structure:
        """The tau_k-structure in which each mark predicate is a singleton."""
        M = self.structure
        vocab = M.vocabulary.extend((mark_symbol(i), 1) for i in range(1, self.k + 1))
        rels = dict(M.relations)
        for i, a in enumerate(self.marks, 1):
            rels[mark_symbol(i)] = {(a,)}
        return Structure.build(vocab, M.universe, rels)


def make_null(X: Iterable[str] = (), vocabulary: Vocabulary | None = None) -> Structure:
    """Null_X: empty universe, 0-ary symbol R true iff R in X."""
    X = set(X)
    if vocabulary is None:
        vocabulary = Vocabulary(tuple((n, 0) for n in sorted(X)))
    vocabulary = vocabulary.nullary()
    missing = X - set(vocabulary.names)
    if missing:
        raise StructureError(f"Null_X names non-nullary or unknown symbols {sorted(missing)}")
    return Structure.build(vocabulary, (), {n: n in X for n in vocabulary.names})


def is_null(M: Structure) -> bool:
    return not M.universe and all(a == 0 for _, a in M.vocabulary.symbols)


# ---------------------------------------------------------------------------
# validation

def validate(M: Structure | ColoredStructure | ConstStructure) -> list[str]:
    if isinstance(M, ColoredStructure):
        diags = validate(M.structure)
        S = M.structure
        if any(a == 0 for _, a in S.vocabulary.symbols):
            diags.append("colored structure carries 0-ary symbols")
        seen: dict = {}
        ok = True
        for i in range(1, M.k + 1):
            name = f"P{i}"
            if name not in S.vocabulary or S.vocabulary.arity(name) != 1:
                diags.append(f"missing color symbol {name}")
                ok = False
                continue
            for (a,) in S.rel(name):
                if a in seen:
                    ok = False
                seen[a] = i
        if ok and set(seen) != S.elements:
            ok = False
        if not ok and "colors not a partition" not in diags:
            diags.append("colors not a partition")
        return diags
    if isinstance(M, ConstStructure):
        diags = validate(M.structure)
        if any(a not in M.structure.elements for a in M.marks):
            diags.append("mark out of universe")
        return diags
    diags = []
    if len(set(M.universe)) != len(M.universe):
        diags.append("duplicate element ids")
    for name, arity in M.vocabulary.symbols:
        if name not in M.relations:
            diags.append(f"missing interpretation for {name}")
            continue
        val = M.relations[name]
        if arity == 0:
            if not isinstance(val, bool):
                diags.append(f"0-ary symbol {name} not boolean")
            continue
        for t in val:
            if len(t) != arity:
                diags.append(f"arity mismatch in {name}")
                break
        if any(x not in M.elements for t in val for x in t):
            if "tuple out of universe" not in diags:
                diags.append("tuple out of universe")
    return diags


# ---------------------------------------------------------------------------
# basic operations

def reduct(M: Structure, vocabulary: Vocabulary | Iterable[str]) -> Structure:
    if not isinstance(vocabulary, Vocabulary):
        names = list(vocabulary)
        for n in names:
            if n not in M.vocabulary:
                raise StructureError(f"symbol {n!r} not present")
        vocabulary = Vocabulary(tuple((n, M.vocabulary.arity(n)) for n in names))
    for n, a in vocabulary.symbols:
        if n not in M.vocabulary or M.vocabulary.arity(n) != a:
            raise StructureError(f"symbol {n!r} not present")
    return Structure(vocabulary, M.universe, {n: M.relations[n] for n in vocabulary.names})


def restrict(M: Structure, A: Iterable[Elem]) -> Structure:
    A = set(A)
    if not A <= M.elements:
        raise StructureError("restriction set not contained in universe")
    rels = {}
    for name, arity in M.vocabulary.symbols:
        val = M.relations[name]
        if arity == 0:
            rels[name] = val
        else:
            rels[name] = frozenset(t for t in val if all(x in A for x in t))
    return Structure(M.vocabulary, tuple(x for x in M.universe if x in A), rels)


def disjoint_union(M1: Structure, M2: Structure) -> Structure:
    """Union of universes and tables; 0-ary symbols are OR-ed."""
    if M1.elements & M2.elements:
        raise OverlappingUniverses("universes share element ids")
    vocab = M1.vocabulary.union(M2.vocabulary)
    rels = {}
    for name, arity in vocab.symbols:
        a = M1.relations.get(name, False if arity == 0 else frozenset())
        b = M2.relations.get(name, False if arity == 0 else frozenset())
        rels[name] = (a or b) if arity == 0 else (a | b)
    return Structure(vocab, M1.universe + M2.universe, rels)


def relabel(M: Structure, mapping: Mapping[Elem, Elem]) -> Structure:
    """Rename elements; ids missing from the mapping are kept.

    Mapping two ids to one is rejected, but mapping onto an id used by another
    structure is how deliberate sharing is built.
    """
    f = lambda x: mapping.get(x, x)
    new_universe = tuple(f(x) for x in M.universe)
    if len(set(new_universe)) != len(new_universe):
        raise StructureError("relabeling is not injective")
    rels = {}
    for name, arity in M.vocabulary.symbols:
        val = M.relations[name]
        rels[name] = val if arity == 0 else frozenset(tuple(f(x) for x in t) for t in val)
    return Structure(M.vocabulary, new_universe, rels)


def share(M: Structure, old: Elem, new: Elem) -> Structure:
    """Rename one element to an existing id elsewhere, creating overlap on purpose."""
    return relabel(M, {old: new})


def freshen(M: Structure) -> tuple[Structure, dict]:
    reserve_ids(M.universe)
    mapping = {x: fresh_id() for x in M.universe}
    return relabel(M, mapping), mapping


def normalized(M: Structure) -> Structure:
    """Relabel elements to 0..n-1 in universe order."""
    return relabel_positional(M)


def relabel_positional(M: Structure) -> Structure:
    mapping = {x: i for i, x in enumerate(M.universe)}
    f = mapping.__getitem__
    rels = {}
    for name, arity in M.vocabulary.symbols:
        val = M.relations[name]
        rels[name] = val if arity == 0 else frozenset(tuple(f(x) for x in t) for t in val)
    return Structure(M.vocabulary, tuple(range(len(M.universe))), rels)


# ---------------------------------------------------------------------------
# quantifier-free types

@dataclass(frozen=True)
class QfType:
    """Canonical quantifier-free type of a tuple.

    ``eq[i]`` is the first position holding the same element as position i.
    ``atoms`` lists the true atoms ``(name, positions)`` over first-occurrence
    positions only; all other atoms are false.  ``nullary`` names the true
    0-ary symbols.
    """
    eq: tuple[int, ...]
    atoms: frozenset
    nullary: frozenset = frozenset()

    @property
    def arity(self) -> int:
        return len(self.eq)

    @cached_property
    def key(self) -> str:
        atoms = sorted((n, list(p)) for n, p in self.atoms)
        return json.dumps([list(self.eq), atoms, sorted(self.nullary)], separators=(",", ":"))

    @classmethod
    def from_key(cls, key: str) -> "QfType":
        eq, atoms, nullary = json.loads(key)
        return cls(tuple(eq), frozenset((n, tuple(p)) for n, p in atoms), frozenset(nullary))

    def holds(self, name: str, positions: Sequence[int] = ()) -> bool:
        if not positions and name in self.nullary:
            return True
        return (name, tuple(self.eq[i] for i in positions)) in self.atoms

    def equal(self, i: int, j: int) -> bool:
        return self.eq[i] == self.eq[j]

    def literals(self, vocabulary: Vocabulary) -> list[tuple[bool, str, tuple]]:
        """All atomic literals (sign, symbol, positions) over canonical positions."""
        reps = sorted(set(self.eq))
        out = []
        for i in range(len(self.eq)):
            for j in range(i + 1, len(self.eq)):
                out.append((self.eq[i] == self.eq[j], "=", (i, j)))
        for name, arity in vocabulary.symbols:
            if arity == 0:
                out.append((name in self.nullary, name, ()))
                continue
            for pos in itertools.product(reps, repeat=arity):
                out.append(((name, pos) in self.atoms, name, pos))
        return out

    def restrict_positions(self, positions: Sequence[int]) -> "QfType":
        """Type of the subtuple at the given positions."""
        new_eq = []
        first: dict[int, int] = {}
        for i, p in enumerate(positions):
            c = self.eq[p]
            first.setdefault(c, i)
            new_eq.append(first[c])
        atoms = set()
        for name, pos in self.atoms:
            if all(c in first for c in pos):
                atoms.add((name, tuple(first[c] for c in pos)))
        return QfType(tuple(new_eq), frozenset(atoms), self.nullary)


def qf_type(args: Sequence[Elem], M: Structure) -> QfType:
    args = tuple(args)
    for a in args:
        if a not in M.elements:
            raise StructureError(f"element {a!r} not in universe")
    first: dict = {}
    eq = []
    for i, a in enumerate(args):
        first.setdefault(a, i)
        eq.append(first[a])
    reps = sorted(set(eq))
    rep_elems = [args[i] for i in reps]
    idx = M.atom_index
    atoms = set()
    arities = sorted({a for _, a in M.vocabulary.symbols if a > 0})
    for r in arities:
        for combo in itertools.product(range(len(reps)), repeat=r):
            names = idx.get(tuple(rep_elems[c] for c in combo))
            if names:
                pos = tuple(reps[c] for c in combo)
                for n in names:
                    if M.vocabulary.arity(n) == r:
                        atoms.add((n, pos))
    return QfType(tuple(eq), frozenset(atoms), M.true_nullary)


# ---------------------------------------------------------------------------
# isomorphism

def _signature(M: Structure) -> dict:
    """Per-element invariant: 1-type plus per-relation/position occurrence counts."""
    sig: dict = {x: [] for x in M.universe}
    for name, arity in M.vocabulary.symbols:
        if arity == 0:
            continue
        counts = {x: [0] * arity for x in M.universe}
        diag = {x: False for x in M.universe}
        for t in M.relations[name]:
            for i, x in enumerate(t):
                counts[x][i] += 1
            if len(set(t)) == 1:
                diag[t[0]] = True
        for x in M.universe:
            sig[x].append((name, diag[x], tuple(counts[x])))
    return {x: tuple(v) for x, v in sig.items()}


def iso_check(M1: Structure, M2: Structure) -> tuple[bool, dict | None]:
    """Exact backtracking isomorphism test; returns (verdict, witness)."""
    if len(M1.universe) != len(M2.universe):
        return False, None
    if set(M1.vocabulary.symbols) != set(M2.vocabulary.symbols):
        return False, None
    for name, arity in M1.vocabulary.symbols:
        v1, v2 = M1.relations[name], M2.relations[name]
        if arity == 0:
            if v1 != v2:
                return False, None
        elif len(v1) != len(v2):
            return False, None
    s1, s2 = _signature(M1), _signature(M2)
    from collections import Counter
    if Counter(s1.values()) != Counter(s2.values()):
        return False, None
    by_sig: dict = {}
    for y in M2.universe:
        by_sig.setdefault(s2[y], []).append(y)
    # order: rarest signature first, then by connectivity
    order = sorted(M1.universe, key=lambda x: (len(by_sig[s1[x]]), str(s1[x])))
    inc1 = _incidence(M1)
    inc2 = _incidence(M2)
    rels = [n for n, a in M1.vocabulary.symbols if a > 0]
    fwd: dict = {}
    bwd: dict = {}

    def consistent(x, y) -> bool:
        for name in rels:
            R2 = M2.relations[name]
            for t in inc1[name].get(x, ()):
                if all(z in fwd or z == x for z in t):
                    if tuple(y if z == x else fwd[z] for z in t) not in R2:
                        return False
            R1 = M1.relations[name]
            for t in inc2[name].get(y, ()):
                if all(z in bwd or z == y for z in t):
                    if tuple(x if z == y else bwd[z] for z in t) not in R1:
                        return False
        return True

    def search(i: int) -> bool:
        if i == len(order):
            return True
        x = order[i]
        for y in by_sig[s1[x]]:
            if y in bwd or not consistent(x, y):
                continue
            fwd[x] = y
            bwd[y] = x
            if search(i + 1):
                return True
            del fwd[x]
            del bwd[y]
        return False

    if search(0):
        return True, dict(fwd)
    return False, None


def _incidence(M: Structure) -> dict:
    inc: dict = {}
    for name, arity in M.vocabulary.symbols:
        if arity == 0:
            continue
        d: dict = {}
        for t in M.relations[name]:
            for x in set(t):
                d.setdefault(x, []).append(t)
        inc[name] = d
    return inc


def isomorphic(M1: Structure, M2: Structure) -> bool:
    return iso_check(M1, M2)[0]


# ---------------------------------------------------------------------------
# JSON

def _id_to_json(x):
    if isinstance(x, tuple):
        return [_id_to_json(y) for y in x]
    return x


def _id_from_json(x):
    if isinstance(x, list):
        return tuple(_id_from_json(y) for y in x)
    return x


def structure_to_dict(M: Structure | ColoredStructure | ConstStructure) -> dict:
    extra: dict = {}
    if isinstance(M, ColoredStructure):
        extra["colors"] = M.k
        M = M.structure
    elif isinstance(M, ConstStructure):
        extra["marks"] = [_id_to_json(a) for a in M.marks]
        M = M.structure
    rels: dict = {}
    for name, arity in M.vocabulary.symbols:
        val = M.relations[name]
        if arity == 0:
            rels[name] = bool(val)
        else:
            rels[name] = sorted(([_id_to_json(x) for x in t] for t in val), key=_sort_key)
    out = {
        "vocabulary": [[n, a] for n, a in M.vocabulary.symbols],
        "universe": [_id_to_json(x) for x in M.universe],
        "relations": rels,
    }
    out.update(extra)
    return out


def _sort_key(v):
    return json.dumps(v, sort_keys=True)


def structure_from_dict(d: Mapping) -> Structure | ColoredStructure | ConstStructure:
    vocab = Vocabulary.of(*[(n, a) for n, a in d["vocabulary"]])
    universe = [_id_from_json(x) for x in d["universe"]]
    rels = {}
    for name, arity in vocab.symbols:
        val = d.get("relations", {}).get(name, False if arity == 0 else [])
        if arity == 0:
            if not isinstance(val, bool):
                raise StructureError(f"0-ary symbol {name} needs a boolean")
            rels[name] = val
        else:
            rels[name] = [tuple(_id_from_json(x) for x in t) for t in val]
    extra = set(d.get("relations", {})) - set(vocab.names)
    if extra:
        raise StructureError(f"relations for unknown symbols: {sorted(extra)}")
    M = Structure.build(vocab, universe, rels)
    reserve_ids(universe)
    if "marks" in d and d["marks"] is not None:
        return ConstStructure(M, tuple(_id_from_json(x) for x in d["marks"]))
    if "colors" in d and d["colors"] is not None:
        return ColoredStructure(M, int(d["colors"]))
    return M


def dumps(M) -> str:
    return json.dumps(structure_to_dict(M), sort_keys=True)


def loads(text: str):
    return structure_from_dict(json.loads(text))
