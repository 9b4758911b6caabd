"""Ehrenfeucht-Fraisse characteristics as canonical stand-ins for MSO q-theories.

ch_0(a, U) is the quantifier-free type of the tuple a together with the
membership pattern of a in the sets U.  ch_{q+1}(a, U) is the set of
characteristics reachable in one move: an element move appends b to a, a set
move appends a subset to U.  Each move costs one level, so two structures have
equal ch_q iff they satisfy the same MSO sentences of quantifier depth <= q.

Characteristics are Merkle digests, so equality is a string comparison and
results are stable across processes.
"""
from __future__ import annotations

import hashlib
import itertools
import threading
from dataclasses import dataclass

from ..structures import ColoredStructure, ConstStructure, Structure

DEFAULT_MAX_SIZE = 10


class CapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class TypeHandle:
    digest: str
    q: int
    arity: int
    vocabulary: tuple

    def __str__(self):
        return f"ch{self.q}:{self.digest}"


class _Registry:
    """Interning table digest -> canonical content; atomic insert-if-absent."""

    def __init__(self):
        self._lock = threading.Lock()
        self._table: dict[str, object] = {}

    def intern(self, digest: str, content) -> str:
        with self._lock:
            self._table.setdefault(digest, content)
        return digest

    def get(self, digest: str):
        return self._table.get(digest)

    def __len__(self):
        return len(self._table)


REGISTRY = _Registry()


def _digest(payload: str) -> str:
    return hashlib.blake2b(payload.encode(), digest_size=10).hexdigest()


def _as_structure(M) -> Structure:
    if isinstance(M, ConstStructure):
        return M.expanded()
    if isinstance(M, ColoredStructure):
        return M.structure
    return M


class _Engine:
    def __init__(self, M: Structure):
        self.M = M
        elems = list(M.universe)
        self.elems = elems
        self.pos = {x: i for i, x in enumerate(elems)}
        self.n = len(elems)
        self.symbols = []
        for name, arity in M.vocabulary.symbols:
            val = M.relations[name]
            if arity == 0:
                table = bool(val)
            else:
                table = frozenset(tuple(self.pos[x] for x in t) for t in val)
            self.symbols.append((name, arity, table))
        self.memo: dict = {}

    def base(self, a: tuple, U: tuple) -> str:
        reps: list[int] = []
        for x in a:
            if x not in reps:
                reps.append(x)
        eq = tuple(reps.index(x) for x in a)
        facts = []
        for _name, arity, table in self.symbols:
            if arity == 0:
                facts.append(table)
                continue
            for combo in itertools.product(range(len(reps)), repeat=arity):
                facts.append(tuple(reps[c] for c in combo) in table)
        mem = tuple(tuple(bool(m >> r & 1) for r in reps) for m in U)
        payload = repr((0, eq, tuple(facts), mem))
        d = _digest(payload)
        REGISTRY.intern(d, payload)
        return d

    def ch(self, q: int, a: tuple, U: tuple) -> str:
        key = (q, a, U)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if q == 0:
            d = self.base(a, U)
        else:
            kids = set()
            for b in range(self.n):
                kids.add("e" + self.ch(q - 1, a + (b,), U))
            if q == 1:
                # a level-0 child only sees the set through the tuple
                repmask = 0
                for x in a:
                    repmask |= 1 << x
                sub = repmask
                masks = []
                while True:
                    masks.append(sub)
                    if sub == 0:
                        break
                    sub = (sub - 1) & repmask
            else:
                masks = range(1 << self.n)
            for m in masks:
                kids.add("s" + self.ch(q - 1, a, U + (m,)))
            content = tuple(sorted(kids))
            d = _digest(repr((q, content)))
            REGISTRY.intern(d, content)
        self.memo[key] = d
        return d


_ENGINES: "dict[int, tuple[Structure, _Engine]]" = {}
_ENGINES_LOCK = threading.Lock()


def _engine(M: Structure) -> _Engine:
    # small identity-keyed cache so repeated queries on one structure share memo
    with _ENGINES_LOCK:
        hit = _ENGINES.get(id(M))
        if hit is not None and hit[0] is M:
            return hit[1]
        eng = _Engine(M)
        if len(_ENGINES) > 256:
            _ENGINES.clear()
        _ENGINES[id(M)] = (M, eng)
        return eng


def characteristic(M, args=(), q: int = 1, *, sets=(), max_size: int | None = None) -> TypeHandle:
    """Canonical rank-q characteristic of (M, args, sets)."""
    S = _as_structure(M)
    cap = DEFAULT_MAX_SIZE if max_size is None else max_size
    if q >= 2 and len(S.universe) > cap:
        raise CapExceeded(f"characteristic at q={q} capped at |M| <= {cap}, got {len(S.universe)}")
    if q < 0:
        raise ValueError("q must be non-negative")
    eng = _engine(S)
    try:
        a = tuple(eng.pos[x] for x in args)
    except KeyError as e:
        raise ValueError(f"element {e.args[0]!r} not in universe") from None
    U = []
    for s in sets:
        m = 0
        for x in s:
            m |= 1 << eng.pos[x]
        U.append(m)
    d = eng.ch(q, a, tuple(U))
    return TypeHandle(d, q, len(a), S.vocabulary.symbols)


def theory_eq(M, N, q: int, *, max_size: int | None = None) -> bool:
    return characteristic(M, (), q, max_size=max_size) == characteristic(N, (), q, max_size=max_size)
