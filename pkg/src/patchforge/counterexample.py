"""Distance residues on trees, the 4-ary scheme built from them, and its parameters.

d(x, y) is the number of nodes z with x^y <= z < x, i.e. the length of the
path from the meet down to x.  The scheme's universe is the set of leaves
and R(x1, x2, x3, x4) holds iff q(d_p(x1, x2), d_p(x3, x4)) = 0.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

from .mso import (
    Atom, Eq, Exists, ExistsSet, Forall, Formula, Implies, In, NameSupply, Not, conj, disj,
    exactly,
)
from .structures import Structure, Vocabulary
from .trees import InterpScheme, Tree, TreeError, complete_binary_tree, interpret

R4 = Vocabulary.of(("R", 4))
LEAF_X = "(not (exists y (and (le x y) (not (= x y)))))"
MAX_N = 4


class BudgetExceeded(RuntimeError):
    pass


def d(T: Tree, x, y) -> int:
    for a in (x, y):
        if not T.is_maximal(a):
            raise TreeError(f"{a!r} is not maximal")
    return T.depth(x) - T.depth(T.meet(x, y))


def d_p(T: Tree, x, y, p: int) -> int:
    return d(T, x, y) % p


# ---------------------------------------------------------------------------
# the residue formulas

def _le(a, b):
    return Atom("le", (a, b))


def _lt(a, b):
    return conj(_le(a, b), Not(Eq(a, b)))


def _strictly_between(n: int, a: str, b: str, sup: NameSupply) -> Formula:
    """a < b with exactly n nodes strictly between them."""
    return conj(_lt(a, b), exactly(n, "z", lambda v: conj(_lt(a, v), _lt(v, b)), sup))


def build_phi_dp(i: int, p: int, x: str = "x", y: str = "y") -> Formula:
    """phi(x, y): d(x, y) = i (mod p).

    X marks the path nodes at offsets 0, p, 2p, ... below the meet m.  The
    residue is read off the last marked node above x.
    """
    if not 0 <= i < p:
        raise ValueError("need 0 <= i < p")
    sup = NameSupply({x, y})
    m, X = sup.elem("m"), sup.elem("X")
    z, z1, z2, t, w = (sup.elem(b) for b in ("z", "a", "b", "t", "w"))
    is_meet = conj(_le(m, x), _le(m, y),
                   Forall(w, Implies(conj(_le(w, x), _le(w, y)), _le(w, m))))
    on_path = lambda v: conj(_le(m, v), _le(v, x))
    inside = Forall(z, Implies(In(z, X), on_path(z)))
    forward = Forall(z1, Implies(In(z1, X), Forall(z2, Implies(
        conj(_le(z2, x), _strictly_between(p - 1, z1, z2, sup)), In(z2, X)))))
    backward = Forall(z2, Implies(conj(In(z2, X), Not(Eq(z2, m))), Exists(z1, conj(
        In(z1, X), _strictly_between(p - 1, z1, z2, sup)))))
    if i == 0:
        tail = In(x, X)
    else:
        tail = Exists(t, conj(In(t, X), _strictly_between(i - 1, t, x, sup)))
    body = conj(inside, In(m, X), forward, backward, tail)
    return Exists(m, conj(is_meet, ExistsSet(X, body)))


# ---------------------------------------------------------------------------
# q tables and the scheme

@dataclass(frozen=True)
class QTable:
    p: int
    table: tuple[tuple[int, ...], ...]
    seed: int | None = None

    @classmethod
    def random(cls, p: int, seed: int) -> "QTable":
        rng = random.Random(seed)
        return cls(p, tuple(tuple(rng.randint(0, 1) for _ in range(p)) for _ in range(p)), seed)

    @classmethod
    def constant(cls, p: int, value: int = 0) -> "QTable":
        return cls(p, tuple(tuple(value for _ in range(p)) for _ in range(p)))

    @classmethod
    def from_function(cls, p: int, f) -> "QTable":
        return cls(p, tuple(tuple(int(f(i, j)) for j in range(p)) for i in range(p)))

    def __call__(self, i: int, j: int) -> int:
        return self.table[i][j]

    def to_dict(self) -> dict:
        return {"p": self.p, "seed": self.seed, "table": [list(r) for r in self.table]}


def build_scheme(p: int, qt: QTable) -> InterpScheme:
    """Universe: leaves.  R(x1..x4) iff q(d_p(x1,x2), d_p(x3,x4)) = 0.

    The scheme names two colors so that complete binary trees, which carry
    the successor colors, are valid inputs; no formula mentions them.
    """
    from .mso import parse
    if qt.p != p:
        raise ValueError("q table modulus differs from p")
    alts = [conj(build_phi_dp(n1, p, "x1", "x2"), build_phi_dp(n2, p, "x3", "x4"))
            for n1 in range(p) for n2 in range(p) if qt(n1, n2) == 0]
    return InterpScheme(R4, 0, 2, (parse(LEAF_X),), {("R", (0, 0, 0, 0)): disj(*alts)},
                        True, f"residues-p{p}")


def M_n(n: int) -> Tree:
    return complete_binary_tree(n)


def generate_Nn(n: int, scheme: InterpScheme) -> Structure:
    if n > MAX_N:
        raise BudgetExceeded(f"n={n} exceeds the materialization cap n <= {MAX_N}")
    return interpret(scheme, M_n(n))


def oracle_Nn(n: int, p: int, qt: QTable) -> set:
    T = M_n(n)
    L = T.leaves
    return {tuple((x, 0) for x in xs) for xs in itertools.product(L, repeat=4)
            if qt(d_p(T, xs[0], xs[1], p), d_p(T, xs[2], xs[3], p)) == 0}


# ---------------------------------------------------------------------------
# parameters

def _log2_exact(m: int) -> int | None:
    return m.bit_length() - 1 if m > 0 and m & (m - 1) == 0 else None


def exceeds(p: int, m: int, mode: str = "case1") -> bool:
    """p^2 > 2p log m + m^2 (case1) or p^2 > p log m + m p (case2), decided exactly."""
    if mode not in ("case1", "case2"):
        raise ValueError("mode is case1 or case2")
    L = _log2_exact(m)
    k = 2 if mode == "case1" else 1
    rest = m * m if mode == "case1" else m * p
    if L is not None:
        return p * p > k * p * L + rest
    lhs = p * p - rest
    # lhs > k p log2 m  <=>  2^lhs > m^(k p)
    return lhs > 0 and 2 ** lhs > m ** (k * p)


def choose_p(m: int, mode: str = "case1") -> int:
    """Least p satisfying the bound (the left side outgrows the right monotonically)."""
    if m < 2:
        raise ValueError("m must be at least 2")
    L = math.log2(m)
    if mode == "case1":
        est = int(L + math.sqrt(L * L + m * m))
    else:
        est = int(L + m)
    p = max(1, est - 2)
    while p > 1 and exceeds(p - 1, m, mode):
        p -= 1
    while not exceeds(p, m, mode):
        p += 1
    return p


def set_partitions(n: int, max_blocks: int):
    """Restricted-growth strings of length n with at most max_blocks blocks."""
    if n == 0:
        yield ()
        return

    def go(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(min(top + 2, max_blocks)):
            yield from go(prefix + [b], max(top, b))
    yield from go([0], 0)


def count_partitions(n: int, max_blocks: int) -> int:
    # Stirling numbers of the second kind, summed
    S = [[0] * (max_blocks + 1) for _ in range(n + 1)]
    S[0][0] = 1
    for i in range(1, n + 1):
        for k in range(1, max_blocks + 1):
            S[i][k] = k * S[i - 1][k] + S[i - 1][k - 1]
    return sum(S[n][1:]) if n else 1


def _respects(qt: QTable, pi1, pi2) -> bool:
    seen: dict = {}
    for i in range(qt.p):
        for j in range(qt.p):
            key = (pi1[i] if pi1 is not None else i, pi2[j] if pi2 is not None else j)
            if seen.setdefault(key, qt(i, j)) != qt(i, j):
                return False
    return True


def q_admissible(qt: QTable, m: int, mode: str = "case1", budget: int = 200_000,
                 axis: int = 2) -> bool:
    """True when qt respects no partition into at most m classes.

    case1: no pair of partitions (one per coordinate) such that q is constant on
    every product block.  case2: no single partition of coordinate ``axis``
    such that q(i, .) (or q(., j) for axis 1) is constant on its blocks.
    """
    P = count_partitions(qt.p, m)
    cost = P * P if mode == "case1" else P
    if cost > budget:
        raise BudgetExceeded(f"{cost} partition checks exceed the budget {budget}")
    parts = list(set_partitions(qt.p, m))
    if mode == "case1":
        return not any(_respects(qt, a, b) for a in parts for b in parts)
    if mode == "case2":
        if axis == 2:
            return not any(_respects(qt, None, b) for b in parts)
        return not any(_respects(qt, a, None) for a in parts)
    raise ValueError("mode is case1 or case2")


def admissible_closed_form(qt: QTable, m: int, mode: str = "case1", axis: int = 2) -> bool:
    """Same verdict from counting distinct rows and columns."""
    rows = len(set(qt.table))
    cols = len(set(zip(*qt.table)))
    if mode == "case1":
        return not (rows <= m and cols <= m)
    return (cols if axis == 2 else rows) > m


def counting_bound(p: int, m: int, mode: str = "case1") -> float:
    """Upper bound on the fraction of non-admissible tables."""
    L = math.log2(m)
    e = (2 * p * L + m * m if mode == "case1" else p * L + m * p) - p * p
    return min(1.0, 2.0 ** e)


def parameter_report(m: int = 2 ** 16) -> dict:
    p1, p2 = choose_p(m, "case1"), choose_p(m, "case2")
    return {"m": m, "p_case1": p1, "p_case2": p2, "p": max(p1, p2)}


__all__ = [
    "BudgetExceeded", "M_n", "QTable", "R4", "admissible_closed_form", "build_phi_dp",
    "build_scheme", "choose_p", "count_partitions", "counting_bound", "d", "d_p", "exceeds",
    "generate_Nn", "oracle_Nn", "parameter_report", "q_admissible", "set_partitions",
]
