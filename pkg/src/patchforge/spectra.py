"""Spectrum prefixes of sentences over generated classes, and periodicity fits.

Values are generated bottom-up: round h applies every operation to values
from earlier rounds, so round h holds exactly the values of terms of height
h.  Values are deduplicated by (size, rank-q characteristic) when the
characteristic is cheap, and by isomorphism otherwise.  Both keys preserve
the verdict of any sentence of depth <= q, and the operations respect them,
so pruning duplicates never loses a size.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .addition import (
    ConstructibleSpec, Undefined, apply_addition, cadd, cleaf, clone_const, cterm_to_text,
)
from .mso import Checker, characteristic, qdepth
from .mso.formula import Formula, is_sentence
from .patchwidth import (
    PWClassSpec, leaf, modify, modify_term, recolor, recolor_term, term_to_text, union,
)
from .structures import ConstStructure, Structure, StructureError, disjoint_union, freshen, iso_check

CH_WORK = 50_000


def _cheap(n: int, q: int) -> bool:
    if q == 0:
        return True
    if q == 1:
        return n <= 16
    return (n + 2 ** n) ** q <= CH_WORK and n <= 10


@dataclass
class SpectrumPrefix:
    sentence: str
    spec: str
    n_max: int
    term_bound: int
    sizes: list
    stats: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"sentence": self.sentence, "spec": self.spec, "n_max": self.n_max,
                "term_bound": self.term_bound, "sizes": self.sizes, "stats": self.stats,
                "witnesses": {str(k): v for k, v in sorted(self.witnesses.items())}}


class _Pool:
    def __init__(self, q: int):
        self.q = q
        self.keys: set = set()
        self.by_size: dict = {}
        self.stats = {"by_characteristic": 0, "by_isomorphism": 0, "duplicates": 0}

    def add(self, S: Structure) -> bool:
        n = len(S.universe)
        if _cheap(n, self.q):
            key = (n, characteristic(S, (), self.q).digest)
            if key in self.keys:
                self.stats["duplicates"] += 1
                return False
            self.keys.add(key)
            self.stats["by_characteristic"] += 1
            return True
        for T in self.by_size.get(n, ()):
            if iso_check(S, T)[0]:
                self.stats["duplicates"] += 1
                return False
        self.by_size.setdefault(n, []).append(S)
        self.stats["by_isomorphism"] += 1
        return True


def _pw_steps(spec: PWClassSpec, old: list, new: list):
    """One round of operations where at least one argument is new."""
    k = spec.colors
    for (S1, t1), (S2, t2) in itertools.chain(
            itertools.product(new, old + new), itertools.product(old, new)):
        yield disjoint_union(S1, freshen(S2)[0]), union(t1, t2)
    for S, t in new:
        for i in range(1, k + 1):
            for j in range(1, k + 1):
                if i != j:
                    yield recolor(S, i, j, k), recolor_term(i, j, t)
        for R, body in spec.formula_pool:
            yield modify(S, R, body), modify_term(R, body, t)


def _const_steps(spec: ConstructibleSpec, old: list, new: list):
    for (M1, t1), (M2, t2) in itertools.chain(
            itertools.product(new, old + new), itertools.product(old, new)):
        for name in sorted(spec.ops):
            try:
                yield apply_addition(spec.ops[name], M1, clone_const(M2)), cadd(name, t1, t2)
            except (Undefined, StructureError):
                continue


def spectrum_prefix(spec, phi: Formula, n_max: int, term_bound: int = 8) -> SpectrumPrefix:
    if not is_sentence(phi):
        raise ValueError("phi must be a sentence")
    q = qdepth(phi)
    pw = isinstance(spec, PWClassSpec)
    slack = 0 if pw else spec.k_star
    pool = _Pool(q)
    sizes: set = set()
    wit: dict = {}
    checks = 0

    def admit(S, t, bucket):
        nonlocal checks
        core = S if pw else S.structure
        if len(core.universe) > n_max + slack:
            return
        view = S if pw else S.expanded()
        if not pool.add(view):
            return
        bucket.append((S, t))
        if len(core.universe) <= n_max:
            checks += 1
            if Checker(core).check(phi, {}):
                n = len(core.universe)
                sizes.add(n)
                if n not in wit:
                    wit[n] = term_to_text(t) if pw else cterm_to_text(t)

    new: list = []
    if pw:
        for name in sorted(spec.bases):
            admit(freshen(spec.bases[name])[0], leaf(name), new)
    else:
        for name in sorted(spec.bases):
            admit(clone_const(spec.bases[name]), cleaf(name), new)
    old: list = []
    rounds = 1
    while new and rounds < term_bound:
        rounds += 1
        fresh: list = []
        steps = _pw_steps(spec, old, new) if pw else _const_steps(spec, old, new)
        for S, t in steps:
            admit(S, t, fresh)
        old, new = old + new, fresh
    stats = dict(pool.stats, rounds=rounds, exhausted=not new, model_checks=checks, q=q,
                 coverage=("terms of height <= term_bound whose intermediate values have at most "
                           f"n_max + {slack} elements"))
    from .mso import to_text
    return SpectrumPrefix(to_text(phi), spec.name, n_max, term_bound, sorted(sizes), stats, wit)


# ---------------------------------------------------------------------------
# periodicity

def consistent(A: set, n_max: int, n: int, p: int) -> bool:
    """For all n < m <= n_max - p: m in A iff m + p in A."""
    return all((m in A) == (m + p in A) for m in range(n + 1, n_max - p + 1))


@dataclass
class PeriodicityFit:
    n: int
    p: int
    status: str
    degenerate: bool
    candidates: list

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "status": self.status, "degenerate": self.degenerate,
                "candidates": self.candidates}


def periodicity_fit(prefix: SpectrumPrefix | tuple, max_listed: int = 6) -> PeriodicityFit:
    """Least (p, n) consistent with the prefix, preferring fits checked over two full periods."""
    if isinstance(prefix, SpectrumPrefix):
        A, n_max = set(prefix.sizes), prefix.n_max
    else:
        A, n_max = set(prefix[0]), prefix[1]
    best = None
    listed = []
    fallback = None
    for p in range(1, n_max + 1):
        n = next(n for n in range(0, n_max + 1) if consistent(A, n_max, n, p))
        degenerate = n_max - p - n < 2 * p
        if p <= max_listed:
            listed.append([n, p])
        if fallback is None:
            fallback = (n, p)
        if not degenerate and best is None:
            best = (n, p)
        if best is not None and p >= max_listed:
            break
    if best is None:
        n, p = fallback
        return PeriodicityFit(n, p, "consistent-up-to-N_max", True, listed)
    return PeriodicityFit(best[0], best[1], "consistent-up-to-N_max", False, listed)


__all__ = ["PeriodicityFit", "SpectrumPrefix", "consistent", "periodicity_fit", "spectrum_prefix"]
