"""Seeded random sentence generator over a vocabulary."""
from __future__ import annotations

import random

from ..structures import Vocabulary
from .formula import (
    FALSE, TRUE, And, Atom, Eq, Exists, ExistsSet, Forall, ForallSet, Formula,
    Implies, In, Not, Or,
)


def random_formula(vocab: Vocabulary, depth: int, rng: random.Random,
                   evars: tuple = (), svars: tuple = ()) -> Formula:
    """Random well-scoped formula with quantifier depth <= depth."""
    r = rng.random()
    if depth == 0 or r < 0.25:
        return _atomic(vocab, rng, evars, svars)
    if r < 0.45:
        kind = rng.choice((And, Or, Implies, Not))
        if kind is Not:
            return Not(random_formula(vocab, depth, rng, evars, svars))
        a = random_formula(vocab, depth, rng, evars, svars)
        b = random_formula(vocab, depth - 1, rng, evars, svars)
        if kind is Implies:
            return Implies(a, b)
        return kind((a, b))
    if rng.random() < 0.7:
        v = f"x{len(evars) + 1}"
        body = random_formula(vocab, depth - 1, rng, evars + (v,), svars)
        return rng.choice((Exists, Forall))(v, body)
    V = f"X{len(svars) + 1}"
    body = random_formula(vocab, depth - 1, rng, evars, svars + (V,))
    return rng.choice((ExistsSet, ForallSet))(V, body)


def _atomic(vocab, rng, evars, svars) -> Formula:
    options = []
    for name, arity in vocab.symbols:
        if arity == 0:
            options.append(Atom(name, ()))
        elif evars:
            options.append(Atom(name, tuple(rng.choice(evars) for _ in range(arity))))
    if evars:
        options.append(Eq(rng.choice(evars), rng.choice(evars)))
        if svars:
            options.append(In(rng.choice(evars), rng.choice(svars)))
    if not options:
        return rng.choice((TRUE, FALSE))
    return rng.choice(options)


def random_sentences(vocab: Vocabulary, depth: int, count: int, seed: int = 0) -> list[Formula]:
    rng = random.Random(seed)
    return [random_formula(vocab, depth, rng) for _ in range(count)]
