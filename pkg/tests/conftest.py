import itertools

import pytest
from hypothesis import strategies as st

from patchforge.fixtures import GRAPH
from patchforge.structures import Structure


def path(n: int) -> Structure:
    edges = [(i, i + 1) for i in range(n - 1)]
    return Structure.build(GRAPH, range(n), {"E": edges + [(b, a) for a, b in edges]})


def cycle(n: int) -> Structure:
    edges = [(i, (i + 1) % n) for i in range(n)]
    return Structure.build(GRAPH, range(n), {"E": edges + [(b, a) for a, b in edges]})


def brute_iso(M: Structure, N: Structure) -> bool:
    """Try every bijection; only for tiny structures."""
    if len(M) != len(N) or M.vocabulary != N.vocabulary:
        return False
    for perm in itertools.permutations(N.universe):
        f = dict(zip(M.universe, perm))
        if all((M.rel(n) == N.rel(n)) if a == 0 else
               {tuple(f[x] for x in t) for t in M.rel(n)} == set(N.rel(n))
               for n, a in M.vocabulary.symbols):
            return True
    return False


@st.composite
def graphs(draw, max_size: int = 4):
    n = draw(st.integers(0, max_size))
    pairs = [(a, b) for a in range(n) for b in range(n)]
    edges = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    return Structure.build(GRAPH, range(n), {"E": edges})


@pytest.fixture
def p3():
    return path(3)
