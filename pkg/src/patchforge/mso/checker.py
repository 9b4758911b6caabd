"""Direct MSO model checking over finite structures.

Sets are bitmasks over universe positions.  Set quantifiers are decided by a
branching search over partial sets: the body is evaluated in Kleene
three-valued logic (``None`` = not yet determined), so a branch is cut as soon
as its verdict is fixed for every completion.  This is the same semantics as
enumerating all subsets, only faster on formulas that constrain the set early.

Quantifier nodes memoize their value on the current values of their free
variables; a Checker is bound to one structure, so reusing it across calls
shares those caches.
"""
from __future__ import annotations

from typing import Callable, Mapping

from ..structures import Structure
from .formula import (
    And, Atom, Const, Eq, Exists, ExistsSet, Forall, ForallSet, Formula,
    FormulaError, Iff, Implies, In, Not, Or, free_vars,
)

Fn = Callable[[dict], "bool | None"]
_MISSING = object()


class UnboundVariable(FormulaError):
    pass


class Checker:
    def __init__(self, M: Structure, *, lenient: bool = False):
        self.M = M
        self.lenient = lenient
        self.elems = list(M.universe)
        self.pos = {x: i for i, x in enumerate(self.elems)}
        self.n = len(self.elems)
        self.full = (1 << self.n) - 1
        self.tables: dict[str, object] = {}
        for name, arity in M.vocabulary.symbols:
            val = M.relations[name]
            if arity == 0:
                self.tables[name] = bool(val)
            elif arity == 1:
                mask = 0
                for (x,) in val:
                    mask |= 1 << self.pos[x]
                self.tables[name] = mask
            else:
                self.tables[name] = frozenset(tuple(self.pos[x] for x in t) for t in val)
        self._compiled: dict[Formula, Fn] = {}

    # -- public -----------------------------------------------------------

    def check(self, phi: Formula, assignment: Mapping | None = None) -> bool:
        env = self.make_env(phi, assignment or {})
        v = self.compile(phi)(env)
        if v is None:
            raise FormulaError("evaluation undetermined; is every set variable assigned?")
        return v

    def make_env(self, phi: Formula, assignment: Mapping) -> dict:
        evars, svars = free_vars(phi)
        missing = (evars | svars) - set(assignment)
        if missing:
            raise UnboundVariable(f"unbound variable(s): {sorted(missing)}")
        env = {}
        for v in evars:
            a = assignment[v]
            if a not in self.pos:
                raise FormulaError(f"{v} assigned to element outside the universe")
            env[v] = self.pos[a]
        for v in svars:
            mask = 0
            for a in assignment[v]:
                if a not in self.pos:
                    raise FormulaError(f"set {v} contains element outside the universe")
                mask |= 1 << self.pos[a]
            env[v] = (self.full, mask)
        return env

    def satisfying(self, phi: Formula, variables: list[str]):
        """Yield every tuple of elements (for ``variables``) satisfying phi."""
        import itertools
        fn = self.compile(phi)
        for combo in itertools.product(range(self.n), repeat=len(variables)):
            env = dict(zip(variables, combo))
            if fn(env):
                yield tuple(self.elems[i] for i in combo)

    # -- compilation --------------------------------------------------------

    def compile(self, phi: Formula) -> Fn:
        fn = self._compiled.get(phi)
        if fn is None:
            fn = self._compile(phi)
            self._compiled[phi] = fn
        return fn

    def _table(self, name: str, arity: int):
        if name not in self.tables:
            if self.lenient:
                return False if arity == 0 else (0 if arity == 1 else frozenset())
            raise FormulaError(f"unknown relation symbol {name!r}")
        if self.M.vocabulary.arity(name) != arity:
            raise FormulaError(f"arity mismatch for {name}: expected "
                               f"{self.M.vocabulary.arity(name)}, got {arity}")
        return self.tables[name]

    def _compile(self, phi: Formula) -> Fn:
        if isinstance(phi, Const):
            v = phi.value
            return lambda env: v
        if isinstance(phi, Atom):
            args = phi.args
            table = self._table(phi.rel, len(args))
            if not args:
                return lambda env: table
            if len(args) == 1:
                a = args[0]
                return lambda env: bool((table >> env[a]) & 1)
            if len(args) == 2:
                a, b = args
                return lambda env: (env[a], env[b]) in table
            return lambda env: tuple(env[x] for x in args) in table
        if isinstance(phi, Eq):
            a, b = phi.left, phi.right
            return lambda env: env[a] == env[b]
        if isinstance(phi, In):
            x, X = phi.elem, phi.set

            def member(env):
                known, val = env[X]
                bit = 1 << env[x]
                if known & bit:
                    return bool(val & bit)
                return None
            return member
        if isinstance(phi, Not):
            f = self.compile(phi.body)

            def negate(env):
                v = f(env)
                return None if v is None else not v
            return negate
        if isinstance(phi, And):
            fs = [self.compile(p) for p in phi.parts]

            def conj(env):
                res = True
                for f in fs:
                    v = f(env)
                    if v is False:
                        return False
                    if v is None:
                        res = None
                return res
            return conj
        if isinstance(phi, Or):
            fs = [self.compile(p) for p in phi.parts]

            def disj(env):
                res = False
                for f in fs:
                    v = f(env)
                    if v is True:
                        return True
                    if v is None:
                        res = None
                return res
            return disj
        if isinstance(phi, Implies):
            fl, fr = self.compile(phi.left), self.compile(phi.right)

            def implies(env):
                a = fl(env)
                if a is False:
                    return True
                b = fr(env)
                if b is True:
                    return True
                if a is True:
                    return b
                return None
            return implies
        if isinstance(phi, Iff):
            fl, fr = self.compile(phi.left), self.compile(phi.right)

            def iff(env):
                a = fl(env)
                if a is None:
                    return None
                b = fr(env)
                if b is None:
                    return None
                return a == b
            return iff
        if isinstance(phi, (Exists, Forall)):
            return self._memo(phi, self._element_quantifier(phi))
        if isinstance(phi, (ExistsSet, ForallSet)):
            return self._memo(phi, self._set_quantifier(phi))
        raise FormulaError(f"unknown formula node {phi!r}")

    def _memo(self, phi: Formula, fn: Fn) -> Fn:
        ev, sv = free_vars(phi)
        keys = tuple(sorted(ev | sv))
        cache: dict = {}

        def memo(env):
            try:
                key = tuple(env[k] for k in keys)
            except KeyError as e:
                raise UnboundVariable(f"unbound variable {e.args[0]}") from None
            v = cache.get(key, _MISSING)
            if v is _MISSING:
                v = fn(env)
                cache[key] = v
            return v
        return memo

    # -- element quantifiers --------------------------------------------------

    def _guard_domain(self, var: str, guard: Formula | None):
        """Return env -> iterable of candidate positions for a guarded variable."""
        all_pos = range(self.n)
        if isinstance(guard, Atom) and guard.args == (var,):
            mask = self._table(guard.rel, 1)
            dom = [i for i in all_pos if (mask >> i) & 1]
            return lambda env: dom
        if isinstance(guard, In) and guard.elem == var and guard.set != var:
            X = guard.set
            n = self.n

            def dom(env):
                known, val = env[X]
                possible = ~(known & ~val)
                return [i for i in range(n) if (possible >> i) & 1]
            return dom
        return lambda env: all_pos

    def _element_quantifier(self, phi: Exists | Forall) -> Fn:
        var = phi.var
        body = self.compile(phi.body)
        guard = None
        if isinstance(phi, Exists) and isinstance(phi.body, And):
            guard = phi.body.parts[0]
        elif isinstance(phi, Forall) and isinstance(phi.body, Implies):
            g = phi.body.left
            guard = g.parts[0] if isinstance(g, And) else g
        domain = self._guard_domain(var, guard)
        want = isinstance(phi, Exists)

        def quant(env):
            old = env.get(var, _MISSING)
            res = not want
            try:
                for i in domain(env):
                    env[var] = i
                    v = body(env)
                    if v is want:
                        res = want
                        break
                    if v is None:
                        res = None
            finally:
                if old is _MISSING:
                    env.pop(var, None)
                else:
                    env[var] = old
            return res
        return quant

    # -- set quantifiers ----------------------------------------------------

    def _subset_guard(self, var: str, f: Formula) -> Formula | None:
        """Match ``forall z (z in var -> G)`` with G free of ``var``."""
        if isinstance(f, Forall) and isinstance(f.body, Implies):
            g = f.body.left
            if isinstance(g, In) and g.elem == f.var and g.set == var:
                G = f.body.right
                if var not in free_vars(G)[1]:
                    return Forall(f.var, G)  # carrier of (z, G)
        return None

    def _set_quantifier(self, phi: ExistsSet | ForallSet) -> Fn:
        var = phi.var
        body = self.compile(phi.body)
        restriction = None
        if isinstance(phi, ExistsSet) and isinstance(phi.body, And):
            for part in phi.body.parts:
                restriction = self._subset_guard(var, part)
                if restriction:
                    break
        elif isinstance(phi, ForallSet) and isinstance(phi.body, Implies):
            left = phi.body.left
            for part in (left.parts if isinstance(left, And) else (left,)):
                restriction = self._subset_guard(var, part)
                if restriction:
                    break
        allowed_fn = None
        if restriction is not None:
            z = restriction.var
            gfn = self.compile(restriction.body)
            n = self.n

            def allowed_fn(env):
                old = env.get(z, _MISSING)
                mask = 0
                try:
                    for i in range(n):
                        env[z] = i
                        if gfn(env) is not False:
                            mask |= 1 << i
                finally:
                    if old is _MISSING:
                        env.pop(z, None)
                    else:
                        env[z] = old
                return mask

        want = isinstance(phi, ExistsSet)
        full = self.full
        n = self.n

        def quant(env):
            allowed = allowed_fn(env) if allowed_fn else full
            free = [i for i in range(n) if (allowed >> i) & 1]
            old = env.get(var, _MISSING)

            def search(known, val, idx):
                env[var] = (known, val)
                v = body(env)
                if v is not None:
                    return v
                if idx == len(free):
                    return None
                bit = 1 << free[idx]
                r0 = search(known | bit, val, idx + 1)
                if r0 is want:
                    return want
                r1 = search(known | bit, val | bit, idx + 1)
                if r1 is want:
                    return want
                if r0 is None or r1 is None:
                    return None
                return not want

            try:
                return search(full & ~allowed, 0, 0)
            finally:
                if old is _MISSING:
                    env.pop(var, None)
                else:
                    env[var] = old
        return quant


def model_check(M: Structure, phi: Formula, assignment: Mapping | None = None) -> bool:
    return Checker(M).check(phi, assignment)
