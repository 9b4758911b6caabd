"""S-expression text syntax for MSO formulas.

    (exists x (and (E x y) (in x X)))
    (forall-set X (implies (in x X) (P1 x)))

Keywords: true false not and or implies iff exists forall exists-set
forall-set = in.  Any other head is a relation symbol; ``(R)`` is a 0-ary atom.
"""
from __future__ import annotations

import re

from .formula import (
    FALSE, TRUE, And, Atom, Const, Eq, Exists, ExistsSet, Forall, ForallSet,
    Formula, FormulaError, Iff, Implies, In, Not, Or,
)

_TOKEN = re.compile(r'\s*(?:(\()|(\))|"((?:[^"\\]|\\.)*)"|([^\s()"]+))')

KEYWORDS = {"true", "false", "not", "and", "or", "implies", "iff", "exists",
            "forall", "exists-set", "forall-set", "=", "in"}


class ParseError(FormulaError):
    pass


class Quoted(str):
    """A double-quoted string token (used for formula bodies inside terms)."""


def tokenize(text: str) -> list[str]:
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        if m.group(3) is not None:
            out.append(Quoted(m.group(3).replace('\\"', '"').replace("\\\\", "\\")))
        else:
            out.append(m.group(1) or m.group(2) or m.group(4))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def read(tokens: list[str]):
    """Read one s-expression into nested lists of atoms."""
    def go(i):
        if i >= len(tokens):
            raise ParseError("unexpected end of input")
        tok = tokens[i]
        if tok == "(" and not isinstance(tok, Quoted):
            items = []
            i += 1
            while True:
                if i >= len(tokens):
                    raise ParseError("missing ')'")
                if tokens[i] == ")" and not isinstance(tokens[i], Quoted):
                    return items, i + 1
                item, i = go(i)
                items.append(item)
        if tok == ")" and not isinstance(tok, Quoted):
            raise ParseError("unexpected ')'")
        return tok, i + 1

    expr, end = go(0)
    if end != len(tokens):
        raise ParseError("trailing tokens after expression")
    return expr


def parse(text: str) -> Formula:
    return from_sexp(read(tokenize(text)))


def read_text(text: str):
    return read(tokenize(text))


def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def from_sexp(e) -> Formula:
    if isinstance(e, Quoted):
        raise ParseError("unexpected quoted string in formula")
    if isinstance(e, str):
        if e == "true":
            return TRUE
        if e == "false":
            return FALSE
        raise ParseError(f"bare symbol {e!r}; write 0-ary atoms as ({e})")
    if not e:
        raise ParseError("empty list")
    head, *rest = e
    if not isinstance(head, str):
        raise ParseError("list head must be a symbol")
    if head == "not":
        _arity(head, rest, 1)
        return Not(from_sexp(rest[0]))
    if head == "and":
        return And(tuple(from_sexp(r) for r in rest)) if rest else TRUE
    if head == "or":
        return Or(tuple(from_sexp(r) for r in rest)) if rest else FALSE
    if head in ("implies", "iff"):
        _arity(head, rest, 2)
        cls = Implies if head == "implies" else Iff
        return cls(from_sexp(rest[0]), from_sexp(rest[1]))
    if head in ("exists", "forall", "exists-set", "forall-set"):
        _arity(head, rest, 2)
        var = rest[0]
        if not isinstance(var, str) or var in KEYWORDS:
            raise ParseError(f"bad bound variable in {head}")
        cls = {"exists": Exists, "forall": Forall,
               "exists-set": ExistsSet, "forall-set": ForallSet}[head]
        return cls(var, from_sexp(rest[1]))
    if head == "=":
        _arity(head, rest, 2)
        return Eq(_var(rest[0]), _var(rest[1]))
    if head == "in":
        _arity(head, rest, 2)
        return In(_var(rest[0]), _var(rest[1]))
    if head in ("true", "false"):
        raise ParseError(f"{head} takes no arguments")
    return Atom(head, tuple(_var(r) for r in rest))


def _var(x) -> str:
    if not isinstance(x, str) or x in KEYWORDS:
        raise ParseError(f"expected a variable, got {x!r}")
    return x


def _arity(head, rest, n):
    if len(rest) != n:
        raise ParseError(f"{head} expects {n} argument(s), got {len(rest)}")


def to_text(phi: Formula) -> str:
    if isinstance(phi, Const):
        return "true" if phi.value else "false"
    if isinstance(phi, Atom):
        return "(" + " ".join((phi.rel,) + phi.args) + ")"
    if isinstance(phi, Eq):
        return f"(= {phi.left} {phi.right})"
    if isinstance(phi, In):
        return f"(in {phi.elem} {phi.set})"
    if isinstance(phi, Not):
        return f"(not {to_text(phi.body)})"
    if isinstance(phi, (And, Or)):
        head = "and" if isinstance(phi, And) else "or"
        return "(" + " ".join([head] + [to_text(p) for p in phi.parts]) + ")"
    if isinstance(phi, Implies):
        return f"(implies {to_text(phi.left)} {to_text(phi.right)})"
    if isinstance(phi, Iff):
        return f"(iff {to_text(phi.left)} {to_text(phi.right)})"
    head = {Exists: "exists", Forall: "forall", ExistsSet: "exists-set",
            ForallSet: "forall-set"}.get(type(phi))
    if head:
        return f"({head} {phi.var} {to_text(phi.body)})"
    raise FormulaError(f"cannot print {phi!r}")
