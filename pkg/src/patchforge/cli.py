"""Command-line front end.

Every command writes a JSON report (to --out, or standard output) and a
one-line summary.  Exit codes: 0 all checks passed, 1 a check failed,
2 bad input.  Inputs are JSON files or ``builtin:<name>`` for the bundled
classes and schemes.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys

from . import campaigns, fixtures
from .addition import (
    ConstructibleSpec, EvalError, cspec_from_dict, cspec_to_dict, cterm_from_text,
    eval_construction,
)
from .counterexample import (
    BudgetExceeded, M_n, QTable, build_scheme, choose_p, generate_Nn, oracle_Nn, parameter_report,
)
from .mso import ParseError, characteristic, model_check, parse
from .patchwidth import PatchError, PWClassSpec, eval_term, spec_from_dict, spec_to_dict, term_from_text
from .representation import (
    Representation, RepresentationError, build_representation, decode_representation,
)
from .spectra import periodicity_fit, spectrum_prefix
from .structures import StructureError, structure_from_dict, structure_to_dict, validate
from .translators import const_to_pw, pw_to_const, roundtrip_verify
from .treeconst import ConsistencyViolation, LeafPropertyViolation, interp_to_const
from .trees import (
    InterpScheme, Tree, TreeError, interpret, random_db_tree, wlog_transform, wlog_tree,
)

log = logging.getLogger("patchforge")

BUILTIN_SPECS = {
    "colored-graphs": fixtures.colored_graph_pw_spec,
    "singleton-unions": fixtures.singleton_union_spec,
    "linear-orders": fixtures.linear_order_spec,
    "marked-graphs": fixtures.marked_graph_spec,
    "aux-graphs": fixtures.aux_const_spec,
}
BUILTIN_SCHEMES = {
    "sample": fixtures.sample_scheme,
    "leaf-edges": fixtures.leaf_scheme,
}


class InputError(Exception):
    pass


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read {path}: {e}") from None


def load_spec(arg: str):
    if arg.startswith("builtin:"):
        name = arg.split(":", 1)[1]
        if name not in BUILTIN_SPECS:
            raise InputError(f"unknown builtin spec {name}; choose from {sorted(BUILTIN_SPECS)}")
        return BUILTIN_SPECS[name]()
    d = _read_json(arg)
    return cspec_from_dict(d) if "tau_plus" in d else spec_from_dict(d)


def load_scheme(arg: str) -> InterpScheme:
    if arg.startswith("builtin:"):
        name = arg.split(":", 1)[1]
        if name not in BUILTIN_SCHEMES:
            raise InputError(f"unknown builtin scheme {name}; choose from {sorted(BUILTIN_SCHEMES)}")
        return BUILTIN_SCHEMES[name]()
    return InterpScheme.from_dict(_read_json(arg))


def load_trees(arg: str) -> list[Tree]:
    d = _read_json(arg)
    return [Tree.from_dict(x) for x in (d if isinstance(d, list) else [d])]


def seed_of(args) -> int:
    env = os.environ.get("PATCHFORGE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputError("PATCHFORGE_SEED must be an integer") from None
    return args.seed


# ---------------------------------------------------------------------------
# commands; each returns (report, passed, summary)

def cmd_check(args):
    d = _read_json(args.structure)
    M = structure_from_dict(d)
    problems = validate(M)
    rep = {"valid": not problems, "problems": problems}
    ok = not problems
    if args.phi and ok:
        S = getattr(M, "structure", M)
        rep["phi"] = args.phi
        rep["holds"] = bool(model_check(S, parse(args.phi)))
        ok = rep["holds"]
    if args.q is not None and not problems:
        rep["characteristic"] = str(characteristic(M, (), args.q))
    if problems:
        raise InputError("; ".join(problems))
    return rep, ok, f"valid structure{'; phi ' + ('holds' if ok else 'fails') if args.phi else ''}"


def cmd_eval_term(args):
    spec = load_spec(args.spec)
    if not isinstance(spec, PWClassSpec):
        raise InputError("eval-term needs a patch-width spec")
    M = eval_term(spec, term_from_text(args.term))
    return {"term": args.term, "structure": structure_to_dict(M)}, True, f"{len(M.universe)} elements"


def cmd_eval_add(args):
    spec = load_spec(args.spec)
    if not isinstance(spec, ConstructibleSpec):
        raise InputError("eval-add needs a constructible spec")
    M = eval_construction(spec, cterm_from_text(args.term))
    return ({"term": args.term, "structure": structure_to_dict(M)}, True,
            f"{len(M.structure.universe)} elements, {M.k} marks")


def cmd_translate(args):
    spec = load_spec(args.spec)
    rep: dict = {"direction": args.direction}
    ok = True
    if args.direction == "pw2const":
        if not isinstance(spec, PWClassSpec):
            raise InputError("pw2const needs a patch-width spec")
        rep["target"] = cspec_to_dict(pw_to_const(spec).target)
    else:
        if not isinstance(spec, ConstructibleSpec):
            raise InputError("const2pw needs a constructible spec")
        tr = const_to_pw(spec)
        rep["target"] = spec_to_dict(tr.target)
        rep["k_prime"] = tr.k_prime
    if args.verify:
        v = roundtrip_verify(spec, args.verify, seed_of(args), args.depth).to_dict()
        rep["verification"] = v
        ok = v["passed"]
    return rep, ok, f"{args.direction}: {'verified' if args.verify else 'compiled'}{'' if ok else ' with failures'}"


def cmd_interp(args):
    c = load_scheme(args.scheme)
    Ts = load_trees(args.tree)
    out = [structure_to_dict(interpret(c, T)) for T in Ts]
    return {"scheme": c.name, "structures": out}, True, f"interpreted {len(Ts)} tree(s)"


def cmd_wlog(args):
    c = load_scheme(args.scheme)
    rep = {"scheme": wlog_transform(c).to_dict()}
    if args.tree:
        rep["trees"] = [wlog_tree(c, T).to_dict() for T in load_trees(args.tree)]
    return rep, True, "normalized scheme to k1 = 0"


def cmd_represent(args):
    spec = load_spec(args.spec)
    if not isinstance(spec, ConstructibleSpec):
        raise InputError("represent needs a constructible spec")
    r = build_representation(spec, cterm_from_text(args.term))
    return {"representation": r.to_dict()}, True, f"{len(r.tree)} nodes"


def cmd_decode(args):
    spec = load_spec(args.spec)
    d = _read_json(args.representation)
    r = Representation.from_dict(d.get("representation", d))
    M = decode_representation(spec, r)
    return {"structure": structure_to_dict(M)}, True, f"{len(M.structure.universe)} elements"


def cmd_compile(args):
    c = load_scheme(args.scheme)
    if c.k1:
        c = wlog_transform(c)
    if not args.trees:
        samples = []
    elif args.trees.isdigit():
        rng = random.Random(seed_of(args))
        samples = [random_db_tree(rng, 7, c.k2) for _ in range(int(args.trees))]
    else:
        samples = load_trees(args.trees)
    K = interp_to_const(c, args.q, samples)
    rows = []
    for T in samples:
        rows.append({"leaves": len(T.leaves), "iso": K.check(T, replay=True)})
    ok = all(r["iso"] for r in rows)
    return {"compiled": K.to_dict(), "rows": rows}, ok, f"compiled {c.name} (q*={args.q})"


def cmd_counterexample(args):
    if args.action == "choose-p":
        if args.m < 2:
            raise InputError("m must be at least 2")
        p = choose_p(args.m, args.mode)
        return {"m": args.m, "mode": args.mode, "p": p}, True, f"p = {p}"
    seed = seed_of(args)
    qt = QTable.random(args.p, seed)
    sc = build_scheme(args.p, qt)
    N = generate_Nn(args.n, sc)
    ok = set(N.rel("R")) == oracle_Nn(args.n, args.p, qt)
    rep = {"n": args.n, "p": args.p, "q": qt.to_dict(), "structure": structure_to_dict(N),
           "matches_oracle": ok, "parameters": parameter_report()}
    if args.pipeline:
        K = interp_to_const(sc, args.q)
        rep["pipeline_iso"] = K.check(M_n(args.n), replay=True)
        ok = ok and rep["pipeline_iso"]
    return rep, ok, f"N_{args.n}: {len(N.universe)} leaves, {len(N.rel('R'))} tuples"


def cmd_spectrum(args):
    spec = load_spec(args.spec)
    pre = spectrum_prefix(spec, parse(args.phi), args.nmax, args.terms)
    fit = periodicity_fit(pre)
    return ({"prefix": pre.to_dict(), "fit": fit.to_dict()}, True,
            f"sizes {pre.sizes}; fit n={fit.n} p={fit.p}{' (degenerate)' if fit.degenerate else ''}")


def cmd_verify(args):
    seed = seed_of(args)
    what = args.what
    if what == "addition-theorem":
        qs = tuple(range(1, args.q + 1)) if args.q >= 1 else (0,)
        r = campaigns.addition_theorem_campaign(args.cases, qs, seed)
        s = f"{r['hypothesis_satisfied']} cases, {r['violations']} violations"
    elif what == "lemma-const":
        if args.tree_file:
            raise InputError("lemma-const samples its own trees; pass a count to --trees")
        r = campaigns.lemma_const_campaign(args.trees, seed=seed)
        s = f"{r['matching_pairs']} matching pairs, {r['violations']} violations"
    elif what == "main-theorem":
        c = load_scheme(args.scheme)
        if args.tree_file:
            K = interp_to_const(c, args.q)
            rows = [{"leaves": len(T.leaves), "iso": K.check(T, replay=True)}
                    for T in load_trees(args.tree_file)]
            fails = sum(1 for x in rows if not x["iso"])
            r = {"rows": rows, "failures": fails, "passed": fails == 0, "compiled": K.to_dict()}
        else:
            r = campaigns.main_theorem_campaign(c, args.trees, seed=seed, q=args.q)
        s = f"{len(r['rows'])} trees, {r['failures']} failures"
    elif what == "wlog":
        if args.tree_file:
            raise InputError("wlog samples its own trees; pass a count to --trees")
        r = campaigns.wlog_campaign(load_scheme(args.scheme), args.trees, seed=seed)
        s = f"{r['trees']} trees, {r['failures']} failures"
    elif what == "representation":
        r = campaigns.representation_campaign(fixtures.marked_graph_spec(), args.cases, seed=seed)
        s = f"{r['terms']} terms, {r['failures']} failures"
    elif what == "counterexample":
        r = campaigns.counterexample_campaign(seed)
        s = f"{r['sweep']['pairs']} pairs swept, passed={r['passed']}"
    else:
        raise InputError(f"unknown verification {what}")
    return r, bool(r["passed"]), s


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="campaign seed (PATCHFORGE_SEED overrides)")
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="write the JSON report here instead of standard output")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    ap = argparse.ArgumentParser(prog="patchforge", description=__doc__.splitlines()[0],
                                 parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add("check", help="validate a structure, optionally model-check a sentence")
    p.add_argument("structure")
    p.add_argument("--phi")
    p.add_argument("--q", type=int, help="also print the rank-q characteristic")
    p.set_defaults(fn=cmd_check)

    p = add("eval-term", help="evaluate a patch-width term")
    p.add_argument("spec")
    p.add_argument("--term", required=True)
    p.set_defaults(fn=cmd_eval_term)

    p = add("eval-add", help="evaluate a construction term")
    p.add_argument("spec")
    p.add_argument("--term", required=True)
    p.set_defaults(fn=cmd_eval_add)

    p = add("translate", help="translate between patch-width and constructible specs")
    p.add_argument("direction", choices=["pw2const", "const2pw"])
    p.add_argument("spec")
    p.add_argument("--verify", type=int, default=0, metavar="N", help="check N random terms")
    p.add_argument("--depth", type=int, default=3)
    p.set_defaults(fn=cmd_translate)

    p = add("interp", help="interpret a scheme in trees")
    p.add_argument("scheme")
    p.add_argument("tree")
    p.set_defaults(fn=cmd_interp)

    p = add("wlog", help="normalize a scheme to k1 = 0")
    p.add_argument("scheme")
    p.add_argument("--tree")
    p.set_defaults(fn=cmd_wlog)

    p = add("represent", help="tree representation of a construction term")
    p.add_argument("spec")
    p.add_argument("--term", required=True)
    p.set_defaults(fn=cmd_represent)

    p = add("decode", help="decode a representation")
    p.add_argument("spec")
    p.add_argument("representation")
    p.set_defaults(fn=cmd_decode)

    p = add("compile", help="compile a leaf-property scheme into a constructible class")
    p.add_argument("kind", choices=["interp2const"])
    p.add_argument("scheme")
    p.add_argument("--trees", "--sample", dest="trees", help="sample size or a JSON file of sample DB trees")
    p.add_argument("--q", "--qstar", dest="q", type=int, default=1)
    p.set_defaults(fn=cmd_compile)

    p = add("counterexample", help="residue scheme and its parameters")
    p.add_argument("action", choices=["gen", "choose-p"])
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--m", type=int, default=2 ** 16)
    p.add_argument("--mode", choices=["case1", "case2"], default="case1")
    p.add_argument("--pipeline", action="store_true", help="also compare with the compiled class")
    p.add_argument("--q", type=int, default=1)
    p.set_defaults(fn=cmd_counterexample)

    p = add("spectrum", help="spectrum prefix and periodicity fit")
    p.add_argument("spec")
    p.add_argument("--phi", required=True)
    p.add_argument("--nmax", type=int, default=20)
    p.add_argument("--terms", type=int, default=8, help="term height bound")
    p.set_defaults(fn=cmd_spectrum)

    for name in ("verify", "pipeline"):
        p = add(name, help="run a verification campaign")
        p.add_argument("what", choices=["addition-theorem", "lemma-const", "main-theorem", "wlog",
                                        "representation", "counterexample"])
        p.add_argument("--cases", type=int, default=200)
        p.add_argument("--q", type=int, default=None)
        p.add_argument("--trees", default=None,
                       help="sample size (60 for lemma-const, else 30) or a JSON file of trees")
        p.add_argument("--tree-file")
        p.add_argument("--scheme", default=None)
        p.set_defaults(fn=cmd_verify)
    return ap


GLOBAL_DEFAULTS = {"seed": 0, "out": None, "verbose": False}


def parse_args(argv=None) -> argparse.Namespace:
    # the shared options may appear before or after the command, so their
    # fallbacks are filled in afterwards rather than as parser defaults
    args = build_parser().parse_args(argv)
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.fn is cmd_verify:
        if args.q is None:
            args.q = 2 if args.what == "addition-theorem" else 1
        if args.trees is None:
            args.trees = 60 if args.what == "lemma-const" else 30
        elif args.trees.isdigit():
            args.trees = int(args.trees)
        else:
            args.tree_file, args.trees = args.trees, 30
        if args.scheme is None:
            args.scheme = "builtin:sample" if args.what == "wlog" else "builtin:leaf-edges"
    try:
        report, ok, summary = args.fn(args)
    except (InputError, ParseError, PatchError, StructureError, TreeError, RepresentationError,
            EvalError, BudgetExceeded, LeafPropertyViolation, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ConsistencyViolation as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 1
    text = campaigns.dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(summary)
    else:
        print(text)
        print(summary, file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
