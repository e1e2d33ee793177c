"""Command-line entry point.

Exit status: 0 success, 1 logical failure (false axiom, unsatisfiable,
failing scenario), 2 usage/parse/sort error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import blending
from .kernel import KernelError, TheoryError
from .modelfinder import Bounds, BoundsError, ResourceLimit, Sat, find_model, model_to_facts
from .parser import ParseError, from_theory, parse_facts, parse_spec, render, to_theory
from .semantics import CapExceeded, InterpretationError, build_interpretation, check_theory, enumerate_collections
from .statutes import ScenarioMalformed, builtin_scenarios, run_scenario, scenario_from_text, sent_theory

OK, FALSE, USAGE, RESOURCE = 0, 1, 2, 3


class _Fail(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        super().__init__(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _Fail(USAGE, f"{path}: {e.strerror or e}")


def _load_theory(path: str):
    try:
        return to_theory(parse_spec(_read(path)))
    except ParseError as e:
        raise _Fail(USAGE, "\n".join(f"{path}:{d}" for d in e.diagnostics))
    except (KernelError, TheoryError) as e:
        raise _Fail(USAGE, f"{path}: {e}")


def _bounds(items, sig) -> Bounds:
    try:
        return Bounds.parse(items or [], sig)
    except BoundsError as e:
        raise _Fail(USAGE, str(e))


def cmd_check(args) -> int:
    theory = _load_theory(args.spec)
    if args.json:
        print(json.dumps({"spec": theory.name, "ok": True, "axioms": [n for n, _ in theory.axioms]}))
    else:
        print(f"{args.spec}: spec {theory.name} is well-sorted ({len(theory.axioms)} axioms)")
    return OK


def cmd_eval(args) -> int:
    theory = _load_theory(args.spec)
    sig = theory.signature
    try:
        doc = parse_facts(_read(args.facts), sig)
    except ParseError as e:
        raise _Fail(USAGE, "\n".join(f"{args.facts}:{d}" for d in e.diagnostics))
    if doc.target != theory.name:
        raise _Fail(USAGE, f"{args.facts}: model is for spec {doc.target}, not {theory.name}")
    try:
        interp = build_interpretation(sig, doc)
    except InterpretationError as e:
        raise _Fail(USAGE, "\n".join(f"{args.facts}:{d}" for d in e.diagnostics))
    if args.enumerate_subsets:
        try:
            for base in sorted({s.base for s in sig.power_sorts()}):
                interp = enumerate_collections(interp, base, args.cap)
        except CapExceeded as e:
            raise _Fail(RESOURCE, str(e))
    try:
        verdict = check_theory(interp, theory, args.axiom or None)
    except KeyError as e:
        raise _Fail(USAGE, f"unknown axiom {e.args[0]}")
    for line in verdict.json_lines() if args.json else verdict.lines():
        print(line)
    return OK if verdict.all_true else FALSE


def cmd_find_model(args) -> int:
    theory = _load_theory(args.spec)
    bounds = _bounds(args.bound, theory.signature)
    try:
        outcome = find_model(theory, bounds, args.nodes)
    except BoundsError as e:
        raise _Fail(USAGE, str(e))
    if isinstance(outcome, Sat):
        text = render(model_to_facts(outcome.interpretation, theory.name))
        if args.json:
            print(json.dumps({"outcome": "sat", "nodes": outcome.nodes, "model": text}))
        else:
            print(text, end="")
        return OK
    kind = "resource-limit" if isinstance(outcome, ResourceLimit) else "unsat"
    if args.json:
        print(json.dumps({"outcome": kind, "nodes": outcome.nodes, "model": None}))
    elif kind == "unsat":
        print("UNSAT within bounds")
    else:
        print(f"RESOURCE LIMIT after {outcome.nodes} nodes")
    return RESOURCE if kind == "resource-limit" else FALSE


def cmd_blend(args) -> int:
    generic = _load_theory(args.generic)
    left = _load_theory(args.left)
    right = _load_theory(args.right)
    try:
        f = blending.morphism_from_map(generic, left, _read(args.left_map))
        g = blending.morphism_from_map(generic, right, _read(args.right_map))
        result = blending.pushout(generic, f, g, args.name)
    except blending.BlendError as e:
        raise _Fail(USAGE, "\n".join(e.diagnostics))
    text = render(from_theory(result.theory))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    elif not args.json:
        print(text, end="")
    if args.no_check:
        if args.json:
            print(json.dumps({"blend": result.theory.name, "consistency": None}))
        return OK
    bounds = _bounds(args.check_bound, result.theory.signature)
    try:
        outcome = blending.check_consistency(result.theory, bounds, args.nodes)
    except BoundsError as e:
        raise _Fail(USAGE, str(e))
    kind = "sat" if isinstance(outcome, Sat) else "resource-limit" if isinstance(outcome, ResourceLimit) else "unsat"
    if args.json:
        print(json.dumps({"blend": result.theory.name, "consistency": kind, "nodes": outcome.nodes}))
    else:
        message = {"sat": "CONSISTENT within bounds", "unsat": "UNSAT within bounds",
                   "resource-limit": f"RESOURCE LIMIT after {outcome.nodes} nodes"}[kind]
        print(message, file=sys.stdout if args.out else sys.stderr)
    return {"sat": OK, "unsat": FALSE, "resource-limit": RESOURCE}[kind]


def cmd_scenarios(args) -> int:
    scenarios = builtin_scenarios()
    try:
        scenarios += [scenario_from_text(_read(p)) for p in args.extra or []]
    except ScenarioMalformed as e:
        raise _Fail(USAGE, str(e))
    if args.action == "list":
        for s in scenarios:
            if args.json:
                print(json.dumps({"scenario": s.name, "axiom": s.axiom, "expected": s.expected, "rationale": s.rationale}))
            else:
                print(f"{s.name}: {s.axiom}={'true' if s.expected else 'false'} - {s.rationale}")
        return OK
    theory = sent_theory()
    status = OK
    for s in scenarios:
        try:
            report = run_scenario(s, theory)
        except ScenarioMalformed as e:
            print(str(e), file=sys.stderr)
            status = max(status, USAGE)
            continue
        if args.json:
            print(json.dumps({"scenario": s.name, "passed": report.passed, **report.result.report()}))
        else:
            print(report.line())
        if not report.passed:
            status = max(status, FALSE)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pml", description="Many-sorted statute logic toolkit")
    p.add_argument("--json", action="store_true", help="machine-readable output only")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="parse and sort-check a .pml file")
    c.add_argument("spec")
    c.set_defaults(run=cmd_check)

    e = sub.add_parser("eval", help="evaluate a theory over a fact file")
    e.add_argument("spec")
    e.add_argument("facts")
    e.add_argument("--axiom", action="append", help="only this axiom (repeatable)")
    e.add_argument("--enumerate-subsets", action="store_true",
                   help="quantify over every nonempty collection, not just the declared ones")
    e.add_argument("--cap", type=int, default=12, help="largest carrier to enumerate subsets of")
    e.set_defaults(run=cmd_eval)

    m = sub.add_parser("find-model", help="search for a model within bounds")
    m.add_argument("spec")
    m.add_argument("--bound", action="append", metavar="SORT=k")
    m.add_argument("--nodes", type=int, default=1_000_000)
    m.set_defaults(run=cmd_find_model)

    b = sub.add_parser("blend", help="pushout of two theories over a generic one")
    for name in ("generic", "left", "right", "left_map", "right_map"):
        b.add_argument(name)
    b.add_argument("--out", help="write the blended .pml here instead of stdout")
    b.add_argument("--name", help="name of the blended spec")
    b.add_argument("--check-bound", action="append", metavar="SORT=k")
    b.add_argument("--nodes", type=int, default=1_000_000)
    b.add_argument("--no-check", action="store_true", help="skip the consistency check")
    b.set_defaults(run=cmd_blend)

    s = sub.add_parser("scenarios", help="list or run the built-in statute scenarios")
    s.add_argument("action", choices=["list", "run"])
    s.add_argument("--extra", action="append", metavar="FACTS", help="additional scenario file")
    s.set_defaults(run=cmd_scenarios)

    for sp in (c, e, m, b, s):
        sp.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    try:
        return args.run(args)
    except _Fail as e:
        print(str(e), file=sys.stderr)
        return e.status


if __name__ == "__main__":
    sys.exit(main())
