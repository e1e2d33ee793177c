"""Finite interpretations built from fact documents, and Tarskian evaluation.

Elements of ordinary sorts are their names (``str``), elements of ordered
sorts are integers, and elements of power sorts are :class:`Collection`
values, which compare by their members.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Union

from .kernel import (
    EQ,
    LEQ,
    MEMBER,
    And,
    Atom,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Signature,
    Theory,
    Var,
)
from .parser import CollDecl, ElemDecl, FactDocument, FactEntry


class SemanticsError(Exception):
    pass


class InterpretationError(SemanticsError):
    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(diagnostics))


class UnboundVariableError(SemanticsError):
    pass


class SignatureMismatch(SemanticsError):
    pass


class CapExceeded(SemanticsError):
    pass


@dataclass(frozen=True)
class Collection:
    members: frozenset
    name: str = field(default="", compare=False)

    def __str__(self) -> str:
        return self.name or "{" + ", ".join(sorted(map(str, self.members))) + "}"


Element = Union[str, int, Collection]


def label(e: Element) -> str:
    return str(e)


@dataclass(frozen=True)
class Interpretation:
    """A closed-world finite model.

    ``carriers`` lists, for every sort, all its elements, subsort elements
    included, in declaration order (ordered sorts ascending).
    """

    signature: Signature
    carriers: Mapping[str, tuple]
    relations: Mapping[str, frozenset]
    constants: Mapping[str, Any] = field(default_factory=dict)

    def own_elements(self, sort: str) -> tuple:
        """Elements whose most specific sort is ``sort``."""
        below = set()
        for sub in self.signature.subsorts_of(sort):
            if sub != sort:
                below.update(self.carriers[sub])
        return tuple(e for e in self.carriers[sort] if e not in below)

    def with_constant(self, name: str, sort: str, element: Element) -> Interpretation:
        """Extend signature and model with a fresh constant denoting ``element``."""
        from .kernel import ConstDecl, build_signature

        sig = build_signature(self.signature.declarations() + [ConstDecl(name, sort)])
        consts = dict(self.constants)
        consts[name] = element
        return Interpretation(sig, self.carriers, self.relations, consts)


def build_interpretation(sig: Signature, facts: FactDocument) -> Interpretation:
    """Bind a fact document against ``sig``; raises :class:`InterpretationError`."""
    diags: list[str] = []

    def err(entry, msg):
        loc = getattr(entry, "loc", None)
        diags.append(f"{loc[0]}:{loc[1]}: {msg}" if loc else msg)

    own: dict[Any, str] = {}
    order: list = []
    ints: dict[str, list[int]] = {s.name: [] for s in sig.base_sorts() if s.is_ordered}
    for e in facts.entries:
        if not isinstance(e, ElemDecl):
            continue
        sort = sig.sorts.get(e.sort)
        if sort is None:
            err(e, f"unknown sort {e.sort}")
            continue
        if sort.is_power:
            err(e, f"elements of power sort {e.sort} are declared with 'coll'")
            continue
        for n in e.names:
            if isinstance(n, int) != sort.is_ordered:
                err(e, f"ordered sort {e.sort} takes integer elements" if sort.is_ordered
                    else f"integer element {n} given for unordered sort {e.sort}")
                continue
            if isinstance(n, int):
                if n in ints[e.sort]:
                    err(e, f"time literal {n} declared twice in {e.sort}")
                else:
                    ints[e.sort].append(n)
                continue
            if n in own:
                if own[n] == e.sort:
                    err(e, f"element {n} declared twice in {e.sort}")
                else:
                    err(e, f"element {n} declared in both {own[n]} and {e.sort} (carriers must be disjoint)")
                continue
            own[n] = e.sort
            order.append(n)

    carriers: dict[str, tuple] = {}
    for s in sig.base_sorts():
        if s.is_ordered:
            carriers[s.name] = tuple(sorted(ints[s.name]))
        else:
            carriers[s.name] = tuple(n for n in order if sig.is_subsort(own[n], s.name))

    colls: dict[str, Collection] = {}
    by_members: dict[frozenset, str] = {}
    for e in facts.entries:
        if not isinstance(e, CollDecl):
            continue
        sort = sig.sorts.get(e.sort)
        if sort is None or not sort.is_power:
            err(e, f"{e.sort} is not a power sort")
            continue
        if e.name in colls or e.name in own:
            err(e, f"duplicate name {e.name}")
            continue
        ok = True
        for m in e.members:
            if m not in own:
                err(e, f"unknown element {m} in collection {e.name}")
                ok = False
            elif not sig.is_subsort(own[m], sort.base):
                err(e, f"member {m} of {e.name} has sort {own[m]}, expected a subsort of {sort.base}")
                ok = False
        if not ok:
            continue
        c = Collection(frozenset(e.members), e.name)
        if c.members in by_members:
            err(e, f"collection {e.name} has the same members as {by_members[c.members]}")
            continue
        by_members[c.members] = e.name
        colls[e.name] = c
    for s in sig.power_sorts():
        carriers[s.name] = tuple(c for c in colls.values() if _coll_sort(facts, c.name) == s.name)

    relations: dict[str, set] = {r: set() for r in sig.relations}
    for e in facts.entries:
        if not isinstance(e, FactEntry):
            continue
        want = sig.relations.get(e.relation)
        if want is None:
            err(e, f"unknown relation {e.relation}")
            continue
        if len(want) != len(e.args):
            err(e, f"{e.relation} expects {len(want)} arguments, got {len(e.args)}")
            continue
        row = []
        for i, (a, s) in enumerate(zip(e.args, want)):
            value = _resolve(sig, carriers, colls, a, s)
            if value is None:
                err(e, f"argument {i + 1} of {e.relation}: {a} is not an element of {s}")
            row.append(value)
        if None not in row:
            relations[e.relation].add(tuple(row))

    for s in sig.base_sorts():
        if not carriers[s.name]:
            diags.append(f"empty carrier for sort {s.name}")

    consts = {}
    for c, s in sig.constants.items():
        value = _resolve(sig, carriers, colls, c, s)
        if value is None:
            diags.append(f"constant {c}: no element named {c} in sort {s}")
        consts[c] = value

    if diags:
        raise InterpretationError(diags)
    return Interpretation(sig, carriers, {r: frozenset(v) for r, v in relations.items()}, consts)


def _coll_sort(facts: FactDocument, name: str) -> str:
    for e in facts.collections:
        if e.name == name:
            return e.sort
    raise KeyError(name)


def _resolve(sig, carriers, colls, name, sort):
    if sig.sorts[sort].is_power:
        c = colls.get(name) if isinstance(name, str) else None
        return c if c is not None and c in carriers[sort] else None
    return name if name in carriers[sort] else None


# -- evaluation --------------------------------------------------------------


def _value(interp: Interpretation, env: Mapping[str, Element], t) -> Element:
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise UnboundVariableError(f"variable {t.name} has no value") from None
    return interp.constants[t.name]


def evaluate(interp: Interpretation, env: Mapping[str, Element], f: Formula) -> bool:
    """Truth value of ``f`` in ``interp`` under the assignment ``env``."""
    if isinstance(f, Atom):
        args = [_value(interp, env, t) for t in f.args]
        if f.rel == MEMBER:
            return args[0] in args[1].members
        if f.rel == LEQ:
            return args[0] <= args[1]
        if f.rel == EQ:
            return args[0] == args[1]
        return tuple(args) in interp.relations[f.rel]
    if isinstance(f, Not):
        return not evaluate(interp, env, f.body)
    if isinstance(f, And):
        return evaluate(interp, env, f.left) and evaluate(interp, env, f.right)
    if isinstance(f, Or):
        return evaluate(interp, env, f.left) or evaluate(interp, env, f.right)
    if isinstance(f, Implies):
        return not evaluate(interp, env, f.left) or evaluate(interp, env, f.right)
    if isinstance(f, Iff):
        return evaluate(interp, env, f.left) == evaluate(interp, env, f.right)
    inner = dict(env)
    test = all if isinstance(f, Forall) else any

    def run() -> Iterator[bool]:
        for e in interp.carriers[f.sort]:
            inner[f.var] = e
            yield evaluate(interp, inner, f.body)

    return test(run())


@dataclass(frozen=True)
class AxiomResult:
    axiom: str
    value: bool
    witness: tuple[tuple[str, Element], ...] | None = None

    def line(self) -> str:
        text = f"AXIOM {self.axiom}: {'true' if self.value else 'false'}"
        if self.witness:
            text += " [witness: " + ", ".join(f"{v}={label(e)}" for v, e in self.witness) + "]"
        return text

    def report(self) -> dict:
        witness = None
        if self.witness is not None:
            witness = {v: e if isinstance(e, int) else label(e) for v, e in self.witness}
        return {"axiom": self.axiom, "value": self.value, "witness": witness}


@dataclass(frozen=True)
class Verdict:
    results: tuple[AxiomResult, ...] = ()

    def __getitem__(self, name: str) -> bool:
        return self.result(name).value

    def result(self, name: str) -> AxiomResult:
        for r in self.results:
            if r.axiom == name:
                return r
        raise KeyError(name)

    def as_dict(self) -> dict[str, bool]:
        return {r.axiom: r.value for r in self.results}

    @property
    def all_true(self) -> bool:
        return all(r.value for r in self.results)

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]

    def json_lines(self) -> list[str]:
        return [json.dumps(r.report()) for r in self.results]


def outer_block(f: Formula) -> tuple[list[tuple[str, str]], Formula]:
    """Leading universal quantifiers of ``f`` and the remaining body."""
    block = []
    while isinstance(f, Forall):
        block.append((f.var, f.sort))
        f = f.body
    return block, f


def falsifying_witness(interp: Interpretation, f: Formula) -> tuple[tuple[str, Element], ...] | None:
    """First assignment to the outer universal block that makes the body false."""
    block, body = outer_block(f)
    if not block:
        return None
    names = [v for v, _ in block]
    for values in itertools.product(*(interp.carriers[s] for _, s in block)):
        env = dict(zip(names, values))
        if not evaluate(interp, env, body):
            return tuple(zip(names, values))
    return None


def check_theory(interp: Interpretation, theory: Theory, axioms: list[str] | None = None) -> Verdict:
    """Evaluate every axiom (or the named ones) in declaration order."""
    if theory.signature != interp.signature:
        raise SignatureMismatch(f"theory {theory.name} does not match the interpretation's signature")
    results = []
    for name, f in theory.axioms:
        if axioms is not None and name not in axioms:
            continue
        value = evaluate(interp, {}, f)
        witness = None if value else falsifying_witness(interp, f)
        results.append(AxiomResult(name, value, witness))
    if axioms is not None:
        missing = set(axioms) - {r.axiom for r in results}
        if missing:
            raise KeyError(", ".join(sorted(missing)))
    return Verdict(tuple(results))


def enumerate_collections(interp: Interpretation, base: str, cap: int = 12) -> Interpretation:
    """Replace the collections over ``base`` by every nonempty subset of its carrier."""
    carrier = interp.carriers[base]
    if len(carrier) > cap:
        raise CapExceeded(f"{base} has {len(carrier)} elements; enumerating subsets is capped at {cap}")
    carriers = dict(interp.carriers)
    for s in interp.signature.power_sorts():
        if s.base != base:
            continue
        declared = {c.members: c.name for c in interp.carriers[s.name]}
        subsets = []
        for k in range(1, len(carrier) + 1):
            for combo in itertools.combinations(carrier, k):
                members = frozenset(combo)
                name = declared.get(members) or "{" + ",".join(map(str, combo)) + "}"
                subsets.append(Collection(members, name))
        carriers[s.name] = tuple(subsets)
    return Interpretation(interp.signature, carriers, interp.relations, interp.constants)
