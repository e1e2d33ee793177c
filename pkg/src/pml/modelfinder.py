"""Bounded model finding.

Carriers are fixed by the bounds.  For every choice of collections and
constant values, the axioms are instantiated over the carriers into a
propositional formula whose variables are candidate relation tuples.  A DPLL
search with unit propagation then decides the tuples in a fixed order,
trying "absent" first, so the first model found is the lexicographically
least one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .kernel import (
    EQ,
    LEQ,
    MEMBER,
    And,
    Atom,
    Formula,
    Forall,
    Iff,
    Implies,
    Not,
    Or,
    Signature,
    Theory,
    Var,
)
from .parser import CollDecl, ElemDecl, FactDocument, FactEntry
from .semantics import Collection, Interpretation, check_theory


class BoundsError(ValueError):
    pass


class SpaceTooLarge(Exception):
    pass


@dataclass(frozen=True)
class Bounds:
    """Per-sort sizes for the search.

    ``sizes`` counts the elements whose most specific sort is the given sort,
    so a sort with subsorts may have size 0 as long as its carrier ends up
    nonempty.  Ordered sorts of size k get the literals 0..k-1.  ``collections``
    gives the exact number of collections per power sort.  Unlisted sorts
    default to 0 own elements if they have subsorts and 1 otherwise; unlisted
    power sorts default to one collection.
    """

    sizes: Mapping[str, int] = field(default_factory=dict)
    collections: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def parse(cls, specs: list[str], sig: Signature) -> Bounds:
        sizes, colls = {}, {}
        for item in specs:
            name, sep, value = item.rpartition("=")
            if not sep or not value.isdigit():
                raise BoundsError(f"bad bound {item!r}; expected SORT=k")
            if name not in sig.sorts:
                raise BoundsError(f"unknown sort {name} in bound {item!r}")
            (colls if sig.sorts[name].is_power else sizes)[name] = int(value)
        return cls(sizes, colls)

    def own_sizes(self, sig: Signature) -> dict[str, int]:
        out = {}
        for s in sig.base_sorts():
            has_subs = any(sub != s.name for sub in sig.subsorts_of(s.name))
            out[s.name] = self.sizes.get(s.name, 0 if has_subs else 1)
        unknown = set(self.sizes) - set(out)
        if unknown:
            raise BoundsError("bounds name unknown or power sorts: " + ", ".join(sorted(unknown)))
        return out

    def collection_counts(self, sig: Signature, carrier_sizes: Mapping[str, int]) -> dict[str, int]:
        out = {}
        for s in sig.power_sorts():
            k = self.collections.get(s.name, 1)
            limit = 2 ** carrier_sizes[s.base] - 1
            if k < 0 or k > limit:
                raise BoundsError(f"{s.name}: {k} collections requested, at most {limit} possible")
            out[s.name] = k
        return out


@dataclass(frozen=True)
class Sat:
    interpretation: Interpretation
    nodes: int


@dataclass(frozen=True)
class Unsat:
    nodes: int


@dataclass(frozen=True)
class ResourceLimit:
    nodes: int


SearchOutcome = Sat | Unsat | ResourceLimit


def _unique(base: str, taken: set[str]) -> str:
    name, i = base, 1
    while name in taken:
        i += 1
        name = f"{base}_{i}"
    taken.add(name)
    return name


@dataclass
class _Space:
    sig: Signature
    carriers: dict[str, tuple]
    counts: dict[str, int]
    coll_names: dict[str, list[str]] = field(default_factory=dict)

    @classmethod
    def build(cls, sig: Signature, bounds: Bounds) -> _Space:
        own = bounds.own_sizes(sig)
        taken = set(sig.constants) | set(sig.relations) | set(sig.sorts)
        elems: list[tuple[str, str]] = []
        carriers: dict[str, tuple] = {}
        for s in sig.base_sorts():
            n = own[s.name]
            if n < 0:
                raise BoundsError(f"negative size for {s.name}")
            if s.is_ordered:
                carriers[s.name] = tuple(range(n))
            else:
                elems += [(_unique(f"{s.name}_{i}", taken), s.name) for i in range(1, n + 1)]
        for s in sig.base_sorts():
            if not s.is_ordered:
                carriers[s.name] = tuple(e for e, es in elems if sig.is_subsort(es, s.name))
            if not carriers[s.name]:
                raise BoundsError(f"bounds leave sort {s.name} empty")
        counts = bounds.collection_counts(sig, {k: len(v) for k, v in carriers.items()})
        coll_names = {
            s.name: [_unique(f"{s.ctor}_{s.base}_{i}", taken) for i in range(1, counts[s.name] + 1)]
            for s in sig.power_sorts()
        }
        return cls(sig, carriers, counts, coll_names)

    def collection_choices(self) -> Iterator[dict[str, tuple]]:
        options = []
        for s in self.sig.power_sorts():
            base = self.carriers[s.base]
            subsets = sorted(
                (c for k in range(1, len(base) + 1) for c in itertools.combinations(range(len(base)), k))
            )
            names = self.coll_names[s.name]
            picks = [
                tuple(Collection(frozenset(base[i] for i in sub), n) for sub, n in zip(choice, names))
                for choice in itertools.combinations(subsets, self.counts[s.name])
            ]
            options.append((s.name, picks))
        for combo in itertools.product(*(p for _, p in options)):
            yield {name: pick for (name, _), pick in zip(options, combo)}

    def constant_choices(self, carriers) -> Iterator[dict]:
        names = list(self.sig.constants)
        for values in itertools.product(*(carriers[self.sig.constants[c]] for c in names)):
            yield dict(zip(names, values))

    def candidates(self, carriers) -> list[tuple[str, tuple]]:
        return [
            (r, row)
            for r, args in self.sig.relations.items()
            for row in itertools.product(*(carriers[s] for s in args))
        ]

    def configurations(self):
        for colls in self.collection_choices():
            carriers = dict(self.carriers)
            carriers.update(colls)
            for consts in self.constant_choices(carriers):
                yield carriers, consts


# -- grounding --------------------------------------------------------------

TRUE = ("true",)
FALSE = ("false",)


def _mk_not(a):
    if a is TRUE:
        return FALSE
    if a is FALSE:
        return TRUE
    if a[0] == "not":
        return a[1]
    return ("not", a)


def _mk_and(parts):
    out = []
    for p in parts:
        if p is FALSE:
            return FALSE
        if p is TRUE:
            continue
        out.extend(p[1] if p[0] == "and" else (p,))
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else ("and", tuple(out))


def _mk_or(parts):
    return _mk_not(_mk_and([_mk_not(p) for p in parts]))


def _mk_iff(a, b):
    if a is TRUE:
        return b
    if b is TRUE:
        return a
    if a is FALSE:
        return _mk_not(b)
    if b is FALSE:
        return _mk_not(a)
    if a == b:
        return TRUE
    return ("iff", a, b)


class _Grounder:
    def __init__(self, carriers, consts, index: dict[tuple, int]):
        self.carriers = carriers
        self.consts = consts
        self.index = index

    def value(self, t, env):
        return env[t.name] if isinstance(t, Var) else self.consts[t.name]

    def ground(self, f: Formula, env: dict):
        if isinstance(f, Atom):
            args = [self.value(t, env) for t in f.args]
            if f.rel == MEMBER:
                return TRUE if args[0] in args[1].members else FALSE
            if f.rel == LEQ:
                return TRUE if args[0] <= args[1] else FALSE
            if f.rel == EQ:
                return TRUE if args[0] == args[1] else FALSE
            return ("var", self.index[(f.rel, tuple(args))])
        if isinstance(f, Not):
            return _mk_not(self.ground(f.body, env))
        if isinstance(f, And):
            return _mk_and([self.ground(f.left, env), self.ground(f.right, env)])
        if isinstance(f, Or):
            return _mk_or([self.ground(f.left, env), self.ground(f.right, env)])
        if isinstance(f, Implies):
            return _mk_or([_mk_not(self.ground(f.left, env)), self.ground(f.right, env)])
        if isinstance(f, Iff):
            return _mk_iff(self.ground(f.left, env), self.ground(f.right, env))
        parts = []
        inner = dict(env)
        for e in self.carriers[f.sort]:
            inner[f.var] = e
            g = self.ground(f.body, inner)
            if isinstance(f, Forall):
                if g is FALSE:
                    return FALSE
                parts.append(g)
            else:
                if g is TRUE:
                    return TRUE
                parts.append(_mk_not(g))
        return _mk_and(parts) if isinstance(f, Forall) else _mk_not(_mk_and(parts))


class _Encoder:
    """Tseitin encoding; primary variables are 1..n, auxiliaries follow."""

    def __init__(self, n: int):
        self.next = n + 1
        self.clauses: list[list[int]] = []
        self.cache: dict = {}

    def lit(self, g) -> int:
        kind = g[0]
        if kind == "var":
            return g[1]
        if kind == "not":
            return -self.lit(g[1])
        if g in self.cache:
            return self.cache[g]
        v = self.next
        self.next += 1
        if kind == "and":
            lits = [self.lit(c) for c in g[1]]
            for c in lits:
                self.clauses.append([-v, c])
            self.clauses.append([v] + [-c for c in lits])
        else:  # iff
            a, b = self.lit(g[1]), self.lit(g[2])
            self.clauses += [[-v, -a, b], [-v, a, -b], [v, a, b], [v, -a, -b]]
        self.cache[g] = v
        return v

    def assert_true(self, g) -> bool:
        """Add ``g`` as a hard constraint; False if trivially unsatisfiable."""
        if g is TRUE:
            return True
        if g is FALSE:
            return False
        if g[0] == "and":
            return all(self.assert_true(c) for c in g[1])
        if g[0] == "not" and g[1][0] == "and":
            self.clauses.append([-self.lit(c) for c in g[1][1]])
            return True
        self.clauses.append([self.lit(g)])
        return True


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def take(self) -> bool:
        if self.used >= self.limit:
            return False
        self.used += 1
        return True


class _Exhausted(Exception):
    pass


def _dpll(n_primary: int, n_total: int, clauses: list[list[int]], budget: _Budget) -> list[bool] | None:
    occurs: dict[int, list[int]] = {}
    for ci, clause in enumerate(clauses):
        for lit in clause:
            occurs.setdefault(lit, []).append(ci)
    value: list[int] = [0] * (n_total + 1)  # 0 unknown, 1 true, -1 false
    trail: list[int] = []

    def assign(lit: int) -> bool:
        v = abs(lit)
        want = 1 if lit > 0 else -1
        if value[v]:
            return value[v] == want
        value[v] = want
        trail.append(v)
        return True

    def holds(lit: int) -> int:
        x = value[abs(lit)]
        return x if lit > 0 else -x

    def propagate(queue: list[int]) -> bool:
        while queue:
            lit = queue.pop()
            for ci in occurs.get(-lit, ()):
                unknown = None
                n_unknown = 0
                sat = False
                for l2 in clauses[ci]:
                    h = holds(l2)
                    if h == 1:
                        sat = True
                        break
                    if h == 0:
                        n_unknown += 1
                        unknown = l2
                if sat:
                    continue
                if n_unknown == 0:
                    return False
                if n_unknown == 1:
                    assign(unknown)
                    queue.append(unknown)
        return True

    def undo(mark: int):
        while len(trail) > mark:
            value[trail.pop()] = 0

    if not budget.take():
        raise _Exhausted
    units = []
    for clause in clauses:
        if not clause:
            return None
        if len(clause) == 1:
            if not assign(clause[0]):
                return None
            units.append(clause[0])
    if not propagate(units):
        return None

    def next_var(v: int) -> int:
        while v <= n_primary and value[v]:
            v += 1
        return v

    # with full Tseitin definitions, fixing every primary forces every auxiliary
    stack: list[list[int]] = []  # [variable, branch, trail mark]
    v = next_var(1)
    while True:
        if v > n_primary:
            if all(any(holds(lit) == 1 for lit in c) for c in clauses):
                return [value[i] == 1 for i in range(1, n_primary + 1)]
        else:
            if not budget.take():
                raise _Exhausted
            stack.append([v, 0, len(trail)])
            if assign(-v) and propagate([-v]):
                v = next_var(v + 1)
                continue
        while stack:
            top = stack[-1]
            undo(top[2])
            if top[1] == 0:
                top[1] = 1
                if not budget.take():
                    raise _Exhausted
                if assign(top[0]) and propagate([top[0]]):
                    v = next_var(top[0] + 1)
                    break
            else:
                stack.pop()
        else:
            return None


def find_model(theory: Theory, bounds: Bounds, node_limit: int = 1_000_000) -> SearchOutcome:
    """Lexicographically least model of ``theory`` within ``bounds``."""
    if node_limit < 1:
        raise ValueError("node_limit must be positive")
    sig = theory.signature
    space = _Space.build(sig, bounds)
    budget = _Budget(node_limit)
    for carriers, consts in space.configurations():
        cands = space.candidates(carriers)
        index = {c: i + 1 for i, c in enumerate(cands)}
        grounder = _Grounder(carriers, consts, index)
        enc = _Encoder(len(cands))
        ok = all(enc.assert_true(grounder.ground(f, {})) for _, f in theory.axioms)
        if not ok:
            if not budget.take():
                return ResourceLimit(budget.used)
            continue
        try:
            bits = _dpll(len(cands), enc.next - 1, enc.clauses, budget)
        except _Exhausted:
            return ResourceLimit(budget.used)
        if bits is not None:
            relations = {r: set() for r in sig.relations}
            for (r, row), bit in zip(cands, bits):
                if bit:
                    relations[r].add(row)
            interp = Interpretation(sig, carriers, {r: frozenset(v) for r, v in relations.items()}, consts)
            return Sat(interp, budget.used)
    return Unsat(budget.used)


def count_models(theory: Theory, bounds: Bounds, limit: int = 2 ** 24) -> int:
    """Number of models in the bounded space, by brute-force enumeration."""
    sig = theory.signature
    space = _Space.build(sig, bounds)
    configs = list(space.configurations())
    total = 0
    for carriers, _ in configs:
        total += 2 ** len(space.candidates(carriers))
        if total > limit:
            raise SpaceTooLarge(f"more than {limit} candidate interpretations")
    count = 0
    for carriers, consts in configs:
        cands = space.candidates(carriers)
        for bits in itertools.product((False, True), repeat=len(cands)):
            relations = {r: set() for r in sig.relations}
            for (r, row), bit in zip(cands, bits):
                if bit:
                    relations[r].add(row)
            interp = Interpretation(sig, carriers, {r: frozenset(v) for r, v in relations.items()}, consts)
            if check_theory(interp, theory).all_true:
                count += 1
    return count


def model_to_facts(interp: Interpretation, spec_name: str, model_name: str = "found") -> FactDocument:
    """Fact-file form of an interpretation.

    Fact files bind a constant to the element of the same name, so the element
    a constant denotes is renamed after it.  Two constants denoting the same
    element cannot be written down and raise ``ValueError``.
    """
    sig = interp.signature
    rename: dict = {}
    for c, value in interp.constants.items():
        if isinstance(value, int):
            raise ValueError(f"constant {c} denotes time {value}; fact files cannot name it")
        if value in rename:
            raise ValueError(f"constants {rename[value]} and {c} denote the same element")
        rename[value] = c

    def name(e):
        if e in rename:
            return rename[e]
        return e.name if isinstance(e, Collection) else e

    entries: list = []
    for s in sig.base_sorts():
        own = interp.own_elements(s.name)
        if own:
            entries.append(ElemDecl(tuple(name(e) for e in own), s.name))
    for s in sig.power_sorts():
        base = interp.carriers[s.base]
        for c in interp.carriers[s.name]:
            entries.append(CollDecl(name(c), s.name, tuple(name(e) for e in base if e in c.members)))
    for r in sig.relations:
        for row in sorted(interp.relations[r], key=lambda row: _row_key(interp, r, row)):
            entries.append(FactEntry(r, tuple(name(e) for e in row)))
    return FactDocument(model_name, spec_name, tuple(entries))


def _row_key(interp, rel, row):
    args = interp.signature.relations[rel]
    return tuple(interp.carriers[s].index(e) for s, e in zip(args, row))
