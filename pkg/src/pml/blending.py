"""Theory morphisms and pushout blending over a generic space.

A span ``left <- generic -> right`` is glued into one theory: sorts and
symbols identified through the generic space become one, everything else is
kept apart (same-named leftovers get ``_L``/``_R`` suffixes).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

from .kernel import (
    BUILTINS,
    Atom,
    Const,
    ConstDecl,
    Formula,
    Not,
    PowerSortDecl,
    RelDecl,
    SortDecl,
    Theory,
    Var,
    _Binary,
    build_signature,
    power_sort_name,
)
from .modelfinder import Bounds, Sat, SearchOutcome, find_model
from .semantics import evaluate


class BlendError(Exception):
    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(diagnostics))


class MorphismError(BlendError):
    pass


class IncompatibleIdentifications(BlendError):
    pass


@dataclass(frozen=True)
class Morphism:
    """Sort and symbol maps from ``source`` into ``target``.

    Power sorts need not be listed: ``P(S)`` goes to ``P(sort_map[S])``.
    """

    source: Theory
    target: Theory
    sort_map: Mapping[str, str] = field(default_factory=dict)
    symbol_map: Mapping[str, str] = field(default_factory=dict)

    def sort(self, name: str) -> str:
        if name in self.sort_map:
            return self.sort_map[name]
        s = self.source.signature.sorts[name]
        if s.is_power and s.base in self.sort_map:
            base = self.sort_map[s.base]
            ctor = next((t.ctor for t in self.target.signature.power_sorts() if t.base == base), s.ctor)
            return power_sort_name(ctor, base)
        raise KeyError(name)

    def symbol(self, name: str) -> str:
        if name in BUILTINS:
            return name
        return self.symbol_map[name]

    def full_sort_map(self) -> dict[str, str]:
        return {s: self.sort(s) for s in self.source.signature.sorts}

    def full_symbol_map(self) -> dict[str, str]:
        sig = self.source.signature
        return {n: self.symbol_map[n] for n in [*sig.relations, *sig.constants]}


def identity(theory: Theory) -> Morphism:
    sig = theory.signature
    return Morphism(
        theory,
        theory,
        {s.name: s.name for s in sig.base_sorts()},
        {n: n for n in [*sig.relations, *sig.constants]},
    )


def compose(g: Morphism, f: Morphism) -> Morphism:
    """``g`` after ``f``."""
    return Morphism(
        f.source,
        g.target,
        {s: g.sort(t) for s, t in f.full_sort_map().items()},
        {n: g.symbol(t) for n, t in f.full_symbol_map().items()},
    )


def check_morphism(m: Morphism, preservation_bounds: Bounds | None = None, node_limit: int = 100_000) -> list[str]:
    """Problems with ``m``; an empty list means valid.

    With ``preservation_bounds``, also look for a model of the target within
    those bounds and report (as ``warning:`` lines) translated source axioms
    that fail in it.  This check is advisory.
    """
    src, dst = m.source.signature, m.target.signature
    out: list[str] = []
    smap: dict[str, str] = {}
    for s in src.sorts.values():
        try:
            image = m.sort(s.name)
        except KeyError:
            out.append(f"partial-map: sort {s.name} is not mapped")
            continue
        t = dst.sorts.get(image)
        if t is None:
            out.append(f"sort-incompatible: {s.name} maps to unknown sort {image}")
            continue
        if t.kind != s.kind:
            out.append(f"sort-incompatible: {s.kind} sort {s.name} maps to {t.kind} sort {image}")
            continue
        smap[s.name] = image
    for s in src.power_sorts():
        if s.name in smap and s.base in smap:
            if dst.sorts[smap[s.name]].base != smap[s.base]:
                out.append(f"sort-incompatible: {s.name} must map to a power sort over {smap[s.base]}")
    for sub, sup in ((a, b) for a, b in src.leq if a != b):
        if sub in smap and sup in smap and not dst.is_subsort(smap[sub], smap[sup]):
            out.append(f"sort-incompatible: {sub} < {sup} is not preserved ({smap[sub]} vs {smap[sup]})")

    for r, args in src.relations.items():
        if r not in m.symbol_map:
            out.append(f"partial-map: relation {r} is not mapped")
            continue
        image = m.symbol_map[r]
        if image not in dst.relations:
            out.append(f"sort-incompatible: relation {r} maps to unknown relation {image}")
            continue
        want = dst.relations[image]
        if len(want) != len(args):
            out.append(f"arity-mismatch: {r} has {len(args)} arguments but {image} has {len(want)}")
            continue
        for i, (a, b) in enumerate(zip(args, want)):
            if a in smap and smap[a] != b:
                out.append(f"sort-incompatible: argument {i + 1} of {r} is {a} -> {smap[a]}, but {image} expects {b}")
    for c, s in src.constants.items():
        if c not in m.symbol_map:
            out.append(f"partial-map: constant {c} is not mapped")
            continue
        image = m.symbol_map[c]
        if image not in dst.constants:
            out.append(f"sort-incompatible: constant {c} maps to unknown constant {image}")
        elif s in smap and dst.constants[image] != smap[s]:
            out.append(f"sort-incompatible: constant {c} maps to {image} of sort {dst.constants[image]}, expected {smap[s]}")

    if not out and preservation_bounds is not None:
        outcome = find_model(m.target, preservation_bounds, node_limit)
        if isinstance(outcome, Sat):
            for name, f in m.source.axioms:
                if not evaluate(outcome.interpretation, {}, translate(m, f)):
                    out.append(f"warning: axiom {name} is not preserved in a model of {m.target.name}")
    return out


def translate(m: Morphism, f: Formula) -> Formula:
    if isinstance(f, Atom):
        args = tuple(
            Var(t.name, m.sort(t.sort) if t.sort else None) if isinstance(t, Var) else Const(m.symbol(t.name))
            for t in f.args
        )
        return Atom(m.symbol(f.rel), args, f.loc)
    if isinstance(f, Not):
        return Not(translate(m, f.body))
    if isinstance(f, _Binary):
        return type(f)(translate(m, f.left), translate(m, f.right))
    return type(f)(f.var, m.sort(f.sort), translate(m, f.body), f.loc)


# -- pushout ----------------------------------------------------------------


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the earliest-added item as representative for determinism
            order = list(self.parent)
            if order.index(rb) < order.index(ra):
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True)
class BlendResult:
    theory: Theory
    left: Morphism
    right: Morphism


def _name_classes(classes: dict, members: dict, taken: set[str]) -> dict:
    """Pick a name per class: the left name if present, suffixing clashes."""
    proposal = {}
    for root in classes:
        ms = members[root]
        left = [n for side, n in ms if side == "L"]
        right = [n for side, n in ms if side == "R"]
        proposal[root] = left[0] if left else right[0]
    by_name: dict[str, list] = {}
    for root, n in proposal.items():
        by_name.setdefault(n, []).append(root)
    names = {}
    for n, roots in by_name.items():
        if len(roots) == 1:
            names[roots[0]] = n
            continue
        for root in roots:
            sides = {side for side, _ in members[root]}
            tag = "L" if sides == {"L"} else "R" if sides == {"R"} else "LR"
            names[root] = f"{n}_{tag}"
    clash = [n for n in names.values() if n in taken]
    if clash:
        raise IncompatibleIdentifications([f"blend name {n} is already used" for n in clash])
    return names


def pushout(generic: Theory, f: Morphism, g: Morphism, name: str | None = None) -> BlendResult:
    """Blend ``f.target`` and ``g.target`` along the generic theory."""
    if f.source != generic or g.source != generic:
        raise MorphismError(["both morphisms must start at the generic theory"])
    left, right = f.target, g.target
    ls, rs = left.signature, right.signature

    # sorts: identify f(x) ~ g(x) and check kinds before anything else
    uf = _UnionFind()
    for side, sig in (("L", ls), ("R", rs)):
        for s in sig.sorts:
            uf.add((side, s))
    problems = []
    for x in generic.signature.sorts:
        try:
            a, b = ("L", f.sort(x)), ("R", g.sort(x))
        except KeyError:
            problems.append(f"partial-map: sort {x} is not mapped")
            continue
        if a not in uf.parent or b not in uf.parent:
            problems.append(f"unknown image for sort {x}")
            continue
        uf.union(a, b)
    if problems:
        raise MorphismError(problems)

    def kind(item):
        side, s = item
        return (ls if side == "L" else rs).sorts[s].kind

    members: dict = {}
    for item in uf.parent:
        members.setdefault(uf.find(item), []).append(item)
    for ms in members.values():
        kinds = {kind(i) for i in ms}
        if len(kinds) > 1:
            raise IncompatibleIdentifications(
                ["cannot identify sorts of different kinds: " + ", ".join(f"{s} ({kind((side, s))})" for side, s in ms)]
            )
    # power sorts over identified bases must be identified too
    def power_base(item):
        side, name = item
        return (side, _sig(item, ls, rs).sorts[name].base)

    powers = [i for i in uf.parent if kind(i) == "power"]
    changed = True
    while changed:
        changed = False
        for a in powers:
            for b in powers:
                if uf.find(power_base(a)) == uf.find(power_base(b)) and uf.find(a) != uf.find(b):
                    uf.union(a, b)
                    changed = True
    members = {}
    for item in uf.parent:
        members.setdefault(uf.find(item), []).append(item)

    for errs in (check_morphism(f), check_morphism(g)):
        if errs:
            raise MorphismError(errs)

    base_roots = [r for r in members if kind(r) != "power"]
    sort_names = _name_classes({r: None for r in base_roots}, members, set())
    for r in members:
        if kind(r) == "power":
            side, s = r
            sort = _sig(r, ls, rs).sorts[s]
            sort_names[r] = power_sort_name(sort.ctor, sort_names[uf.find((side, sort.base))])

    def sort_of(side, s):
        return sort_names[uf.find((side, s))]

    subs = set()
    for side, sig in (("L", ls), ("R", rs)):
        for a, b in sig.subsorts:
            subs.add((sort_of(side, a), sort_of(side, b)))

    # symbols
    su = _UnionFind()
    for side, sig in (("L", ls), ("R", rs)):
        for n in [*sig.relations, *sig.constants]:
            su.add((side, n))
    gsig = generic.signature
    for x in [*gsig.relations, *gsig.constants]:
        su.union(("L", f.symbol(x)), ("R", g.symbol(x)))
    sym_members: dict = {}
    for item in su.parent:
        sym_members.setdefault(su.find(item), []).append(item)
    sym_names = _name_classes(sym_members, sym_members, set(sort_names.values()))

    # relations whose identified members disagree on argument sorts
    for ms in sym_members.values():
        shapes = set()
        for side, n in ms:
            sig = ls if side == "L" else rs
            if n in sig.relations:
                shapes.add(("rel",) + tuple(sort_of(side, a) for a in sig.relations[n]))
            else:
                shapes.add(("const", sort_of(side, sig.constants[n])))
        if len(shapes) > 1:
            raise IncompatibleIdentifications([f"identified symbols {ms} have different shapes"])

    decls: list = []
    seen_sorts = set()
    for r in members:
        n = sort_names[r]
        if n in seen_sorts:
            continue
        seen_sorts.add(n)
        side, s = r
        sort = _sig(r, ls, rs).sorts[s]
        if sort.is_power:
            decls.append(PowerSortDecl(sort.ctor, sort_names[uf.find((side, sort.base))]))
        else:
            supers = tuple(sorted(b for a, b in subs if a == n))
            decls.append(SortDecl(n, supers, sort.is_ordered))
    for root in sym_members:
        side, n = root
        sig = _sig(root, ls, rs)
        if n in sig.relations:
            decls.append(RelDecl(sym_names[root], tuple(sort_of(side, a) for a in sig.relations[n])))
        else:
            decls.append(ConstDecl(sym_names[root], sort_of(side, sig.constants[n])))
    try:
        sig = build_signature(decls)
    except Exception as e:  # subsort cycles created by the quotient
        raise IncompatibleIdentifications([str(e)]) from e

    blend_stub = Theory(name or f"{left.name}_{right.name}_blend", sig, ())
    inj_l = Morphism(left, blend_stub,
                     {s.name: sort_of("L", s.name) for s in ls.base_sorts()},
                     {n: sym_names[su.find(("L", n))] for n in [*ls.relations, *ls.constants]})
    inj_r = Morphism(right, blend_stub,
                     {s.name: sort_of("R", s.name) for s in rs.base_sorts()},
                     {n: sym_names[su.find(("R", n))] for n in [*rs.relations, *rs.constants]})

    axioms: list[tuple[str, Formula]] = []
    names: set[str] = set()

    def add(axiom_name, formula, tag):
        if any(formula == a for _, a in axioms):
            return
        if axiom_name in names:
            axiom_name = f"{axiom_name}_{tag}"
        axiom_name = _fresh_axiom(axiom_name, names)
        names.add(axiom_name)
        axioms.append((axiom_name, formula))

    for n, a in left.axioms:
        add(n, translate(inj_l, a), "L")
    for n, a in right.axioms:
        add(n, translate(inj_r, a), "R")
    via = compose(inj_l, f)
    for n, a in generic.axioms:
        add(n, translate(via, a), "G")

    blended = Theory(blend_stub.name, sig, tuple(axioms))
    inj_l = Morphism(left, blended, inj_l.sort_map, inj_l.symbol_map)
    inj_r = Morphism(right, blended, inj_r.sort_map, inj_r.symbol_map)
    return BlendResult(blended, inj_l, inj_r)


def _sig(item, ls, rs):
    return ls if item[0] == "L" else rs


def _fresh_axiom(name: str, taken: set[str]) -> str:
    out, i = name, 1
    while out in taken:
        i += 1
        out = f"{name}_{i}"
    return out


def commutes(result: BlendResult, f: Morphism, g: Morphism) -> bool:
    a, b = compose(result.left, f), compose(result.right, g)
    return a.full_sort_map() == b.full_sort_map() and a.full_symbol_map() == b.full_symbol_map()


def is_isomorphism(m: Morphism) -> bool:
    """Bijective on sorts and symbols and mapping axioms onto axioms."""
    src, dst = m.source.signature, m.target.signature
    sorts = m.full_sort_map()
    syms = m.full_symbol_map()
    if sorted(sorts.values()) != sorted(dst.sorts) or len(set(sorts.values())) != len(sorts):
        return False
    if sorted(syms.values()) != sorted([*dst.relations, *dst.constants]) or len(set(syms.values())) != len(syms):
        return False
    if {(sorts[a], sorts[b]) for a, b in src.leq} != set(dst.leq):
        return False
    mapped = [translate(m, f) for _, f in m.source.axioms]
    target = [f for _, f in m.target.axioms]
    return len(mapped) == len(target) and all(x in target for x in mapped) and all(y in mapped for y in target)


def check_consistency(theory: Theory, bounds: Bounds, node_limit: int = 1_000_000) -> SearchOutcome:
    """Bounded consistency check of a (blended) theory."""
    return find_model(theory, bounds, node_limit)


# -- morphism files -----------------------------------------------------------

_MAP_LINE = re.compile(r"^(sort|rel|const)\s+(\S+)\s*->\s*(\S+)$")


def parse_map(text: str) -> dict[str, dict[str, str]]:
    """Parse ``.map`` text into ``{"sort": {...}, "rel": {...}, "const": {...}}``."""
    out: dict[str, dict[str, str]] = {"sort": {}, "rel": {}, "const": {}}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _MAP_LINE.match(line)
        if m is None:
            errors.append(f"{lineno}:1: expected 'sort|rel|const <src> -> <dst>'")
            continue
        kind, src, dst = m.groups()
        if src in out[kind]:
            errors.append(f"{lineno}:1: {kind} {src} mapped twice")
        out[kind][src] = dst
    if errors:
        raise MorphismError(errors)
    return out


def render_map(m: Morphism) -> str:
    sig = m.source.signature
    lines = [f"sort {s.name} -> {m.sort_map[s.name]}" for s in sig.base_sorts() if s.name in m.sort_map]
    lines += [f"rel {r} -> {m.symbol_map[r]}" for r in sig.relations if r in m.symbol_map]
    lines += [f"const {c} -> {m.symbol_map[c]}" for c in sig.constants if c in m.symbol_map]
    return "\n".join(lines) + "\n"


def morphism_from_map(source: Theory, target: Theory, text: str) -> Morphism:
    parsed = parse_map(text)
    symbols = dict(parsed["rel"])
    symbols.update(parsed["const"])
    return Morphism(source, target, parsed["sort"], symbols)
