"""Many-sorted signatures, terms and formulas, with sort checking.

Formulas are immutable.  Two formulas compare equal when they agree up to the
names of bound variables, so ``forall x:S . P(x)`` equals ``forall y:S . P(y)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Union

BASE = "base"
ORDERED = "ordered"
POWER = "power"

MEMBER = "in"
LEQ = "<="
EQ = "="
BUILTINS = (MEMBER, LEQ, EQ)


class KernelError(Exception):
    """Base class for errors raised by the kernel."""


class SignatureError(KernelError):
    def __init__(self, diagnostics: list[SortDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.message for d in diagnostics))


class SortingError(KernelError):
    def __init__(self, diagnostic: SortDiagnostic):
        self.diagnostic = diagnostic
        super().__init__(diagnostic.message)


@dataclass(frozen=True)
class SortDiagnostic:
    code: str
    message: str
    location: str = ""
    expected: str | None = None
    found: str | None = None
    line: int | None = None
    column: int | None = None

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}: " if self.line is not None else ""
        at = f" (at {self.location})" if self.location else ""
        return f"{where}{self.message}{at}"


# -- sorts and signatures ---------------------------------------------------


@dataclass(frozen=True)
class Sort:
    name: str
    kind: str = BASE
    base: str | None = None
    ctor: str | None = None

    @property
    def is_power(self) -> bool:
        return self.kind == POWER

    @property
    def is_ordered(self) -> bool:
        return self.kind == ORDERED


def power_sort_name(ctor: str, base: str) -> str:
    return f"{ctor}({base})"


@dataclass(frozen=True)
class SortDecl:
    name: str
    supers: tuple[str, ...] = ()
    ordered: bool = False
    loc: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PowerSortDecl:
    ctor: str
    base: str
    loc: tuple[int, int] | None = field(default=None, compare=False)

    @property
    def name(self) -> str:
        return power_sort_name(self.ctor, self.base)


@dataclass(frozen=True)
class ConstDecl:
    name: str
    sort: str
    loc: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RelDecl:
    name: str
    args: tuple[str, ...]
    loc: tuple[int, int] | None = field(default=None, compare=False)


Declaration = Union[SortDecl, PowerSortDecl, ConstDecl, RelDecl]


@dataclass(frozen=True)
class Signature:
    """A checked signature.  Build one with :func:`build_signature`."""

    sorts: Mapping[str, Sort]
    subsorts: tuple[tuple[str, str], ...]
    relations: Mapping[str, tuple[str, ...]]
    constants: Mapping[str, str]
    leq: frozenset[tuple[str, str]] = field(repr=False)

    def is_subsort(self, sub: str, sup: str) -> bool:
        return (sub, sup) in self.leq

    def supersorts(self, name: str) -> list[str]:
        return [s for s in self.sorts if (name, s) in self.leq]

    def subsorts_of(self, name: str) -> list[str]:
        return [s for s in self.sorts if (s, name) in self.leq]

    def power_sorts(self) -> list[Sort]:
        return [s for s in self.sorts.values() if s.is_power]

    def base_sorts(self) -> list[Sort]:
        return [s for s in self.sorts.values() if not s.is_power]

    def builtin_signatures(self) -> list[tuple[str, tuple[str, str]]]:
        """The automatically installed membership, order and equality symbols."""
        out: list[tuple[str, tuple[str, str]]] = []
        for s in self.sorts.values():
            if s.is_power:
                out.append((MEMBER, (s.base, s.name)))
            if s.is_ordered:
                out.append((LEQ, (s.name, s.name)))
            if not s.is_power:
                out.append((EQ, (s.name, s.name)))
        return out

    def declarations(self) -> list[Declaration]:
        """Declarations that rebuild this signature."""
        supers: dict[str, list[str]] = {}
        for sub, sup in self.subsorts:
            supers.setdefault(sub, []).append(sup)
        decls: list[Declaration] = []
        for s in self.sorts.values():
            if s.is_power:
                decls.append(PowerSortDecl(s.ctor, s.base))
            else:
                decls.append(SortDecl(s.name, tuple(supers.get(s.name, ())), s.is_ordered))
        decls += [ConstDecl(n, s) for n, s in self.constants.items()]
        decls += [RelDecl(n, a) for n, a in self.relations.items()]
        return decls


def _decl_where(decl) -> tuple[int | None, int | None]:
    loc = getattr(decl, "loc", None)
    return loc if loc else (None, None)


def build_signature(declarations: Iterable[Declaration]) -> Signature:
    """Check declarations and return a signature with its subsort closure.

    Raises :class:`SignatureError` carrying every problem found.
    """
    declarations = list(declarations)
    diags: list[SortDiagnostic] = []

    def err(code, msg, decl, **kw):
        line, col = _decl_where(decl)
        diags.append(SortDiagnostic(code, msg, line=line, column=col, **kw))

    sorts: dict[str, Sort] = {}
    taken: set[str] = set()
    for d in declarations:
        if isinstance(d, SortDecl):
            if d.name in taken:
                err("duplicate-name", f"duplicate name {d.name}", d)
                continue
            taken.add(d.name)
            sorts[d.name] = Sort(d.name, ORDERED if d.ordered else BASE)
    for d in declarations:
        if isinstance(d, PowerSortDecl):
            if d.name in sorts:
                err("duplicate-name", f"duplicate name {d.name}", d)
                continue
            base = sorts.get(d.base)
            if base is None or base.is_power:
                err("unknown-sort", f"power sort {d.name} needs a declared base sort {d.base}", d)
                continue
            sorts[d.name] = Sort(d.name, POWER, d.base, d.ctor)

    pairs: list[tuple[str, str]] = []
    for d in declarations:
        if not isinstance(d, SortDecl) or d.name not in sorts:
            continue
        for sup in d.supers:
            target = sorts.get(sup)
            if target is None:
                err("unknown-sort", f"unknown sort {sup}", d)
            elif target.is_power:
                err("unknown-sort", f"{sup} is a power sort and cannot be a supersort", d)
            elif target.is_ordered or sorts[d.name].is_ordered:
                err("ordered-subsort", f"ordered sorts cannot take part in subsorting ({d.name} < {sup})", d)
            elif sup == d.name:
                err("subsort-cycle", f"sort {d.name} declared as its own supersort", d)
            elif (d.name, sup) not in pairs:
                pairs.append((d.name, sup))

    leq = {(s, s) for s in sorts} | set(pairs)
    for k in sorts:
        for i in sorts:
            if (i, k) in leq:
                leq.update((i, j) for j in sorts if (k, j) in leq)
    cyclic = sorted({a for a, b in leq if a != b and (b, a) in leq})
    if cyclic:
        diags.append(SortDiagnostic("subsort-cycle", "cyclic subsorting among " + ", ".join(cyclic)))

    relations: dict[str, tuple[str, ...]] = {}
    constants: dict[str, str] = {}
    for d in declarations:
        if isinstance(d, (RelDecl, ConstDecl)):
            if d.name in taken or d.name in sorts or d.name in BUILTINS:
                err("duplicate-name", f"duplicate name {d.name}", d)
                continue
            taken.add(d.name)
            wanted = d.args if isinstance(d, RelDecl) else (d.sort,)
            missing = [s for s in wanted if s not in sorts]
            for s in missing:
                err("unknown-sort", f"unknown sort {s} in declaration of {d.name}", d)
            if missing:
                continue
            if isinstance(d, RelDecl):
                relations[d.name] = tuple(d.args)
            else:
                constants[d.name] = d.sort

    if diags:
        raise SignatureError(diags)
    return Signature(sorts, tuple(pairs), relations, constants, frozenset(leq))


# -- terms ------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str
    sort: str | None = None

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Union[Var, Const]


def sort_of_term(sig: Signature, context: Mapping[str, str], term: Term) -> str:
    """Sort name of ``term``; raises :class:`SortingError` if it has none."""
    if isinstance(term, Var):
        if term.name in context:
            return context[term.name]
        if term.sort is not None:
            return term.sort
        raise SortingError(SortDiagnostic("unbound-variable", f"unbound variable {term.name}"))
    if term.name in sig.constants:
        return sig.constants[term.name]
    raise SortingError(SortDiagnostic("unknown-constant", f"unknown constant {term.name}"))


# -- formulas ---------------------------------------------------------------


class Formula:
    """Base class; equality and hashing ignore bound-variable names."""

    @cached_property
    def _key(self):
        return _alpha_key(self, {})

    def __eq__(self, other):
        if not isinstance(other, Formula):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __and__(self, other: Formula) -> Formula:
        return And(self, other)

    def __or__(self, other: Formula) -> Formula:
        return Or(self, other)

    def __invert__(self) -> Formula:
        return Not(self)

    def implies(self, other: Formula) -> Formula:
        return Implies(self, other)

    def iff(self, other: Formula) -> Formula:
        return Iff(self, other)

    def __str__(self) -> str:
        from .parser import render_formula

        return render_formula(self)


@dataclass(frozen=True, eq=False)
class Atom(Formula):
    rel: str
    args: tuple[Term, ...]
    loc: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True, eq=False)
class Not(Formula):
    body: Formula


@dataclass(frozen=True, eq=False)
class _Binary(Formula):
    left: Formula
    right: Formula


class And(_Binary):
    pass


class Or(_Binary):
    pass


class Implies(_Binary):
    pass


class Iff(_Binary):
    pass


@dataclass(frozen=True, eq=False)
class _Quantifier(Formula):
    var: str
    sort: str
    body: Formula
    loc: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        # keep binder names distinct along every path
        if self.var in bound_names(self.body):
            object.__setattr__(self, "body", _rename_inner(self.body, self.var))


class Forall(_Quantifier):
    pass


class Exists(_Quantifier):
    pass


BINARY = (And, Or, Implies, Iff)
QUANTIFIERS = (Forall, Exists)


def forall(names: str | Iterable[str], sort: str, body: Formula) -> Formula:
    names = [names] if isinstance(names, str) else list(names)
    for n in reversed(names):
        body = Forall(n, sort, body)
    return body


def exists(names: str | Iterable[str], sort: str, body: Formula) -> Formula:
    names = [names] if isinstance(names, str) else list(names)
    for n in reversed(names):
        body = Exists(n, sort, body)
    return body


def atom(rel: str, *args: Term | str) -> Atom:
    """Shorthand: string arguments become unannotated variables."""
    return Atom(rel, tuple(Var(a) if isinstance(a, str) else a for a in args))


def _alpha_key(f: Formula, bound: dict[str, int]):
    if isinstance(f, Atom):
        return ("atom", f.rel, tuple(_term_key(t, bound) for t in f.args))
    if isinstance(f, Not):
        return ("not", _alpha_key(f.body, bound))
    if isinstance(f, _Binary):
        return (type(f).__name__, _alpha_key(f.left, bound), _alpha_key(f.right, bound))
    inner = dict(bound)
    inner[f.var] = len(bound)
    return (type(f).__name__, f.sort, _alpha_key(f.body, inner))


def _term_key(t: Term, bound: dict[str, int]):
    if isinstance(t, Var):
        if t.name in bound:
            return ("bound", bound[t.name])
        return ("free", t.name)
    return ("const", t.name)


def bound_names(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset()
    if isinstance(f, Not):
        return bound_names(f.body)
    if isinstance(f, _Binary):
        return bound_names(f.left) | bound_names(f.right)
    return bound_names(f.body) | {f.var}


def all_names(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {t.name for t in f.args}
    if isinstance(f, Not):
        return all_names(f.body)
    if isinstance(f, _Binary):
        return all_names(f.left) | all_names(f.right)
    return all_names(f.body) | {f.var}


def fresh_name(base: str, avoid: set[str] | frozenset[str]) -> str:
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def _rename_inner(f: Formula, name: str) -> Formula:
    """Rename every binder of ``name`` inside ``f`` to a fresh name."""
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(_rename_inner(f.body, name))
    if isinstance(f, _Binary):
        return type(f)(_rename_inner(f.left, name), _rename_inner(f.right, name))
    body = _rename_inner(f.body, name)
    if f.var != name:
        return type(f)(f.var, f.sort, body, f.loc)
    new = fresh_name(name, all_names(body) | {name})
    return type(f)(new, f.sort, _replace_var(body, name, Var(new, f.sort)), f.loc)


def _replace_var(f: Formula, name: str, term: Term) -> Formula:
    # raw replacement of free occurrences; caller guarantees no capture
    if isinstance(f, Atom):
        args = tuple(term if isinstance(t, Var) and t.name == name else t for t in f.args)
        return Atom(f.rel, args, f.loc)
    if isinstance(f, Not):
        return Not(_replace_var(f.body, name, term))
    if isinstance(f, _Binary):
        return type(f)(_replace_var(f.left, name, term), _replace_var(f.right, name, term))
    if f.var == name:
        return f
    return type(f)(f.var, f.sort, _replace_var(f.body, name, term), f.loc)


def free_variables(f: Formula) -> frozenset[tuple[str, str | None]]:
    """Free variables as ``(name, sort)`` pairs; the sort is the annotation, if any."""
    if isinstance(f, Atom):
        return frozenset((t.name, t.sort) for t in f.args if isinstance(t, Var))
    if isinstance(f, Not):
        return free_variables(f.body)
    if isinstance(f, _Binary):
        return free_variables(f.left) | free_variables(f.right)
    return frozenset(p for p in free_variables(f.body) if p[0] != f.var)


def free_names(f: Formula) -> frozenset[str]:
    return frozenset(n for n, _ in free_variables(f))


def substitute(f: Formula, v: Var | str, t: Term, sig: Signature | None = None) -> Formula:
    """Capture-avoiding substitution of ``t`` for the free variable ``v``.

    When ``sig`` is given and both sorts are known, the term's sort must be a
    subsort of the variable's sort.
    """
    name = v if isinstance(v, str) else v.name
    if sig is not None and isinstance(v, Var) and v.sort is not None:
        try:
            found = sort_of_term(sig, {}, t)
        except SortingError:
            found = None
        if found is not None and not sig.is_subsort(found, v.sort):
            raise SortingError(
                SortDiagnostic(
                    "sort-mismatch",
                    f"cannot substitute a term of sort {found} for {name}: expected {v.sort}, found {found}",
                    expected=v.sort,
                    found=found,
                )
            )
    incoming = {t.name} if isinstance(t, Var) else set()
    return _subst(f, name, t, incoming)


def _subst(f: Formula, name: str, t: Term, incoming: set[str]) -> Formula:
    if isinstance(f, Atom):
        args = tuple(t if isinstance(a, Var) and a.name == name else a for a in f.args)
        return Atom(f.rel, args, f.loc)
    if isinstance(f, Not):
        return Not(_subst(f.body, name, t, incoming))
    if isinstance(f, _Binary):
        return type(f)(_subst(f.left, name, t, incoming), _subst(f.right, name, t, incoming))
    if f.var == name or name not in free_names(f.body):
        return f
    if f.var in incoming:
        new = fresh_name(f.var, all_names(f.body) | incoming | {name})
        body = _replace_var(f.body, f.var, Var(new, f.sort))
        return type(f)(new, f.sort, _subst(body, name, t, incoming), f.loc)
    return type(f)(f.var, f.sort, _subst(f.body, name, t, incoming), f.loc)


# -- sort checking ----------------------------------------------------------


def _where(f: Formula) -> dict:
    loc = getattr(f, "loc", None)
    return {"line": loc[0], "column": loc[1]} if loc else {}


def check_formula(sig: Signature, context: Mapping[str, str], f: Formula, location: str = "") -> list[SortDiagnostic]:
    """Every sort problem in ``f``; an empty list means well-sorted."""
    out: list[SortDiagnostic] = []
    _check(sig, dict(context), f, location, out)
    return out


def _check(sig, ctx, f, location, out, quiet=frozenset()):
    # ``quiet``: variables bound at an unknown sort, already reported at the binder
    if isinstance(f, Atom):
        _check_atom(sig, ctx, f, location, out, quiet)
    elif isinstance(f, Not):
        _check(sig, ctx, f.body, location, out, quiet)
    elif isinstance(f, _Binary):
        _check(sig, ctx, f.left, location, out, quiet)
        _check(sig, ctx, f.right, location, out, quiet)
    else:
        if f.sort in sig.sorts:
            quiet = quiet - {f.var}
        else:
            out.append(SortDiagnostic("unknown-sort", f"unknown sort {f.sort}", location, **_where(f)))
            quiet = quiet | {f.var}
        inner = dict(ctx)
        inner[f.var] = f.sort
        _check(sig, inner, f.body, location, out, quiet)


def _check_atom(sig, ctx, f: Atom, location, out, quiet=frozenset()):
    where = f"{location}: {f.rel} atom" if location else f"{f.rel} atom"
    pos = _where(f)
    found: list[str | None] = []
    for t in f.args:
        try:
            s = sort_of_term(sig, ctx, t)
            found.append(s if s in sig.sorts else None)
            if s not in sig.sorts and not (isinstance(t, Var) and t.name in quiet):
                out.append(SortDiagnostic("unknown-sort", f"unknown sort {s} for {t.name}", where, **pos))
        except SortingError as e:
            d = e.diagnostic
            out.append(SortDiagnostic(d.code, d.message, where, **pos))
            found.append(None)

    def mismatch(i, expected, got):
        out.append(
            SortDiagnostic(
                "sort-mismatch",
                f"argument {i + 1} of {f.rel}: expected {expected}, found {got}",
                f"{where}, argument {i + 1}",
                expected=expected,
                found=got,
                **pos,
            )
        )

    if f.rel in BUILTINS:
        if len(f.args) != 2:
            out.append(SortDiagnostic("arity-mismatch", f"{f.rel} expects 2 arguments, got {len(f.args)}", where, **pos))
            return
        a, b = found
        if f.rel == MEMBER:
            if b is not None and not sig.sorts[b].is_power:
                mismatch(1, "a power sort", b)
            elif b is not None and a is not None and not sig.is_subsort(a, sig.sorts[b].base):
                mismatch(0, sig.sorts[b].base, a)
        elif f.rel == LEQ:
            if a is not None and not sig.sorts[a].is_ordered:
                mismatch(0, "an ordered sort", a)
            elif a is not None and b is not None and not sig.is_subsort(b, a):
                mismatch(1, a, b)
        else:
            if a is not None and sig.sorts[a].is_power:
                mismatch(0, "a base sort", a)
            elif b is not None and sig.sorts[b].is_power:
                mismatch(1, "a base sort", b)
            elif a is not None and b is not None:
                if not any(sig.is_subsort(b, s) for s in sig.supersorts(a)):
                    mismatch(1, a, b)
        return

    if f.rel not in sig.relations:
        out.append(SortDiagnostic("unknown-relation", f"unknown relation {f.rel}", where, **pos))
        return
    declared = sig.relations[f.rel]
    if len(declared) != len(f.args):
        out.append(
            SortDiagnostic(
                "arity-mismatch", f"{f.rel} expects {len(declared)} arguments, got {len(f.args)}", where, **pos
            )
        )
        return
    for i, (want, got) in enumerate(zip(declared, found)):
        if got is not None and not sig.is_subsort(got, want):
            mismatch(i, want, got)


# -- theories ---------------------------------------------------------------


class TheoryError(KernelError):
    def __init__(self, diagnostics: list[SortDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class Theory:
    """A signature with named, well-sorted sentences."""

    name: str
    signature: Signature
    axioms: tuple[tuple[str, Formula], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(self.axioms))
        diags: list[SortDiagnostic] = []
        seen: set[str] = set()
        for name, f in self.axioms:
            if name in seen:
                diags.append(SortDiagnostic("duplicate-name", f"duplicate axiom name {name}", name))
            seen.add(name)
            diags += check_formula(self.signature, {}, f, name)
            for v, annotated in sorted(free_variables(f), key=str):
                if annotated is None:
                    continue  # already reported as unbound
                diags.append(SortDiagnostic("unbound-variable", f"axiom {name} has free variable {v}", name))
        if diags:
            raise TheoryError(diags)

    def axiom(self, name: str) -> Formula:
        for n, f in self.axioms:
            if n == name:
                return f
        raise KeyError(name)
