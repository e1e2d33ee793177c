"""Recursive-descent parser and canonical renderer for ``.pml`` and ``.facts`` text.

Operators have ASCII and unicode spellings::

    forall ∀   exists ∃   not ¬   /\\ ∧   \\/ ∨   -> →   <-> ↔   in ∈   <= ≤

Binding strength, tightest first: ``not``, ``/\\``, ``\\/``, ``->``, ``<->``.
``/\\`` and ``\\/`` group to the left, ``->`` and ``<->`` to the right, and a
quantifier body extends as far to the right as possible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .kernel import (
    EQ,
    LEQ,
    MEMBER,
    And,
    Atom,
    ConstDecl,
    Const,
    Declaration,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    PowerSortDecl,
    RelDecl,
    Signature,
    SignatureError,
    SortDecl,
    Theory,
    Var,
    build_signature,
    check_formula,
)

KEYWORDS = frozenset(
    "spec end sort ordered powersort of const rel axiom forall exists not in "
    "model for elem coll fact".split()
)

_UNICODE = {"∀": "forall", "∃": "exists", "¬": "not", "∧": "/\\", "∨": "\\/",
            "→": "->", "↔": "<->", "∈": "in", "≤": "<="}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<op><->|->|<=|/\\|\\/|[<=(),:.*{}])
  | (?P<uni>[∀∃¬∧∨→↔∈≤])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostics: list[ParseDiagnostic]):
        assert diagnostics
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str  # ident, kw, int, op, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError([ParseDiagnostic(line, col, f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token("kw" if value in KEYWORDS else "ident", value, line, col))
        elif kind == "int":
            tokens.append(Token("int", value, line, col))
        elif kind == "op":
            tokens.append(Token("op", value, line, col))
        elif kind == "uni":
            canon = _UNICODE[value]
            tokens.append(Token("kw" if canon in KEYWORDS else "op", canon, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- documents --------------------------------------------------------------


@dataclass(frozen=True)
class SpecDocument:
    name: str
    declarations: tuple[Declaration, ...] = ()
    axioms: tuple[tuple[str, Formula], ...] = ()
    loc: dict = field(default_factory=dict, compare=False, repr=False)


@dataclass(frozen=True)
class ElemDecl:
    names: tuple[Union[str, int], ...]
    sort: str
    loc: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class CollDecl:
    name: str
    sort: str
    members: tuple[str, ...]
    loc: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class FactEntry:
    relation: str
    args: tuple[Union[str, int], ...]
    loc: tuple[int, int] | None = field(default=None, compare=False)


Entry = Union[ElemDecl, CollDecl, FactEntry]


@dataclass(frozen=True)
class FactDocument:
    name: str
    target: str
    entries: tuple[Entry, ...] = ()

    @property
    def elements(self) -> list[tuple[Union[str, int], str]]:
        return [(n, e.sort) for e in self.entries if isinstance(e, ElemDecl) for n in e.names]

    @property
    def collections(self) -> list[CollDecl]:
        return [e for e in self.entries if isinstance(e, CollDecl)]

    @property
    def facts(self) -> list[FactEntry]:
        return [e for e in self.entries if isinstance(e, FactEntry)]

    def without(self, entry: Entry) -> FactDocument:
        """Copy with the first entry equal to ``entry`` removed."""
        entries = list(self.entries)
        entries.remove(entry)
        return FactDocument(self.name, self.target, tuple(entries))

    def with_entries(self, *extra: Entry) -> FactDocument:
        return FactDocument(self.name, self.target, self.entries + tuple(extra))


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError([ParseDiagnostic(tok.line, tok.col, msg)])

    def describe(self, tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("kw", "op") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.describe(self.tok)}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "ident":
            self.fail(f"expected {what}, found {self.describe(self.tok)}")
        tok = self.tok
        self.i += 1
        return tok.text

    def sort_ref(self) -> str:
        name = self.ident("sort name")
        if self.at("("):
            self.i += 1
            base = self.ident("sort name")
            self.expect(")")
            return f"{name}({base})"
        return name

    def loc(self) -> tuple[int, int]:
        return (self.tok.line, self.tok.col)

    # spec files

    def spec(self) -> SpecDocument:
        self.expect("spec")
        name = self.ident("spec name")
        decls: list[Declaration] = []
        while self.tok.text in ("sort", "powersort", "const", "rel") and self.tok.kind == "kw":
            decls.append(self.decl())
        axioms: list[tuple[str, Formula]] = []
        locs: dict = {}
        while self.at("axiom"):
            start = self.loc()
            self.i += 1
            aname = self.ident("axiom name")
            self.expect(":")
            axioms.append((aname, self.formula(set())))
            locs[aname] = start
        self.expect("end")
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.describe(self.tok)} after 'end'")
        return SpecDocument(name, tuple(decls), tuple(axioms), locs)

    def decl(self) -> Declaration:
        loc = self.loc()
        kw = self.tok.text
        self.i += 1
        if kw == "sort":
            name = self.ident("sort name")
            supers: list[str] = []
            if self.at("<"):
                self.i += 1
                supers.append(self.ident("sort name"))
                while self.at(","):
                    self.i += 1
                    supers.append(self.ident("sort name"))
            ordered = False
            if self.at("ordered"):
                self.i += 1
                ordered = True
            return SortDecl(name, tuple(supers), ordered, loc)
        if kw == "powersort":
            ctor = self.ident("power sort name")
            self.expect("of")
            return PowerSortDecl(ctor, self.ident("sort name"), loc)
        if kw == "const":
            name = self.ident("constant name")
            self.expect(":")
            return ConstDecl(name, self.sort_ref(), loc)
        name = self.ident("relation name")
        self.expect(":")
        args = [self.sort_ref()]
        while self.at("*"):
            self.i += 1
            args.append(self.sort_ref())
        return RelDecl(name, tuple(args), loc)

    # formulas; ``scope`` holds the names of enclosing binders

    def formula(self, scope: set[str]) -> Formula:
        return self.iff(scope)

    def iff(self, scope):
        left = self.implication(scope)
        if self.at("<->"):
            self.i += 1
            return Iff(left, self.iff(scope))
        return left

    def implication(self, scope):
        left = self.disjunction(scope)
        if self.at("->"):
            self.i += 1
            return Implies(left, self.implication(scope))
        return left

    def disjunction(self, scope):
        left = self.conjunction(scope)
        while self.at("\\/"):
            self.i += 1
            left = Or(left, self.conjunction(scope))
        return left

    def conjunction(self, scope):
        left = self.unary(scope)
        while self.at("/\\"):
            self.i += 1
            left = And(left, self.unary(scope))
        return left

    def unary(self, scope):
        if self.at("not"):
            self.i += 1
            return Not(self.unary(scope))
        if self.at("forall") or self.at("exists"):
            return self.quantified(scope)
        return self.primary(scope)

    def quantified(self, scope):
        loc = self.loc()
        kind = Forall if self.tok.text == "forall" else Exists
        self.i += 1
        names = [self.ident("variable name")]
        while self.at(","):
            self.i += 1
            names.append(self.ident("variable name"))
        self.expect(":")
        sort = self.sort_ref()
        self.expect(".")
        body = self.formula(scope | set(names))
        for n in reversed(names):
            body = kind(n, sort, body, loc)
        return body

    def primary(self, scope):
        if self.at("("):
            self.i += 1
            f = self.formula(scope)
            self.expect(")")
            return f
        loc = self.loc()
        if self.tok.kind == "ident" and self.peek().kind == "op" and self.peek().text == "(":
            rel = self.ident()
            self.i += 1
            args = [self.term(scope)]
            while self.at(","):
                self.i += 1
                args.append(self.term(scope))
            self.expect(")")
            return Atom(rel, tuple(args), loc)
        left = self.term(scope)
        for op in (MEMBER, LEQ, EQ):
            if self.at(op):
                self.i += 1
                return Atom(op, (left, self.term(scope)), loc)
        self.fail(f"expected 'in', '<=' or '=', found {self.describe(self.tok)}")

    def term(self, scope):
        name = self.ident("term")
        return Var(name) if name in scope else Const(name)

    # fact files

    def facts(self) -> FactDocument:
        self.expect("model")
        name = self.ident("model name")
        self.expect("for")
        target = self.ident("spec name")
        entries: list[Entry] = []
        while self.tok.kind == "kw" and self.tok.text in ("elem", "coll", "fact"):
            entries.append(self.entry())
        self.expect("end")
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.describe(self.tok)} after 'end'")
        return FactDocument(name, target, tuple(entries))

    def entry(self) -> Entry:
        loc = self.loc()
        kw = self.tok.text
        self.i += 1
        if kw == "elem":
            if self.tok.kind == "int":
                names: list = [self.integer()]
                while self.at(","):
                    self.i += 1
                    names.append(self.integer())
            else:
                names = [self.ident("element name")]
                while self.at(","):
                    self.i += 1
                    names.append(self.ident("element name"))
            self.expect(":")
            return ElemDecl(tuple(names), self.sort_ref(), loc)
        if kw == "coll":
            name = self.ident("collection name")
            self.expect(":")
            sort = self.sort_ref()
            self.expect("=")
            self.expect("{")
            members = [self.ident("element name")]
            while self.at(","):
                self.i += 1
                members.append(self.ident("element name"))
            self.expect("}")
            return CollDecl(name, sort, tuple(members), loc)
        rel = self.ident("relation name")
        self.expect("(")
        args = [self.arg()]
        while self.at(","):
            self.i += 1
            args.append(self.arg())
        self.expect(")")
        return FactEntry(rel, tuple(args), loc)

    def integer(self) -> int:
        if self.tok.kind != "int":
            self.fail(f"expected integer, found {self.describe(self.tok)}")
        value = int(self.tok.text)
        self.i += 1
        return value

    def arg(self):
        return self.integer() if self.tok.kind == "int" else self.ident("element name")


def _annotate_vars(f: Formula, ctx: dict[str, str]) -> Formula:
    """Attach binder sorts to bound variable occurrences."""
    if isinstance(f, Atom):
        args = tuple(Var(t.name, ctx.get(t.name)) if isinstance(t, Var) else t for t in f.args)
        return Atom(f.rel, args, f.loc)
    if isinstance(f, Not):
        return Not(_annotate_vars(f.body, ctx))
    if isinstance(f, (And, Or, Implies, Iff)):
        return type(f)(_annotate_vars(f.left, ctx), _annotate_vars(f.right, ctx))
    inner = dict(ctx)
    inner[f.var] = f.sort
    return type(f)(f.var, f.sort, _annotate_vars(f.body, inner), f.loc)


def parse_spec(text: str) -> SpecDocument:
    """Parse and sort-check a ``.pml`` document; raises :class:`ParseError`."""
    doc = _Parser(text).spec()
    doc = SpecDocument(
        doc.name, doc.declarations, tuple((n, _annotate_vars(f, {})) for n, f in doc.axioms), doc.loc
    )
    diags: list[ParseDiagnostic] = []
    try:
        sig = build_signature(doc.declarations)
    except SignatureError as e:
        raise ParseError([ParseDiagnostic(d.line or 1, d.column or 1, d.message) for d in e.diagnostics])
    seen: set[str] = set()
    for name, f in doc.axioms:
        line, col = doc.loc.get(name, (1, 1))
        if name in seen:
            diags.append(ParseDiagnostic(line, col, f"duplicate axiom name {name}"))
        seen.add(name)
        for d in check_formula(sig, {}, f, name):
            diags.append(ParseDiagnostic(d.line or line, d.column or col, f"{d.message} (axiom {name})"))
    if diags:
        raise ParseError(diags)
    return doc


def parse_facts(text: str, signature: Signature | None = None) -> FactDocument:
    """Parse a ``.facts`` document.

    Names are bound later by the semantics module.  When ``signature`` is given,
    relation names and arities are checked here as well.
    """
    doc = _Parser(text).facts()
    if signature is not None:
        diags = []
        for e in doc.facts:
            want = signature.relations.get(e.relation)
            line, col = e.loc or (1, 1)
            if want is None:
                diags.append(ParseDiagnostic(line, col, f"unknown relation {e.relation}"))
            elif len(want) != len(e.args):
                diags.append(ParseDiagnostic(line, col, f"{e.relation} expects {len(want)} arguments, got {len(e.args)}"))
        if diags:
            raise ParseError(diags)
    return doc


def to_theory(doc: SpecDocument) -> Theory:
    return Theory(doc.name, build_signature(doc.declarations), doc.axioms)


def from_theory(theory: Theory) -> SpecDocument:
    return SpecDocument(theory.name, tuple(theory.signature.declarations()), theory.axioms)


def load_theory(text: str) -> Theory:
    return to_theory(parse_spec(text))


# -- rendering --------------------------------------------------------------

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}
_SYM = {Iff: "<->", Implies: "->", Or: "\\/", And: "/\\"}
_RIGHT_ASSOC = (Iff, Implies)


def render_formula(f: Formula) -> str:
    return _render(f, 0)


def _render(f: Formula, ctx: int) -> str:
    # ctx: binding strength demanded by the enclosing position
    if isinstance(f, Atom):
        args = [t.name for t in f.args]
        if f.rel in (MEMBER, LEQ, EQ):
            return f"{args[0]} {f.rel} {args[1]}"
        return f"{f.rel}({', '.join(args)})"
    if isinstance(f, Not):
        return "not " + _render(f.body, 6)
    if isinstance(f, (Forall, Exists)):
        kind = type(f)
        names = [f.var]
        body = f.body
        while type(body) is kind and body.sort == f.sort:
            names.append(body.var)
            body = body.body
        kw = "forall" if kind is Forall else "exists"
        text = f"{kw} {', '.join(names)}: {f.sort} . {_render(body, 0)}"
        return f"({text})" if ctx > 0 else text
    prec = _PREC[type(f)]
    if type(f) in _RIGHT_ASSOC:
        left, right = _render(f.left, prec + 1), _render(f.right, prec)
    else:
        left, right = _render(f.left, prec), _render(f.right, prec + 1)
    text = f"{left} {_SYM[type(f)]} {right}"
    return f"({text})" if prec < ctx else text


def _render_decl(d: Declaration) -> str:
    if isinstance(d, SortDecl):
        text = f"sort {d.name}"
        if d.supers:
            text += " < " + ", ".join(d.supers)
        return text + (" ordered" if d.ordered else "")
    if isinstance(d, PowerSortDecl):
        return f"powersort {d.ctor} of {d.base}"
    if isinstance(d, ConstDecl):
        return f"const {d.name}: {d.sort}"
    return f"rel {d.name}: {' * '.join(d.args)}"


def _render_entry(e: Entry) -> str:
    if isinstance(e, ElemDecl):
        return f"elem {', '.join(str(n) for n in e.names)}: {e.sort}"
    if isinstance(e, CollDecl):
        return f"coll {e.name}: {e.sort} = {{{', '.join(e.members)}}}"
    return f"fact {e.relation}({', '.join(str(a) for a in e.args)})"


def render(doc: SpecDocument | FactDocument) -> str:
    """Canonical text for a document; parses back to an equal document."""
    if isinstance(doc, SpecDocument):
        lines = [f"spec {doc.name}"]
        lines += ["  " + _render_decl(d) for d in doc.declarations]
        lines += [f"  axiom {n}: {render_formula(f)}" for n, f in doc.axioms]
    else:
        lines = [f"model {doc.name} for {doc.target}"]
        lines += ["  " + _render_entry(e) for e in doc.entries]
    lines.append("end")
    return "\n".join(lines) + "\n"
