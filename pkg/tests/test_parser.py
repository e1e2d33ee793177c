import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pml.kernel import Atom, Const, Exists, Forall, Implies, RelDecl, SortDecl, Var, atom
from pml.parser import (
    CollDecl,
    ElemDecl,
    FactDocument,
    FactEntry,
    ParseError,
    parse_facts,
    parse_spec,
    render,
    render_formula,
    tokenize,
)
from pml.statutes import data_text
from randomgen import random_facts, random_spec

seeds = st.integers(0, 2**32 - 1)


def diag(text, facts=False, **kw):
    with pytest.raises(ParseError) as e:
        (parse_facts if facts else parse_spec)(text, **kw)
    assert e.value.diagnostics
    return e.value.diagnostics


def spec_of(body: str) -> str:
    return "spec S\n  sort A\n  sort B < A\n  sort T ordered\n  powersort P of A\n" \
           "  rel R: A * A\n  rel Q: P(A) * T\n" + body + "end\n"


class TestPurchaseFile:
    def test_counts(self):
        doc = parse_spec(data_text("purchase.pml"))
        sorts = [d for d in doc.declarations if isinstance(d, SortDecl)]
        assert len(sorts) == 6
        assert len([d for d in doc.declarations if type(d).__name__ == "PowerSortDecl"]) == 1
        assert len([d for d in doc.declarations if isinstance(d, RelDecl)]) == 2
        assert [n for n, _ in doc.axioms] == ["SENT"]

    def test_villa_counts(self):
        doc = parse_facts(data_text("villa_sale.facts"))
        by_sort = {}
        for name, sort in doc.elements:
            by_sort.setdefault(sort, []).append(name)
        assert {s: len(v) for s, v in by_sort.items()} == {"P_nl": 2, "Pr_R": 1, "Pr_M": 1, "T": 2, "D": 1}
        assert len(doc.collections) == 1
        assert len(doc.facts) == 3


class TestFormulas:
    def test_precedence(self):
        doc = parse_spec(spec_of("  axiom X: forall x, y: A . not R(x, y) /\\ R(y, x) \\/ R(x, x) -> R(y, y)\n"))
        (_, f), = doc.axioms
        x, y = Var("x"), Var("y")
        body = Implies(
            (~Atom("R", (x, y)) & Atom("R", (y, x))) | Atom("R", (x, x)),
            Atom("R", (y, y)),
        )
        assert f == Forall("x", "A", Forall("y", "A", body))

    def test_right_assoc_implication(self):
        doc = parse_spec(spec_of("  axiom X: forall x: A . R(x, x) -> R(x, x) -> R(x, x)\n"))
        r = atom("R", "x", "x")
        assert doc.axioms[0][1] == Forall("x", "A", Implies(r, Implies(r, r)))

    def test_quantifier_extends_right(self):
        doc = parse_spec(spec_of("  axiom X: forall x: A . R(x, x) /\\ exists y: B . R(x, y) \\/ R(y, x)\n"))
        f = doc.axioms[0][1]
        assert isinstance(f.body.right, Exists)
        assert f.body.right.body == atom("R", "x", "y") | atom("R", "y", "x")

    def test_unicode_equals_ascii(self):
        a = parse_spec(spec_of("  axiom X: forall w: P(A) . forall t: T . forall x: A . "
                               "(x in w /\\ t <= t) -> not Q(w, t) <-> R(x, x)\n"))
        u = parse_spec(spec_of("  axiom X: ∀ w: P(A) . ∀ t: T . ∀ x: A . "
                               "(x ∈ w ∧ t ≤ t) → ¬ Q(w, t) ↔ R(x, x)\n"))
        assert a == u

    def test_variables_versus_constants(self):
        doc = parse_spec(spec_of("  const c: A\n  axiom X: forall x: A . R(x, c)\n"))
        (_, f), = doc.axioms
        assert f.body.args == (Var("x", "A"), Const("c"))
        assert f.body.args[0].sort == "A"


class TestDiagnostics:
    def test_empty_input(self):
        (d,) = diag("")
        assert (d.line, d.column) == (1, 1)
        assert "expected 'spec'" in d.message

    def test_location_of_syntax_error(self):
        (d,) = diag("spec S\n  sort A\n  rel R: A *\nend\n")
        assert (d.line, d.column) == (4, 1)
        assert d.message == "expected sort name, found 'end'"

    def test_wrong_arity(self):
        ds = diag(spec_of("  axiom X: forall x: A . R(x)\n"))
        assert any("R expects 2 arguments" in d.message for d in ds)

    def test_pur_arity(self):
        text = data_text("purchase.pml").replace("Pur(a, s, b, t)", "Pur(a, s, b)")
        ds = diag(text)
        assert any("Pur expects 4 arguments, got 3" in d.message for d in ds)
        assert all(d.line >= 1 and d.column >= 1 for d in ds)

    def test_literal_sent(self):
        (d,) = diag(data_text("purchase_literal.pml"))
        assert "expected P_ph(Pr), found Pr" in d.message
        assert d.line > 1

    def test_cycle_reported(self):
        ds = diag("spec S\n  sort A < B\n  sort B < A\nend\n")
        assert any("cycl" in d.message for d in ds)

    def test_facts_unknown_relation(self, sent):
        ds = diag("model m for Purchase\n  fact Owns(anna)\nend\n", facts=True, signature=sent.signature)
        assert (ds[0].line, ds[0].column) == (2, 3)

    def test_facts_arity(self, sent):
        ds = diag("model m for Purchase\n  fact Pur(anna, villa1, bertil)\nend\n", facts=True, signature=sent.signature)
        assert "Pur expects 4 arguments, got 3" in ds[0].message

    def test_mixed_elem_list(self):
        diag("model m for S\n  elem a, 3: A\nend\n", facts=True)

    def test_trailing_garbage(self):
        diag("model m for S\nend\nend\n", facts=True)

    def test_bad_character(self):
        (d,) = diag("spec S\n  sort A $\nend\n")
        assert (d.line, d.column) == (2, 10)


class TestRender:
    def test_minimal_parentheses(self):
        x = Var("x")
        f = Forall("x", "A", (atom("R", "x", "x") | atom("R", "x", "x")) & ~atom("R", "x", "x"))
        assert render_formula(f) == "forall x: A . (R(x, x) \\/ R(x, x)) /\\ not R(x, x)"
        g = Forall("x", "A", Implies(Implies(Atom("R", (x, x)), Atom("R", (x, x))), Atom("R", (x, x))))
        assert render_formula(g) == "forall x: A . (R(x, x) -> R(x, x)) -> R(x, x)"

    def test_merges_quantifier_runs(self):
        f = Forall("a", "P", Forall("b", "P", atom("=", "a", "b")))
        assert render_formula(f) == "forall a, b: P . a = b"

    def test_facts_canonical(self):
        doc = FactDocument("m", "S", (ElemDecl(("a", "b"), "A"), ElemDecl((1, 2), "T"),
                                      CollDecl("w", "P(A)", ("a",)), FactEntry("Q", ("w", 1))))
        assert render(doc) == ("model m for S\n  elem a, b: A\n  elem 1, 2: T\n"
                               "  coll w: P(A) = {a}\n  fact Q(w, 1)\nend\n")


@pytest.mark.parametrize("name", ["purchase.pml", "transfer.pml", "movable_sale.pml"])
def test_shipped_specs_round_trip(name):
    doc = parse_spec(data_text(name))
    once = render(doc)
    assert parse_spec(once) == doc
    assert render(parse_spec(once)) == once


# -- random documents ---------------------------------------------------------


@given(seeds)
@settings(max_examples=200)
def test_spec_round_trip(seed):
    doc = random_spec(random.Random(seed))
    assert parse_spec(render(doc)) == doc


@given(seeds)
@settings(max_examples=200)
def test_facts_round_trip(seed):
    doc = random_facts(random.Random(seed))
    assert parse_facts(render(doc)) == doc


UNICODE = {"forall": "∀", "exists": "∃", "not": "¬", "/\\": "∧", "\\/": "∨",
           "->": "→", "<->": "↔", "in": "∈", "<=": "≤"}


def to_unicode(text: str) -> str:
    return " ".join(UNICODE.get(t.text, t.text) for t in tokenize(text) if t.kind != "eof")


@given(seeds)
@settings(max_examples=200)
def test_unicode_spelling_same_ast(seed):
    doc = random_spec(random.Random(seed))
    assert parse_spec(to_unicode(render(doc))) == parse_spec(render(doc))
