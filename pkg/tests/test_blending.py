import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pml.blending import (
    IncompatibleIdentifications,
    Morphism,
    MorphismError,
    check_consistency,
    check_morphism,
    commutes,
    compose,
    identity,
    is_isomorphism,
    morphism_from_map,
    parse_map,
    pushout,
    render_map,
    translate,
)
from pml.kernel import ConstDecl, PowerSortDecl, RelDecl, SortDecl, Theory, atom, build_signature, check_formula, forall
from pml.modelfinder import Bounds, ResourceLimit, Sat, Unsat
from pml.parser import from_theory, load_theory, parse_spec, render
from pml.statutes import data_text
from randomgen import random_sentence, random_signature


@pytest.fixture(scope="module")
def span():
    generic = load_theory(data_text("transfer.pml"))
    left = load_theory(data_text("purchase.pml"))
    right = load_theory(data_text("movable_sale.pml"))
    f = morphism_from_map(generic, left, data_text("transfer_to_purchase.map"))
    g = morphism_from_map(generic, right, data_text("transfer_to_sale.map"))
    return generic, f, g


def small(name, body):
    return load_theory(f"spec {name}\n{body}end\n")


class TestMorphisms:
    def test_identity_valid(self, sent):
        assert check_morphism(identity(sent)) == []

    def test_shipped_maps_valid(self, span):
        _, f, g = span
        assert check_morphism(f) == [] and check_morphism(g) == []

    def test_arity_mismatch(self, sent):
        src = small("Three", "  sort A\n  sort B\n  sort C ordered\n  rel Trans: A * B * C\n")
        m = Morphism(src, sent, {"A": "P_nl", "B": "Pr", "C": "T"}, {"Trans": "Pur"})
        (problem,) = check_morphism(m)
        assert problem.startswith("arity-mismatch:")

    def test_four_ary_valid(self, sent):
        src = small("Four", "  sort A\n  sort B\n  sort C ordered\n  rel Trans: A * B * A * C\n")
        assert check_morphism(Morphism(src, sent, {"A": "P_nl", "B": "Pr", "C": "T"}, {"Trans": "Pur"})) == []

    def test_partial(self, span):
        generic, f, _ = span
        m = Morphism(generic, f.target, {"Agent": "P_nl"}, {})
        problems = check_morphism(m)
        assert any(p.startswith("partial-map: sort Thing") for p in problems)
        assert any(p.startswith("partial-map: relation Trans") for p in problems)

    def test_kind_mismatch(self, span):
        generic, f, _ = span
        m = Morphism(generic, f.target, {"Agent": "P_nl", "Thing": "Pr", "Time": "D"}, {"Trans": "Pur"})
        assert any("ordered sort Time maps to base sort D" in p for p in check_morphism(m))

    def test_subsort_must_be_preserved(self, sent):
        src = small("Sub", "  sort A\n  sort B < A\n")
        assert any("not preserved" in p for p in check_morphism(Morphism(src, sent, {"A": "Pr_R", "B": "Pr"}, {})))
        assert check_morphism(Morphism(src, sent, {"A": "Pr", "B": "Pr_R"}, {})) == []

    def test_power_sort_follows_base(self, span, sent):
        src = small("Lots", "  sort Thing\n  powersort Lot of Thing\n  rel Has: Lot(Thing)\n")
        tgt = small("Tgt", "  sort Pr\n  powersort P_ph of Pr\n  rel Has2: P_ph(Pr)\n")
        m = Morphism(src, tgt, {"Thing": "Pr"}, {"Has": "Has2"})
        assert m.sort("Lot(Thing)") == "P_ph(Pr)"
        assert check_morphism(m) == []

    def test_preservation_warning(self, sent):
        src = small("Busy", "  sort A\n  sort B\n  sort C ordered\n  rel Trans: A * B * A * C\n"
                             "  axiom BUSY: exists a: A . exists b: B . exists t: C . Trans(a, b, a, t)\n")
        m = Morphism(src, sent, {"A": "P_nl", "B": "Pr", "C": "T"}, {"Trans": "Pur"})
        assert check_morphism(m) == []
        (warning,) = check_morphism(m, Bounds())
        assert warning.startswith("warning: axiom BUSY")


class TestTranslate:
    def test_atoms_and_binders(self, span):
        _, f, _ = span
        src = forall("t", "Time", atom("<=", "t", "t"))
        assert translate(f, src) == forall("t", "T", atom("<=", "t", "t"))

    def test_relation_renamed(self, span):
        _, _, g = span
        phi = forall(["a", "b"], "Agent", forall("x", "Thing", forall("t", "Time", atom("Trans", "a", "x", "b", "t"))))
        out = translate(g, phi)
        assert out == forall(["a", "b"], "Person", forall("x", "Goods", forall("t", "Moment", atom("Sell", "a", "x", "b", "t"))))
        assert check_formula(g.target.signature, {}, out) == []


class TestPushout:
    def test_identity_span(self, sent):
        result = pushout(sent, identity(sent), identity(sent))
        assert is_isomorphism(result.left) and is_isomorphism(result.right)
        assert commutes(result, identity(sent), identity(sent))
        # re-emitted text parses back to the same declarations and axioms
        doc = parse_spec(render(from_theory(result.theory)))
        assert doc.declarations == from_theory(sent).declarations
        assert doc.axioms == sent.axioms

    def test_transfer_blend(self, span):
        generic, f, g = span
        result = pushout(generic, f, g)
        assert commutes(result, f, g)
        a, b = compose(result.left, f), compose(result.right, g)
        assert a.full_sort_map() == b.full_sort_map() == {"Agent": "P_nl", "Thing": "Pr", "Time": "T"}
        assert a.full_symbol_map() == b.full_symbol_map() == {"Trans": "Pur"}
        blended = [phi for _, phi in result.theory.axioms]
        for inj, side in ((result.left, f.target), (result.right, g.target)):
            for _, phi in side.axioms:
                assert translate(inj, phi) in blended
        assert [n for n, _ in result.theory.axioms] == ["SENT", "DELIVERY"]

    def test_blend_consistent(self, span):
        generic, f, g = span
        theory = pushout(generic, f, g).theory
        b = Bounds.parse(["P_nl=2", "Pr=0", "Pr_R=1", "Pr_M=1", "T=2", "D=2", "P_ph(Pr)=2"], theory.signature)
        outcome = check_consistency(theory, b)
        assert isinstance(outcome, Sat)
        assert isinstance(check_consistency(theory, b, node_limit=1), (ResourceLimit, Sat))

    def test_inconsistent_blend(self):
        generic = small("G", "  sort X\n  rel P: X\n")
        left = small("L", "  sort A\n  rel P: A\n  axiom ALL: forall a: A . P(a)\n")
        right = small("R", "  sort B\n  rel Q: B\n  axiom NONE: forall b: B . not Q(b)\n")
        f = Morphism(generic, left, {"X": "A"}, {"P": "P"})
        g = Morphism(generic, right, {"X": "B"}, {"P": "Q"})
        result = pushout(generic, f, g)
        assert isinstance(check_consistency(result.theory, Bounds()), Unsat)

    def test_name_clash_suffixes(self):
        generic = small("G", "  sort X\n")
        left = small("L", "  sort A\n  sort D\n  rel R: D\n")
        right = small("R", "  sort B\n  sort D\n  rel R: D\n")
        result = pushout(generic, Morphism(generic, left, {"X": "A"}, {}), Morphism(generic, right, {"X": "B"}, {}))
        sig = result.theory.signature
        assert {"A", "D_L", "D_R"} <= set(sig.sorts)
        assert sig.relations == {"R_L": ("D_L",), "R_R": ("D_R",)}
        assert result.left.sort("D") == "D_L" and result.right.sort("D") == "D_R"

    def test_base_to_power_incompatible(self):
        generic = small("G", "  sort X\n")
        left = small("L", "  sort A\n")
        right = small("R", "  sort B\n  powersort P of B\n")
        with pytest.raises(IncompatibleIdentifications):
            pushout(generic, Morphism(generic, left, {"X": "A"}, {}), Morphism(generic, right, {"X": "P(B)"}, {}))

    def test_generic_axiom_kept_once(self):
        generic = small("G", "  sort X\n  rel P: X\n  axiom SOME: exists x: X . P(x)\n")
        left = small("L", "  sort A\n  rel P: A\n  axiom SOME: exists a: A . P(a)\n")
        right = small("R", "  sort B\n  rel Q: B\n  axiom SOME: exists b: B . Q(b)\n")
        result = pushout(generic, Morphism(generic, left, {"X": "A"}, {"P": "P"}),
                         Morphism(generic, right, {"X": "B"}, {"P": "Q"}))
        assert len(result.theory.axioms) == 1


class TestMapFiles:
    def test_parse(self):
        assert parse_map("sort A -> B  # note\n\nrel R -> S\nconst c -> d\n") == {
            "sort": {"A": "B"}, "rel": {"R": "S"}, "const": {"c": "d"}}

    def test_errors(self):
        with pytest.raises(MorphismError) as e:
            parse_map("sort A -> B\nsort A -> C\nfunc f -> g\n")
        assert e.value.diagnostics == ["2:1: sort A mapped twice", "3:1: expected 'sort|rel|const <src> -> <dst>'"]

    def test_render_round_trip(self, span):
        _, f, _ = span
        assert morphism_from_map(f.source, f.target, render_map(f)) == f


# -- translation soundness ----------------------------------------------------


def random_morphism(rng):
    """A source signature and a renaming into a target that may collapse a sort onto its parent."""
    raw = random_signature(rng, max_sorts=4)
    sigma: dict[str, str] = {}
    decls = []
    for d in raw.decls:
        if isinstance(d, SortDecl):
            parent = d.supers[0] if d.supers else None
            if parent and rng.random() < 0.3:
                sigma[d.name] = sigma[parent]
                continue
            sigma[d.name] = d.name + "_t"
            decls.append(SortDecl(sigma[d.name], tuple(sigma[p] for p in d.supers), d.ordered))
    for d in raw.decls:
        if isinstance(d, PowerSortDecl):
            decls.append(PowerSortDecl("Q", sigma[d.base]))

    def img(s):
        return f"Q({sigma[raw.power_base[s]]})" if s in raw.power_base else sigma[s]

    decls += [ConstDecl(c + "_t", img(s)) for c, s in raw.constants.items()]
    decls += [RelDecl(r + "_t", tuple(img(a) for a in args)) for r, args in raw.relations.items()]
    decls += [SortDecl("Extra"), RelDecl("X_t", ("Extra",))]
    source = Theory("Src", build_signature(raw.decls))
    target = Theory("Tgt", build_signature(decls))
    symbols = {n: n + "_t" for n in [*raw.relations, *raw.constants]}
    base = {s: t for s, t in sigma.items()}
    return raw, Morphism(source, target, base, symbols)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_translation_soundness(seed):
    rng = random.Random(seed)
    raw, m = random_morphism(rng)
    assert check_morphism(m) == []
    phi = random_sentence(rng, raw, 3)
    assert check_formula(m.source.signature, {}, phi) == []
    assert check_formula(m.target.signature, {}, translate(m, phi)) == []
