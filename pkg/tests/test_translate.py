from dataclasses import replace

import pytest
from hypothesis import given

from conftest import FIXTURES, queries
from trcdiagram.diagram import expand_fuse_boxes, validate
from trcdiagram.errors import FragmentError, InvalidDiagram
from trcdiagram.evaluator import Database, equiv_on, evaluate, gen_instances
from trcdiagram.fixtures import fixture
from trcdiagram.fragments import Fragment, classify, to_fragment
from trcdiagram.metrics import atoms_preserved
from trcdiagram.parser import parse_query
from trcdiagram.safety import is_safe
from trcdiagram.translate import (
    diagram_to_trc,
    is_builtin_form,
    to_builtin_form,
    trc_to_diagram,
    trc_to_representationB,
)
from trcdiagram.trc import alpha_equiv

ENC = [fx for fx in FIXTURES if fx.expect.get("fragment") == "enc"]
ENCV = [fx for fx in FIXTURES if fx.expect.get("fragment") in ("enc", "encv")]


def test_join_under_negation_is_anchored_inside():
    assert alpha_equiv(to_builtin_form(fixture("lt_join").query), fixture("lt_anchored_inside").query)


def test_anchor_placement_changes_meaning():
    lt_anchored_inside, lt_anchored_outside = fixture("lt_anchored_inside").query, fixture("lt_anchored_outside").query
    assert is_builtin_form(lt_anchored_inside) and is_builtin_form(lt_anchored_outside)
    assert not alpha_equiv(lt_anchored_inside, lt_anchored_outside)
    d3, d4 = trc_to_diagram(lt_anchored_inside), trc_to_diagram(lt_anchored_outside)
    (b3,), (b4,) = d3.builtins, d4.builtins
    assert d3.negation_depth(b3.partition) == 1
    assert d4.negation_depth(b4.partition) == 0
    db = Database({"R": (("A",), {(1,)}), "S": (("B",), {(2,)})})
    assert evaluate(diagram_to_trc(d3), db, {1, 2, 3}) != evaluate(diagram_to_trc(d4), db, {1, 2, 3})


def test_selection_becomes_unary_builtin():
    q = to_builtin_form(parse_query("exists r in R [not(r.A < 4)]"))
    assert str(q) == 'exists r in R [not(exists c in "<4" [r.A = c.$1])]'


def test_coscoped_equijoin_stays_an_edge():
    q = parse_query("exists r in R, s in S [r.A = s.A and not(exists t in T [t.A = s.A])]")
    assert to_builtin_form(q) == q
    assert not trc_to_diagram(q).builtins


def test_builtin_form_of_division():
    q = to_builtin_form(fixture("division_enc").query)
    assert is_builtin_form(q)
    text = str(q)
    assert text.count('in "="') == 2 and text.count('in ">0"') == 1


def test_builtin_form_rejects_disjunction_by_default():
    with pytest.raises(FragmentError):
        to_builtin_form(fixture("union").query)
    assert is_builtin_form(to_builtin_form(fixture("union").query, allow_disjunction=True), True)


def test_trc_to_diagram_requires_builtin_form():
    with pytest.raises(FragmentError):
        trc_to_diagram(fixture("lt_join").query)
    with pytest.raises(FragmentError):
        trc_to_diagram(fixture("division_encv").query)


def test_representation_b_rejects_full_queries():
    with pytest.raises(FragmentError):
        trc_to_representationB(fixture("division").query)


@pytest.mark.parametrize("fx", ENC, ids=lambda f: f.name)
def test_round_trip_enc_fixtures(fx):
    q = to_builtin_form(fx.query)
    d = trc_to_diagram(q)
    assert validate(d).valid
    assert alpha_equiv(diagram_to_trc(d), q)


@given(queries(Fragment.ENC))
def test_round_trip_random(q):
    q = to_builtin_form(q)
    assert alpha_equiv(diagram_to_trc(trc_to_diagram(q)), q)


@given(queries(Fragment.ENC, max_depth=2))
def test_builtin_form_preserves_meaning(q):
    b = to_builtin_form(q)
    assert equiv_on(q, b, gen_instances([q, b], 5, seed=9))


@pytest.mark.parametrize("fx", ENCV, ids=lambda f: f.name)
def test_representation_b_round_trip(fx):
    q = fx.query
    d = trc_to_representationB(q)
    assert validate(d).valid
    back = diagram_to_trc(d)
    assert atoms_preserved(q, back)
    assert alpha_equiv(back, q) or equiv_on(q, back, gen_instances([q, back], 20))
    expanded = diagram_to_trc(expand_fuse_boxes(d))
    assert classify(expanded) is Fragment.ENC
    assert equiv_on(q, expanded, gen_instances([q, expanded], 20))


@given(queries(Fragment.ENCV, max_depth=2))
def test_representation_b_preserves_meaning_and_atoms(q):
    back = diagram_to_trc(trc_to_representationB(q))
    assert atoms_preserved(q, back)
    assert equiv_on(q, back, gen_instances([q, back], 5, seed=2))


def test_hints_on_disjunction_of_selections():
    d = trc_to_representationB(fixture("or_selections").query)
    assert [d.hint_for(b.id) for b in d.builtins] == ["condition", "condition"]
    d = trc_to_representationB(parse_query("exists r in R [r.A > 0 and not(r.B = 1)]"))
    assert sorted(d.hint_for(b.id) for b in d.builtins) == ["condition", "fused"]


def test_arrow_hint_only_for_in_scope_join():
    d = trc_to_representationB(fixture("lt_join").query)
    (b,) = d.builtins
    assert d.hint_for(b.id) == "arrow"
    assert str(diagram_to_trc(d)) == str(fixture("lt_join").query)
    d = trc_to_representationB(fixture("lt_anchored_outside").query)
    assert d.hint_for(d.builtins[0].id) is None


def test_desugar_reads_every_in_scope_builtin_as_predicate():
    d = trc_to_diagram(to_builtin_form(fixture("lt_join").query))
    assert not d.hints
    assert alpha_equiv(diagram_to_trc(d, desugar=True), fixture("lt_join").query)


def test_textbook_queries():
    for name in ("sailors", "smith", "parts"):
        q = fixture(name).query
        d = trc_to_representationB(q)
        assert validate(d).valid and d.groups()
        assert atoms_preserved(q, diagram_to_trc(d))


@pytest.mark.parametrize("fx", [f for f in ENCV if f.expect.get("verdict") == "safe"], ids=lambda f: f.name)
def test_representation_b_keeps_safety(fx):
    assert is_safe(diagram_to_trc(trc_to_representationB(fx.query)))


def test_invalid_diagram_is_not_read():
    d = trc_to_diagram(to_builtin_form(fixture("lt_join").query))
    with pytest.raises(InvalidDiagram) as info:
        diagram_to_trc(replace(d, edges=d.edges[:1]))
    assert info.value.issues


def test_full_queries_translate_after_rewriting():
    q = fixture("division").query
    back = diagram_to_trc(trc_to_representationB(to_fragment(q, Fragment.ENCV)))
    assert equiv_on(q, back, gen_instances([q, back], 20))
