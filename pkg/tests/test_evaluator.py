import itertools

import pytest
from hypothesis import given, settings

from conftest import FIXTURES, queries
from sql_oracle import sql_eval
from trcdiagram.errors import (
    ArityMismatch,
    EvalTypeError,
    EvaluationError,
    FormatError,
    UnknownAttribute,
    UnknownRelation,
)
from trcdiagram.evaluator import (
    Database,
    equiv_on,
    evaluate,
    format_database,
    format_result,
    gen_instances,
    infer_kinds,
    parse_database,
    relation_schemas,
)
from trcdiagram.fixtures import fixture
from trcdiagram.parser import parse_query
from trcdiagram.safety import is_safe
from trcdiagram.trc import NonBooleanQuery, constants_of

LT_DB = Database({"R": (("A",), {(1,)}), "S": (("B",), {(2,)})})
LT_DOM = {1, 2, 3}


def test_anchor_placement_outcomes():
    results = [evaluate(fixture(n).query, LT_DB, LT_DOM) for n in ("lt_join", "lt_anchored_inside", "lt_anchored_outside")]
    assert results == [False, False, True]


def test_predicate_form_of_outer_anchoring_is_also_true():
    # predicate-form variant: the comparison anchored in the outer scope
    q = parse_query('exists r in R, j in "<" [r.A = j.$1 and not(exists s in S [j.$2 = s.B])]')
    assert evaluate(q, LT_DB, LT_DOM) is True
    assert evaluate(q, LT_DB, {1, 2}) is False


@pytest.mark.parametrize("fx", [f for f in FIXTURES if "db" in f.expect], ids=lambda f: f.name)
def test_fixture_results(fx):
    db, dom = fx.database()
    assert format_result(evaluate(fx.query, db, dom)).replace("\n", " ") == fx.expect["result"]


def test_union_against_comprehension():
    q = fixture("union").query
    for inst in gen_instances(q, 30, seed=3):
        r, s = inst.db["R"].tuples, inst.db["S"].tuples
        expected = {(d,) for d in inst.domain if (d,) in r or (d,) in s}
        assert evaluate(q, inst.db, inst.domain) == expected


def test_division_against_comprehension():
    q = fixture("division").query
    for inst in gen_instances(q, 30, seed=4):
        r, s = inst.db["R"], inst.db["S"]
        ia, ib, ic = (r.schema.index(a) for a in ("A", "B", "C"))
        sa, sb, sc = (s.schema.index(a) for a in ("A", "B", "C"))
        expected = {
            (x[ia],)
            for x in r.tuples
            if all(
                any((y[ib] == t[sb] or y[ic] == t[sc]) and y[ia] == x[ia] for y in r.tuples)
                for t in s.tuples
                if t[sa] > 0
            )
        }
        assert evaluate(q, inst.db, inst.domain) == expected


def test_empty_relation_makes_existential_false():
    q = parse_query("exists r in R []")
    assert evaluate(q, Database({"R": (("A",), set())}), {1}) is False
    assert evaluate(q, Database({"R": (("A",), {(1,)})}), {1}) is True


def test_nullary_relations():
    q = fixture("nullary_implication").query
    names = "ABCD"
    for bits in itertools.product((False, True), repeat=4):
        db = Database({n: ((), {()} if b else set()) for n, b in zip(names, bits)})
        expected = not (bits[0] or bits[1]) or bits[2] or bits[3]
        assert evaluate(q, db, {0}) is expected


def test_builtin_relations_are_interpreted_over_the_domain():
    q = parse_query('{ q(A) | exists c in "<2" [q.A = c.$1] }')
    assert evaluate(q, Database(), {0, 1, 2, 3}) == {(0,), (1,)}
    q = parse_query('exists j in "<" [j.$1 = 3]')
    assert evaluate(q, Database(), {1, 2, 3}) is False


def test_strings_and_kinds():
    db = Database({"P": (("name", "age"), {("ann", 30), ("bob", 25)})})
    q = parse_query('{ q(name) | exists p in P [q.name = p.name and p.name < "b"] }')
    assert evaluate(q, db, {"ann", "bob", 25, 30, "b"}) == {("ann",)}
    kinds = infer_kinds([q], db)
    assert kinds.of(("out", "name")) == "str"


@pytest.mark.parametrize(
    "text, db, error",
    [
        ("exists r in X [r.A = 1]", Database(), UnknownRelation),
        ("exists r in R [r.Z = 1]", LT_DB, UnknownAttribute),
        ('exists r in R [r.A = "x"]', LT_DB, EvalTypeError),
    ],
)
def test_errors(text, db, error):
    dom = {1, 2, 3, "x"}
    with pytest.raises(error):
        evaluate(parse_query(text), db, dom)


def test_domain_must_cover_constants():
    with pytest.raises(EvaluationError):
        evaluate(parse_query("exists r in R [r.A = 7]"), LT_DB, LT_DOM)


def test_relation_arity_is_checked():
    with pytest.raises(ArityMismatch):
        Database({"R": (("A", "B"), {(1,)})})


def test_database_text_round_trip():
    text = 'R(A, B): (1, "x") (-2, "y, z")\nE(A):\nF(): ()\ndomain: -2 1 "x" "y, z"\n'
    db, dom = parse_database(text)
    assert db["F"].tuples == {()} and db["E"].tuples == set()
    assert parse_database(format_database(db, dom)) == (db, dom)


@pytest.mark.parametrize(
    "text, error",
    [("R(A): (1, 2)", ArityMismatch), ("R(A): 1", FormatError), ("R(A): (1)\nR(A): (2)", FormatError), ("R A", FormatError)],
)
def test_database_format_errors(text, error):
    with pytest.raises(error):
        parse_database(text)


def test_gen_instances_is_deterministic_and_bounded():
    q = fixture("division").query
    a = gen_instances(q, 20, seed=7)
    assert a == gen_instances(q, 20, seed=7)
    assert a != gen_instances(q, 20, seed=8)
    assert len(a) == 20
    for inst in a:
        assert len(inst.domain) <= 4
        assert all(len(r.tuples) <= 3 for r in inst.db.values())
        assert constants_of(q) <= inst.domain
        assert set(inst.db) == set(relation_schemas([q]))


def test_equiv_on_reports_a_witness():
    q1 = parse_query("exists r in R [r.A = 0]")
    q2 = parse_query("exists r in R [r.A = 1]")
    result = equiv_on(q1, q2, gen_instances([q1, q2], 20))
    assert not result
    assert result.left != result.right
    assert evaluate(q1, result.witness.db, result.witness.domain) == result.left


@pytest.mark.parametrize("fx", [f for f in FIXTURES if f.expect.get("verdict") == "safe"], ids=lambda f: f.name)
def test_safe_queries_are_domain_independent(fx):
    q = fx.query
    if not isinstance(q, NonBooleanQuery):
        return
    for inst in gen_instances(q, 10, seed=5):
        grown = set(inst.domain) | {100, 101, 102}
        assert evaluate(q, inst.db, inst.domain) == evaluate(q, inst.db, grown)


def test_unsafe_query_depends_on_domain():
    q = parse_query("{ q(A) | exists r in R [not(q.A = r.A)] }")
    db = Database({"R": (("A",), {(1,)})})
    assert evaluate(q, db, {1, 2}) != evaluate(q, db, {1, 2, 3})


@settings(max_examples=150)
@given(queries())
def test_agrees_with_sqlite(q):
    schemas = relation_schemas([q])
    for inst in gen_instances(q, 4, seed=11):
        assert evaluate(q, inst.db, inst.domain) == sql_eval(q, inst.db, inst.domain, schemas)


@pytest.mark.parametrize("fx", [f for f in FIXTURES if f.name != "nullary_implication"], ids=lambda f: f.name)
def test_fixtures_agree_with_sqlite(fx):
    q = fx.query
    schemas = relation_schemas([q])
    for inst in gen_instances(q, 5, seed=2):
        assert evaluate(q, inst.db, inst.domain) == sql_eval(q, inst.db, inst.domain, schemas)
