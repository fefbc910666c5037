import pytest
from hypothesis import given

from conftest import queries
from trcdiagram.errors import EvalTypeError, FreeBoundError, FreeVariableError, HeaderError, RebindError
from trcdiagram.fragments import Fragment
from trcdiagram.parser import parse_query, parse_raw
from trcdiagram.trc import (
    And,
    Attr,
    Binding,
    CmpOp,
    Exists,
    JoinPred,
    Not,
    Or,
    SelPred,
    alpha_equiv,
    alpha_match,
    atoms,
    builtin_name,
    canonical,
    contains,
    maximal_scope,
    normalize,
    parse_builtin,
    rename_vars,
    walk,
)


def no_exists_under_and(q):
    return not any(
        isinstance(n, And) and any(isinstance(c, Exists) for c in n.children) for _, n in walk(q.body)
    )


def in_normal_form(q):
    for _, n in walk(q.body):
        if isinstance(n, Not) and isinstance(n.body, Not):
            return False
        if isinstance(n, (And, Or)) and any(type(c) is type(n) for c in n.children):
            return False
        if isinstance(n, Exists) and isinstance(n.body, Exists):
            return False
    return True


class TestCmpOp:
    def test_mirror_is_an_involution(self):
        for op in CmpOp:
            assert op.mirror().mirror() is op

    def test_strings_order_by_code_point(self):
        assert CmpOp.LT.holds("B", "a")
        assert CmpOp.GE.holds("b", "a")

    def test_cross_kind_comparison_raises(self):
        with pytest.raises(EvalTypeError):
            CmpOp.LT.holds(1, "1")
        with pytest.raises(TypeError):
            CmpOp.EQ.holds("x", 2)


class TestBuiltinNames:
    @pytest.mark.parametrize(
        "name, parsed",
        [("<", (CmpOp.LT, None)), (">=", (CmpOp.GE, None)), ("<4", (CmpOp.LT, 4)), ("=-2", (CmpOp.EQ, -2)),
         ('="red"', (CmpOp.EQ, "red")), (">0", (CmpOp.GT, 0))],
    )
    def test_parse(self, name, parsed):
        assert parse_builtin(name) == parsed
        assert builtin_name(*parsed) == name

    @pytest.mark.parametrize("name", ["R", "Sailors", "", "<x", "=="])
    def test_database_names_are_not_builtins(self, name):
        assert parse_builtin(name) is None


class TestNormalize:
    def test_double_negation_cancels(self):
        q = parse_query("exists r in R [not(not(r.A = 1))]")
        assert str(q) == "exists r in R [r.A = 1]"

    def test_flattens_and_merges(self):
        q = parse_query("exists r in R [exists s in S [(r.A = 1 and (r.B = 2 and s.A = 3)) or (r.A = 2 or s.B = 1)]]")
        assert q.body.bindings == (Binding("r", "R"), Binding("s", "S"))
        assert isinstance(q.body.body, Or) and len(q.body.body.children) == 3
        assert len(q.body.body.children[0].children) == 3

    def test_forall_chains_merge_but_not_with_exists(self):
        q = parse_query("forall r in R [forall s in S [exists t in T [r.A = s.A and s.A = t.A]]]")
        assert len(q.body.bindings) == 2
        assert isinstance(q.body.body, Exists)

    @given(queries())
    def test_idempotent_and_in_normal_form(self, q):
        assert in_normal_form(q)
        assert normalize(q) == q

    @given(queries())
    def test_preserves_atoms(self, q):
        raw = parse_raw(str(q))
        assert atoms(normalize(raw)) == atoms(raw)


class TestMaximalScope:
    def test_pulls_exists_out_of_conjunction(self):
        q = maximal_scope(parse_query("exists r in R [r.A = 1 and exists s in S [r.A = s.A]]"))
        assert str(q) == "exists r in R, s in S [r.A = 1 and r.A = s.A]"

    def test_stops_at_negation(self):
        q = maximal_scope(parse_query("exists r in R [not(r.A = 1 and exists s in S [r.A = s.A])]"))
        assert str(q) == "exists r in R [not(exists s in S [r.A = 1 and r.A = s.A])]"

    @given(queries(Fragment.ENCV))
    def test_no_exists_child_of_and(self, q):
        m = maximal_scope(q)
        assert no_exists_under_and(m)
        assert in_normal_form(m)
        assert atoms(m) == atoms(q)
        assert maximal_scope(m) == m


class TestWellFormedness:
    def test_rebinding(self):
        with pytest.raises(RebindError):
            parse_query("exists r in R [r.A = 1] and exists r in S [r.A = 2]")

    def test_free_and_bound(self):
        with pytest.raises(FreeBoundError):
            parse_query("exists r in R [r.A = 1] and r.A = 2")

    def test_boolean_with_free_variable(self):
        with pytest.raises(FreeVariableError):
            parse_query("exists r in R [r.A = s.A]")

    def test_header_attribute_must_be_used(self):
        with pytest.raises(HeaderError):
            parse_query("{ q(A, B) | exists r in R [q.A = r.A] }")

    def test_attribute_outside_header(self):
        with pytest.raises(HeaderError):
            parse_query("{ q(A) | exists r in R [q.A = r.A and q.B = 1] }")

    def test_output_variable_cannot_be_bound(self):
        with pytest.raises(FreeBoundError):
            parse_query("{ q(A) | exists q in R [q.A = 1] }")


class TestAtoms:
    def test_bag_counts_duplicates(self):
        q = parse_query("exists r in R [r.A = 1 or r.A = 1]")
        bag = atoms(q)
        assert len(bag) == 3
        assert bag.counts[SelPred(Attr("r", "A"), CmpOp.EQ, 1)] == 2

    def test_spans_do_not_affect_equality(self):
        a = parse_query("exists r in R [r.A = 1]")
        b = parse_query("exists   r in R [ r.A=1 ]")
        assert a == b and atoms(a) == atoms(b)


class TestAlphaEquivalence:
    def test_renaming_reordering_and_flips(self):
        a = parse_query("{ q(A) | exists r in R, s in S [q.A = r.A and r.B < s.B] }")
        b = parse_query("{ out(A) | exists y in S, x in R [y.B > x.B and x.A = out.A] }")
        assert alpha_equiv(a, b)
        assert alpha_match(a, b) == {"q": "out", "r": "x", "s": "y"}

    def test_relation_matters(self):
        a = parse_query("exists r in R [r.A = 1]")
        b = parse_query("exists r in S [r.A = 1]")
        assert not alpha_equiv(a, b)

    def test_scope_matters(self):
        a = parse_query("exists r in R [not(exists s in S [r.A = s.A and s.B = 1])]")
        b = parse_query("exists r in R [not(exists s in S [r.A = s.A]) and not(exists s2 in S [s2.B = 1])]")
        assert not alpha_equiv(a, b)

    def test_variable_identity_matters(self):
        a = parse_query("exists r in R, r2 in R [r.A = 1 and r.B = 2]")
        b = parse_query("exists r in R, r2 in R [r.A = 1 and r2.B = 2]")
        assert not alpha_equiv(a, b)

    @given(queries())
    def test_invariant_under_renaming(self, q):
        mapping = {v.var: f"z_{v.var}" for v in atoms(q) if isinstance(v, Binding)}
        if hasattr(q, "out_var"):
            mapping[q.out_var] = "out"
        renamed = rename_vars(q, mapping)
        assert alpha_equiv(q, renamed)
        assert canonical(q) == canonical(renamed)

    @given(queries())
    def test_canonical_is_alpha_equivalent(self, q):
        assert alpha_match(q, canonical(q)) is not None


def test_join_flip():
    j = JoinPred(Attr("r", "A"), CmpOp.LT, Attr("s", "B"))
    assert j.flipped() == JoinPred(Attr("s", "B"), CmpOp.GT, Attr("r", "A"))
    assert contains(Not(j), JoinPred)
