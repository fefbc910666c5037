"""Tuple relational calculus abstract syntax.

Nodes are frozen dataclasses, so structural equality is plain ``==``.  Source
spans ride along on every node but are excluded from comparison and hashing.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterator, Union

from .errors import (
    EvalTypeError,
    FreeBoundError,
    FreeVariableError,
    HeaderError,
    RebindError,
)

Constant = Union[int, str]


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


class CmpOp(str, enum.Enum):
    EQ = "="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="

    def mirror(self) -> CmpOp:
        return _MIRROR[self]

    def holds(self, a: Constant, b: Constant) -> bool:
        if const_kind(a) != const_kind(b):
            raise EvalTypeError(f"cannot compare {a!r} {self.value} {b!r}")
        return _TESTS[self](a, b)

    def __str__(self) -> str:
        return self.value


_MIRROR = {
    CmpOp.EQ: CmpOp.EQ,
    CmpOp.NE: CmpOp.NE,
    CmpOp.LT: CmpOp.GT,
    CmpOp.GT: CmpOp.LT,
    CmpOp.LE: CmpOp.GE,
    CmpOp.GE: CmpOp.LE,
}

_TESTS = {
    CmpOp.EQ: lambda a, b: a == b,
    CmpOp.NE: lambda a, b: a != b,
    CmpOp.LT: lambda a, b: a < b,
    CmpOp.LE: lambda a, b: a <= b,
    CmpOp.GT: lambda a, b: a > b,
    CmpOp.GE: lambda a, b: a >= b,
}


def const_kind(c: Constant) -> str:
    if isinstance(c, bool) or not isinstance(c, (int, str)):
        raise TypeError(f"unsupported constant {c!r}")
    return "int" if isinstance(c, int) else "str"


def format_const(c: Constant) -> str:
    return str(c) if const_kind(c) == "int" else json.dumps(c)


# -- built-in relation names -------------------------------------------------
#
# A unary built-in is named by operator and constant ("<4", '="red"'), a
# binary one by its operator alone ("<").  Database relations are identifiers,
# so the two namespaces never collide.

_OP_PREFIXES = sorted((op.value for op in CmpOp), key=len, reverse=True)


def builtin_name(op: CmpOp, const: Constant | None = None) -> str:
    return op.value if const is None else op.value + format_const(const)


def parse_builtin(name: str):
    """Return ``(op, const_or_None)`` for a built-in relation name, else None."""
    for prefix in _OP_PREFIXES:
        if name.startswith(prefix):
            rest = name[len(prefix):]
            op = CmpOp(prefix)
            if rest == "":
                return op, None
            if rest.startswith('"'):
                try:
                    value = json.loads(rest)
                except json.JSONDecodeError:
                    return None
                return (op, value) if isinstance(value, str) else None
            try:
                return op, int(rest)
            except ValueError:
                return None
    return None


def is_builtin(relation: str) -> bool:
    return parse_builtin(relation) is not None


# -- nodes ---------------------------------------------------------------------


class Formula:
    """Base of all formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        from .parser import pretty_formula

        return pretty_formula(self)


class Atom(Formula):
    __slots__ = ()


@dataclass(frozen=True)
class Attr:
    var: str
    name: str

    def __str__(self) -> str:
        return f"{self.var}.{self.name}"


@dataclass(frozen=True)
class Binding(Atom):
    var: str
    relation: str
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class JoinPred(Atom):
    left: Attr
    op: CmpOp
    right: Attr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def flipped(self) -> JoinPred:
        return replace(self, left=self.right, op=self.op.mirror(), right=self.left)


@dataclass(frozen=True)
class SelPred(Atom):
    left: Attr
    op: CmpOp
    const: Constant
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Not(Formula):
    body: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And(Formula):
    """Conjunction.  The empty conjunction is ``true`` and only appears as a quantifier body."""

    children: tuple
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Or(Formula):
    children: tuple
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Exists(Formula):
    bindings: tuple
    body: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Forall(Formula):
    bindings: tuple
    body: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


TRUE = And(())

Quantifier = (Exists, Forall)
Predicate = (JoinPred, SelPred)


@dataclass(frozen=True)
class BooleanQuery:
    body: Formula

    def __str__(self) -> str:
        from .parser import pretty

        return pretty(self)


@dataclass(frozen=True)
class NonBooleanQuery:
    out_var: str
    header: tuple
    body: Formula

    def __str__(self) -> str:
        from .parser import pretty

        return pretty(self)


Query = Union[BooleanQuery, NonBooleanQuery]


def with_body(q: Query, body: Formula) -> Query:
    return replace(q, body=body)


# -- traversal -----------------------------------------------------------------


def children(node: Formula) -> tuple:
    """AST children; quantifier bindings come before the quantified body."""
    if isinstance(node, Not):
        return (node.body,)
    if isinstance(node, (And, Or)):
        return node.children
    if isinstance(node, Implies):
        return (node.left, node.right)
    if isinstance(node, Quantifier):
        return (*node.bindings, node.body)
    return ()


def walk(node: Formula, path: tuple = ()) -> Iterator[tuple[tuple, Formula]]:
    """Pre-order traversal yielding ``(path, node)``; paths index into ``children``."""
    yield path, node
    for i, child in enumerate(children(node)):
        yield from walk(child, path + (i,))


def node_at(node: Formula, path: tuple) -> Formula:
    for i in path:
        node = children(node)[i]
    return node


def predicate_vars(atom) -> tuple:
    if isinstance(atom, JoinPred):
        return (atom.left.var, atom.right.var)
    if isinstance(atom, SelPred):
        return (atom.left.var,)
    return ()


def predicate_attrs(atom) -> tuple:
    if isinstance(atom, JoinPred):
        return (atom.left, atom.right)
    if isinstance(atom, SelPred):
        return (atom.left,)
    return ()


def free_vars(f: Formula) -> frozenset:
    if isinstance(f, Predicate):
        return frozenset(predicate_vars(f))
    if isinstance(f, Quantifier):
        bound = {b.var for b in f.bindings}
        return free_vars(f.body) - bound
    out: set = set()
    for c in children(f):
        out |= free_vars(c)
    return frozenset(out)


def bindings_of(f: Formula) -> list:
    return [n for _, n in walk(f) if isinstance(n, Binding)]


def relation_of(f: Formula) -> dict:
    """Map each bound variable to its relation name."""
    return {b.var: b.relation for b in bindings_of(f)}


def constants_of(q) -> set:
    body = q.body if isinstance(q, (BooleanQuery, NonBooleanQuery)) else q
    out = {n.const for _, n in walk(body) if isinstance(n, SelPred)}
    for b in bindings_of(body):
        parsed = parse_builtin(b.relation)
        if parsed and parsed[1] is not None:
            out.add(parsed[1])
    return out


def size(f: Formula) -> int:
    return sum(1 for _ in walk(f))


def contains(f: Formula, kinds) -> bool:
    return any(isinstance(n, kinds) for _, n in walk(f))


# -- well-formedness -----------------------------------------------------------


def check_well_formed(f: Formula) -> None:
    """Raise if a variable is bound twice or occurs both free and bound."""
    seen: dict[str, Binding] = {}
    for _, node in walk(f):
        if isinstance(node, Binding):
            if node.var in seen:
                raise RebindError(f"tuple variable {node.var!r} is bound more than once", node.span)
            seen[node.var] = node

    def visit(node, scope):
        if isinstance(node, Quantifier):
            scope = scope | {b.var for b in node.bindings}
            visit(node.body, scope)
            return
        if isinstance(node, Predicate):
            for v in predicate_vars(node):
                if v not in scope and v in seen:
                    raise FreeBoundError(
                        f"tuple variable {v!r} occurs free here but is bound elsewhere", node.span
                    )
            return
        for c in children(node):
            visit(c, scope)

    visit(f, frozenset())


def check_query(q: Query) -> None:
    check_well_formed(q.body)
    free = free_vars(q.body)
    if isinstance(q, BooleanQuery):
        if free:
            raise FreeVariableError(f"Boolean query has free variables {sorted(free)}", q.body.span)
        return
    if not q.header:
        raise HeaderError("empty header; use a Boolean query instead")
    if len(set(q.header)) != len(q.header):
        raise HeaderError(f"duplicate header attribute in {q.header}")
    if free - {q.out_var}:
        raise FreeVariableError(f"free variables {sorted(free - {q.out_var})} besides {q.out_var!r}", q.body.span)
    if q.out_var in relation_of(q.body):
        raise FreeBoundError(f"output variable {q.out_var!r} is also bound", q.body.span)
    used = set()
    for _, node in walk(q.body):
        for a in predicate_attrs(node):
            if a.var == q.out_var:
                if a.name not in q.header:
                    raise HeaderError(f"{a} is not in the header {q.header}", node.span)
                used.add(a.name)
    missing = [a for a in q.header if a not in used]
    if missing:
        raise HeaderError(f"header attributes {missing} appear in no predicate")


# -- normalization ---------------------------------------------------------------


def _flatten(cls, items) -> list:
    out = []
    for c in items:
        if isinstance(c, cls):
            out.extend(c.children)
        else:
            out.append(c)
    return out


def _norm(f: Formula) -> Formula:
    if isinstance(f, Not):
        body = _norm(f.body)
        return body.body if isinstance(body, Not) else replace(f, body=body)
    if isinstance(f, (And, Or)):
        flat = _flatten(type(f), [_norm(c) for c in f.children])
        if len(flat) == 1:
            return flat[0]
        return replace(f, children=tuple(flat))
    if isinstance(f, Implies):
        return replace(f, left=_norm(f.left), right=_norm(f.right))
    if isinstance(f, Quantifier):
        body = _norm(f.body)
        if type(body) is type(f):
            return replace(f, bindings=f.bindings + body.bindings, body=body.body)
        return replace(f, body=body)
    return f


def normalize(obj):
    """Cancel double negations, flatten and/or, merge same-kind quantifier chains.

    Accepts a formula or a query; queries are also checked against the header
    and free-variable rules.
    """
    if isinstance(obj, (BooleanQuery, NonBooleanQuery)):
        check_query(obj)
        return replace(obj, body=_norm(obj.body))
    check_well_formed(obj)
    return _norm(obj)


def _scope(f: Formula) -> Formula:
    if isinstance(f, Not):
        return replace(f, body=_scope(f.body))
    if isinstance(f, Implies):
        return replace(f, left=_scope(f.left), right=_scope(f.right))
    if isinstance(f, Or):
        return replace(f, children=tuple(_scope(c) for c in f.children))
    if isinstance(f, Quantifier):
        body = _scope(f.body)
        if type(body) is type(f):
            return replace(f, bindings=f.bindings + body.bindings, body=body.body)
        return replace(f, body=body)
    if isinstance(f, And):
        kids = [_scope(c) for c in f.children]
        pulled: list = []
        rest: list = []
        for c in kids:
            if isinstance(c, Exists):
                pulled.extend(c.bindings)
                rest.append(c.body)
            else:
                rest.append(c)
        flat = _flatten(And, rest)
        body = flat[0] if len(flat) == 1 else And(tuple(flat), f.span)
        if not pulled:
            return body
        return Exists(tuple(pulled), body, f.span)
    return f


def maximal_scope(obj):
    """Pull existential quantifiers above conjunctions until none is an and-child."""
    if isinstance(obj, (BooleanQuery, NonBooleanQuery)):
        return replace(obj, body=_norm(_scope(normalize(obj).body)))
    return _norm(_scope(normalize(obj)))


# -- atoms -----------------------------------------------------------------------


class AtomBag:
    """Multiset of the leaf atoms of a query (binding atoms included)."""

    def __init__(self, atoms=()):
        self.counts = Counter(atoms)

    def __eq__(self, other) -> bool:
        return isinstance(other, AtomBag) and self.counts == other.counts

    def __len__(self) -> int:
        return sum(self.counts.values())

    def __iter__(self):
        return self.counts.elements()

    def renamed(self, mapping: dict) -> AtomBag:
        return AtomBag(rename_vars(a, mapping) for a in self)

    def difference(self, other: AtomBag) -> tuple[Counter, Counter]:
        return self.counts - other.counts, other.counts - self.counts

    def __repr__(self) -> str:
        items = sorted(f"{str(a)}" + (f" x{n}" if n > 1 else "") for a, n in self.counts.items())
        return "AtomBag({" + ", ".join(items) + "})"


def atoms(q) -> AtomBag:
    body = q.body if isinstance(q, (BooleanQuery, NonBooleanQuery)) else q
    return AtomBag(n for _, n in walk(body) if isinstance(n, Atom))


def rename_vars(f, mapping: dict):
    """Rename tuple variables (free and bound) according to ``mapping``."""
    if isinstance(f, (BooleanQuery, NonBooleanQuery)):
        body = rename_vars(f.body, mapping)
        if isinstance(f, NonBooleanQuery):
            return replace(f, out_var=mapping.get(f.out_var, f.out_var), body=body)
        return replace(f, body=body)

    def attr(a: Attr) -> Attr:
        return Attr(mapping.get(a.var, a.var), a.name)

    if isinstance(f, Binding):
        return replace(f, var=mapping.get(f.var, f.var))
    if isinstance(f, JoinPred):
        return replace(f, left=attr(f.left), right=attr(f.right))
    if isinstance(f, SelPred):
        return replace(f, left=attr(f.left))
    if isinstance(f, Not):
        return replace(f, body=rename_vars(f.body, mapping))
    if isinstance(f, (And, Or)):
        return replace(f, children=tuple(rename_vars(c, mapping) for c in f.children))
    if isinstance(f, Implies):
        return replace(f, left=rename_vars(f.left, mapping), right=rename_vars(f.right, mapping))
    if isinstance(f, Quantifier):
        return replace(
            f,
            bindings=tuple(rename_vars(b, mapping) for b in f.bindings),
            body=rename_vars(f.body, mapping),
        )
    raise TypeError(f"not a formula: {f!r}")


# -- equivalence up to renaming ------------------------------------------------


def _shape(f: Formula, rel: dict) -> str:
    """Variable-name-free description used to prune and order children."""

    def r(v):
        return rel.get(v, "?")

    if isinstance(f, Binding):
        return f"B({f.relation})"
    if isinstance(f, JoinPred):
        one = f"{r(f.left.var)}.{f.left.name}{f.op.value}{r(f.right.var)}.{f.right.name}"
        m = f.op.mirror().value
        two = f"{r(f.right.var)}.{f.right.name}{m}{r(f.left.var)}.{f.left.name}"
        return f"J({min(one, two)})"
    if isinstance(f, SelPred):
        return f"S({r(f.left.var)}.{f.left.name}{f.op.value}{format_const(f.const)})"
    if isinstance(f, Not):
        return f"N({_shape(f.body, rel)})"
    if isinstance(f, (And, Or)):
        tag = "A" if isinstance(f, And) else "O"
        return f"{tag}(" + ",".join(sorted(_shape(c, rel) for c in f.children)) + ")"
    if isinstance(f, Implies):
        return f"I({_shape(f.left, rel)},{_shape(f.right, rel)})"
    if isinstance(f, Quantifier):
        tag = "E" if isinstance(f, Exists) else "F"
        rels = ",".join(sorted(b.relation for b in f.bindings))
        return f"{tag}[{rels}]({_shape(f.body, rel)})"
    raise TypeError(f"not a formula: {f!r}")


class _Matcher:
    def __init__(self, body1: Formula, body2: Formula):
        self.rel1 = relation_of(body1)
        self.rel2 = relation_of(body2)
        self._shapes: dict = {}

    def shape(self, f, side):
        key = (id(f), side)
        if key not in self._shapes:
            self._shapes[key] = (_shape(f, self.rel1 if side == 1 else self.rel2), f)
        return self._shapes[key][0]

    def bind(self, m, v1, v2):
        fwd, inv = m
        if v1 in fwd:
            return m if fwd[v1] == v2 else None
        if v2 in inv:
            return None
        if self.rel1.get(v1) != self.rel2.get(v2):
            return None
        fwd = dict(fwd)
        inv = dict(inv)
        fwd[v1] = v2
        inv[v2] = v1
        return fwd, inv

    def attrs(self, m, pairs):
        for a1, a2 in pairs:
            if a1.name != a2.name:
                return None
            m = self.bind(m, a1.var, a2.var)
            if m is None:
                return None
        return m

    def match(self, a, b, m):
        if type(a) is not type(b):
            return
        if isinstance(a, SelPred):
            if a.op == b.op and a.const == b.const and const_kind(a.const) == const_kind(b.const):
                out = self.attrs(m, [(a.left, b.left)])
                if out is not None:
                    yield out
            return
        if isinstance(a, JoinPred):
            if a.op == b.op:
                out = self.attrs(m, [(a.left, b.left), (a.right, b.right)])
                if out is not None:
                    yield out
            if a.op == b.op.mirror():
                out = self.attrs(m, [(a.left, b.right), (a.right, b.left)])
                if out is not None:
                    yield out
            return
        if isinstance(a, Not):
            yield from self.match(a.body, b.body, m)
            return
        if isinstance(a, Implies):
            for m1 in self.match(a.left, b.left, m):
                yield from self.match(a.right, b.right, m1)
            return
        if isinstance(a, (And, Or)):
            if len(a.children) != len(b.children):
                return
            yield from self.match_multiset(list(a.children), list(b.children), m)
            return
        if isinstance(a, Quantifier):
            if sorted(x.relation for x in a.bindings) != sorted(x.relation for x in b.bindings):
                return
            for m1 in self.match(a.body, b.body, m):
                m2 = self.close_bindings(a.bindings, b.bindings, m1)
                if m2 is not None:
                    yield m2
            return
        raise TypeError(f"not a formula: {a!r}")

    def match_multiset(self, xs, ys, m):
        if not xs:
            yield m
            return
        first, rest = xs[0], xs[1:]
        s = self.shape(first, 1)
        tried = set()
        for i, y in enumerate(ys):
            if self.shape(y, 2) != s:
                continue
            for m1 in self.match(first, y, m):
                key = tuple(sorted(m1[0].items()))
                if key in tried:
                    continue
                tried.add(key)
                yield from self.match_multiset(rest, ys[:i] + ys[i + 1:], m1)

    def close_bindings(self, bs1, bs2, m):
        fwd, inv = m
        vars2 = {b.var for b in bs2}
        free1 = []
        for b in bs1:
            if b.var in fwd:
                if fwd[b.var] not in vars2:
                    return None
            else:
                free1.append(b)
        used2 = {fwd[b.var] for b in bs1 if b.var in fwd}
        free2 = [b for b in bs2 if b.var not in used2]
        if sorted(b.relation for b in free1) != sorted(b.relation for b in free2):
            return None
        fwd, inv = dict(fwd), dict(inv)
        pool = list(free2)
        for b in free1:
            j = next(k for k, c in enumerate(pool) if c.relation == b.relation)
            fwd[b.var] = pool[j].var
            inv[pool[j].var] = b.var
            pool.pop(j)
        return fwd, inv


def alpha_match(q1: Query, q2: Query) -> dict | None:
    """Variable mapping witnessing equivalence up to renaming and reordering, or None."""
    if type(q1) is not type(q2):
        return None
    m: tuple = ({}, {})
    if isinstance(q1, NonBooleanQuery):
        if tuple(q1.header) != tuple(q2.header):
            return None
        m = ({q1.out_var: q2.out_var}, {q2.out_var: q1.out_var})
    matcher = _Matcher(q1.body, q2.body)
    for fwd, _ in matcher.match(q1.body, q2.body, m):
        return fwd
    return None


def alpha_equiv(q1: Query, q2: Query) -> bool:
    """Equality up to variable renaming and predicate flips, in any child order."""
    if canonical(q1) == canonical(q2):
        return True
    return alpha_match(q1, q2) is not None


def canonical(q: Query) -> Query:
    """Deterministic representative: sorted children, renamed variables, oriented predicates."""
    rel = relation_of(q.body)

    def order(f):
        if isinstance(f, Not):
            return replace(f, body=order(f.body))
        if isinstance(f, (And, Or)):
            kids = [order(c) for c in f.children]
            return replace(f, children=tuple(sorted(kids, key=lambda c: _shape(c, rel))))
        if isinstance(f, Implies):
            return replace(f, left=order(f.left), right=order(f.right))
        if isinstance(f, Quantifier):
            return replace(f, bindings=tuple(sorted(f.bindings, key=lambda b: b.relation)), body=order(f.body))
        return f

    body = order(q.body)
    mapping: dict = {}
    if isinstance(q, NonBooleanQuery):
        mapping[q.out_var] = "q"
    for _, node in walk(body):
        vs = (node.var,) if isinstance(node, Binding) else predicate_vars(node)
        for v in vs:
            if v not in mapping:
                mapping[v] = f"v{len(mapping)}"
    renamed = rename_vars(replace(q, body=body), mapping)

    def orient(f):
        if isinstance(f, JoinPred):
            if (f.right.var, f.right.name) < (f.left.var, f.left.name):
                return f.flipped()
            return f
        if isinstance(f, Not):
            return replace(f, body=orient(f.body))
        if isinstance(f, (And, Or)):
            kids = [orient(c) for c in f.children]
            return replace(f, children=tuple(sorted(kids, key=repr)))
        if isinstance(f, Implies):
            return replace(f, left=orient(f.left), right=orient(f.right))
        if isinstance(f, Quantifier):
            return replace(f, bindings=tuple(sorted(f.bindings, key=repr)), body=orient(f.body))
        return f

    return replace(renamed, body=orient(renamed.body))
