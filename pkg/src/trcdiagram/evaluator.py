"""Brute-force finite-model evaluation of TRC queries.

Quantifiers range over database relations or over the interpreted built-in
relations, whose extension is computed from an explicit finite domain: the
unary built-in ``"<4"`` holds every domain value below 4, the binary
``"<"`` every ordered pair of domain values.  Strings order by code point.
"""

from __future__ import annotations

import itertools
import json
import random
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import (
    ArityMismatch,
    EvaluationError,
    FormatError,
    UnknownAttribute,
    UnknownRelation,
)
from .trc import (
    And,
    BooleanQuery,
    CmpOp,
    Exists,
    Forall,
    Implies,
    JoinPred,
    NonBooleanQuery,
    Not,
    Or,
    SelPred,
    constants_of,
    const_kind,
    format_const,
    free_vars,
    parse_builtin,
    walk,
)


@dataclass(frozen=True)
class Relation:
    schema: tuple
    tuples: frozenset

    def __post_init__(self):
        if len(set(self.schema)) != len(self.schema):
            raise ArityMismatch(f"duplicate attribute in schema {self.schema}")
        for t in self.tuples:
            if len(t) != len(self.schema):
                raise ArityMismatch(f"tuple {t} does not match schema {self.schema}")


class Database(Mapping):
    """Immutable mapping from relation name to :class:`Relation`."""

    def __init__(self, relations: Mapping | None = None):
        rels = {}
        for name, value in (relations or {}).items():
            if not isinstance(value, Relation):
                schema, tuples = value
                value = Relation(tuple(schema), frozenset(tuple(t) for t in tuples))
            rels[name] = value
        self._rels = rels

    def __getitem__(self, name: str) -> Relation:
        return self._rels[name]

    def __iter__(self):
        return iter(self._rels)

    def __len__(self) -> int:
        return len(self._rels)

    def __eq__(self, other) -> bool:
        return isinstance(other, Database) and self._rels == other._rels

    def __hash__(self):
        return hash(frozenset(self._rels.items()))

    def constants(self) -> set:
        return {v for rel in self._rels.values() for t in rel.tuples for v in t}

    def __repr__(self) -> str:
        return f"Database({self._rels!r})"


def _sort_key(c):
    return (const_kind(c), c)


def sorted_domain(dom: Iterable) -> list:
    return sorted(set(dom), key=_sort_key)


# -- static kinds -----------------------------------------------------------------


class _Kinds:
    """Union-find over attribute slots so output attributes range over one constant kind."""

    def __init__(self):
        self.parent: dict = {}
        self.kind: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            if ra in self.kind and rb not in self.kind:
                self.kind[rb] = self.kind[ra]

    def assign(self, slot, kind):
        self.kind.setdefault(self.find(slot), kind)

    def of(self, slot):
        return self.kind.get(self.find(slot))


def _slot(attr, rel_of, out_var):
    if attr.var == out_var:
        return ("out", attr.name)
    rel = rel_of.get(attr.var)
    if rel is None or parse_builtin(rel) is not None:
        return ("var", attr.var, attr.name)
    return ("rel", rel, attr.name)


def infer_kinds(queries, db: Database | None = None) -> _Kinds:
    kinds = _Kinds()
    for q in queries:
        out = q.out_var if isinstance(q, NonBooleanQuery) else None
        rel_of = {}
        for _, n in walk(q.body):
            if isinstance(n, (Exists, Forall)):
                for b in n.bindings:
                    rel_of[b.var] = b.relation
                    parsed = parse_builtin(b.relation)
                    if parsed and parsed[1] is not None:
                        kinds.assign(("var", b.var, "$1"), const_kind(parsed[1]))
        for _, n in walk(q.body):
            if isinstance(n, SelPred):
                kinds.assign(_slot(n.left, rel_of, out), const_kind(n.const))
            elif isinstance(n, JoinPred):
                kinds.union(_slot(n.left, rel_of, out), _slot(n.right, rel_of, out))
    if db is not None:
        for name, rel in db.items():
            for i, attr in enumerate(rel.schema):
                for t in rel.tuples:
                    kinds.assign(("rel", name, attr), const_kind(t[i]))
                    break
    return kinds


# -- evaluation -------------------------------------------------------------------


class _Evaluator:
    def __init__(self, db: Database, dom):
        self.db = db
        self.dom = sorted_domain(dom)
        self._rows: dict = {}
        self._plans: dict = {}

    def rows(self, relation: str) -> list:
        if relation in self._rows:
            return self._rows[relation]
        parsed = parse_builtin(relation)
        if parsed is not None:
            op, c = parsed
            if c is not None:
                kind = const_kind(c)
                rows = [{"$1": d} for d in self.dom if const_kind(d) == kind and op.holds(d, c)]
            else:
                rows = [
                    {"$1": a, "$2": b}
                    for a in self.dom
                    for b in self.dom
                    if const_kind(a) == const_kind(b) and op.holds(a, b)
                ]
        else:
            if relation not in self.db:
                raise UnknownRelation(f"relation {relation!r} is not in the database")
            rel = self.db[relation]
            rows = [dict(zip(rel.schema, t)) for t in sorted(rel.tuples, key=lambda t: [_sort_key(v) for v in t])]
        self._rows[relation] = rows
        return rows

    @staticmethod
    def value(attr, env):
        row = env[attr.var]
        try:
            return row[attr.name]
        except KeyError:
            raise UnknownAttribute(f"{attr.var} has no attribute {attr.name!r}") from None

    def plan(self, node):
        key = id(node)
        if key not in self._plans:
            binds = sorted(node.bindings, key=lambda b: parse_builtin(b.relation) is not None)
            qvars = [b.var for b in binds]
            conjuncts = node.body.children if isinstance(node.body, And) else (node.body,)
            pre, at = [], [[] for _ in binds]
            for c in conjuncts:
                mentioned = free_vars(c) & set(qvars)
                if not mentioned:
                    pre.append(c)
                else:
                    at[max(qvars.index(v) for v in mentioned)].append(c)
            self._plans[key] = (node, binds, pre, at)
        return self._plans[key][1:]

    def search(self, binds, at, k, env) -> bool:
        if k == len(binds):
            return True
        b = binds[k]
        for row in self.rows(b.relation):
            env2 = dict(env)
            env2[b.var] = row
            if all(self.holds(c, env2) for c in at[k]) and self.search(binds, at, k + 1, env2):
                return True
        return False

    def holds(self, f, env) -> bool:
        if isinstance(f, SelPred):
            return f.op.holds(self.value(f.left, env), f.const)
        if isinstance(f, JoinPred):
            return f.op.holds(self.value(f.left, env), self.value(f.right, env))
        if isinstance(f, Not):
            return not self.holds(f.body, env)
        if isinstance(f, And):
            return all(self.holds(c, env) for c in f.children)
        if isinstance(f, Or):
            return any(self.holds(c, env) for c in f.children)
        if isinstance(f, Implies):
            return not self.holds(f.left, env) or self.holds(f.right, env)
        if isinstance(f, Exists):
            binds, pre, at = self.plan(f)
            if not all(self.holds(c, env) for c in pre):
                return False
            return self.search(binds, at, 0, env)
        if isinstance(f, Forall):
            relations = [self.rows(b.relation) for b in f.bindings]
            for combo in itertools.product(*relations):
                env2 = dict(env)
                for b, row in zip(f.bindings, combo):
                    env2[b.var] = row
                if not self.holds(f.body, env2):
                    return False
            return True
        raise TypeError(f"not a formula: {f!r}")


def evaluate(q, db: Database, dom):
    """Truth value of a Boolean query, or the set of result tuples of a non-Boolean one."""
    dom = set(dom)
    missing = (db.constants() | constants_of(q)) - dom
    if missing:
        raise EvaluationError(f"domain does not cover constants {sorted(map(format_const, missing))}")
    ev = _Evaluator(db, dom)
    if isinstance(q, BooleanQuery):
        return ev.holds(q.body, {})
    kinds = infer_kinds([q], db)
    columns = []
    for attr in q.header:
        kind = kinds.of(("out", attr))
        columns.append([d for d in ev.dom if kind is None or const_kind(d) == kind])
    result = set()
    for t in itertools.product(*columns):
        if ev.holds(q.body, {q.out_var: dict(zip(q.header, t))}):
            result.add(t)
    return frozenset(result)


@dataclass(frozen=True)
class Instance:
    db: Database
    domain: frozenset


@dataclass(frozen=True)
class EquivResult:
    equivalent: bool
    witness: Instance | None = None
    left: object = None
    right: object = None

    def __bool__(self) -> bool:
        return self.equivalent


def equiv_on(q1, q2, instances) -> EquivResult:
    """Compare two queries on each instance; stops at the first disagreement."""
    if isinstance(q1, NonBooleanQuery) != isinstance(q2, NonBooleanQuery):
        raise ValueError("cannot compare a Boolean with a non-Boolean query")
    if isinstance(q1, NonBooleanQuery) and len(q1.header) != len(q2.header):
        raise ValueError("queries have different header arity")
    for inst in instances:
        if isinstance(inst, tuple):
            inst = Instance(*inst)
        a = evaluate(q1, inst.db, inst.domain)
        b = evaluate(q2, inst.db, inst.domain)
        if a != b:
            return EquivResult(False, inst, a, b)
    return EquivResult(True)


# -- random instances ---------------------------------------------------------------


def relation_schemas(queries) -> dict:
    """Attributes each database relation needs, in order of first use."""
    schemas: dict = {}
    for q in queries:
        rel_of = {}
        for _, n in walk(q.body):
            if isinstance(n, (Exists, Forall)):
                for b in n.bindings:
                    rel_of[b.var] = b.relation
                    if parse_builtin(b.relation) is None:
                        schemas.setdefault(b.relation, [])
        for _, n in walk(q.body):
            refs = (n.left, n.right) if isinstance(n, JoinPred) else (n.left,) if isinstance(n, SelPred) else ()
            for a in refs:
                rel = rel_of.get(a.var)
                if rel in schemas and a.name not in schemas[rel]:
                    schemas[rel].append(a.name)
    return {k: tuple(v) for k, v in schemas.items()}


def gen_instances(q, count: int, seed: int = 0, max_tuples: int = 3, max_domain: int = 4) -> list:
    """Deterministic random (database, domain) pairs for one query or a list of queries."""
    if count < 1:
        raise ValueError("count must be positive")
    queries = list(q) if isinstance(q, (list, tuple)) else [q]
    schemas = relation_schemas(queries)
    kinds = infer_kinds(queries)
    consts = set()
    for query in queries:
        consts |= constants_of(query)
    slot_kinds = {kinds.of(("rel", r, a)) or "int" for r, attrs in schemas.items() for a in attrs}
    for query in queries:
        if isinstance(query, NonBooleanQuery):
            slot_kinds |= {kinds.of(("out", a)) or "int" for a in query.header}
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        dom = set(consts)
        target = rng.randint(2, max_domain)
        kinds_needed = sorted(slot_kinds)
        # every kind gets two values first, then the kinds take turns up to the target
        for kind in kinds_needed:
            fresh = _fresh_values(kind, dom)
            while sum(const_kind(d) == kind for d in dom) < 2:
                dom.add(next(fresh))
        for kind in itertools.islice(itertools.cycle(kinds_needed), max(0, target - len(dom))):
            dom.add(next(_fresh_values(kind, dom)))
        ordered = sorted_domain(dom)
        rels = {}
        for name, attrs in sorted(schemas.items()):
            pools = [[d for d in ordered if const_kind(d) == (kinds.of(("rel", name, a)) or "int")] for a in attrs]
            n = rng.randint(0, max_tuples)
            tuples = {tuple(rng.choice(p) for p in pools) for _ in range(n)}
            rels[name] = (attrs, tuples)
        out.append(Instance(Database(rels), frozenset(dom)))
    return out


def _fresh_values(kind, taken):
    if kind == "int":
        for i in itertools.count():
            if i not in taken:
                yield i
    else:
        for i in itertools.count():
            s = f"v{i}"
            if s not in taken:
                yield s


# -- text format ------------------------------------------------------------------
#
#   # comment
#   R(A, B): (1, 2) (3, "x")
#   Empty(A):
#   Flag(): ()
#   domain: 1 2 3 "x"

_VALUE = r'-?\d+|"(?:[^"\\]|\\.)*"'
_REL_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(([^)]*)\)\s*:(.*)$")
_TUPLE = re.compile(r"\(([^()]*)\)")
_VALUE_RE = re.compile(_VALUE)


def _parse_values(text: str, where: str) -> list:
    values = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _VALUE_RE.match(text, pos)
        if m is None:
            raise FormatError(f"bad constant near {text[pos:pos + 10]!r}", where)
        tok = m.group()
        values.append(json.loads(tok) if tok.startswith('"') else int(tok))
        pos = m.end()
        while pos < len(text) and text[pos] in " ,\t":
            pos += 1
    return values


def parse_database(text: str) -> tuple[Database, frozenset | None]:
    """Parse the database text format; returns the database and the declared domain (or None)."""
    rels = {}
    domain = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0] if '"' not in raw else raw
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        where = f"line {lineno}"
        if line.startswith("domain:"):
            domain = frozenset(_parse_values(line[len("domain:"):], where))
            continue
        m = _REL_LINE.match(line)
        if m is None:
            raise FormatError("expected 'Name(Attr, ...): (v, ...) ...' or 'domain: v ...'", where)
        name, attrs_text, rest = m.groups()
        attrs = tuple(a.strip() for a in attrs_text.split(",") if a.strip())
        if name in rels:
            raise FormatError(f"relation {name} declared twice", where)
        tuples = set()
        leftover = _TUPLE.sub("", rest).strip()
        if leftover:
            raise FormatError(f"unexpected text {leftover!r}", where)
        for tm in _TUPLE.finditer(rest):
            values = tuple(_parse_values(tm.group(1), where))
            if len(values) != len(attrs):
                raise ArityMismatch(f"{where}: tuple {values} does not match {name}{attrs}")
            tuples.add(values)
        rels[name] = (attrs, tuples)
    return Database(rels), domain


def format_database(db: Database, domain=None) -> str:
    lines = []
    for name in sorted(db):
        rel = db[name]
        tuples = sorted(rel.tuples, key=lambda t: [_sort_key(v) for v in t])
        body = " ".join("(" + ", ".join(format_const(v) for v in t) + ")" for t in tuples)
        lines.append(f"{name}({', '.join(rel.schema)}): {body}".rstrip())
    if domain is not None:
        lines.append("domain: " + " ".join(format_const(v) for v in sorted_domain(domain)))
    return "\n".join(lines) + "\n"


def format_result(result) -> str:
    if isinstance(result, bool):
        return "true" if result else "false"
    rows = sorted(result, key=lambda t: [_sort_key(v) for v in t])
    return "\n".join("(" + ", ".join(format_const(v) for v in t) + ")" for t in rows)


__all__ = [
    "CmpOp",
    "Database",
    "EquivResult",
    "Instance",
    "Relation",
    "equiv_on",
    "evaluate",
    "format_database",
    "format_result",
    "gen_instances",
    "parse_database",
]
