"""Seeded generator of small well-formed queries for property and acceptance tests."""

from __future__ import annotations

import random

from .fragments import Fragment
from .trc import (
    TRUE,
    And,
    Attr,
    Binding,
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
    normalize,
)

SCHEMA = {"R": ("A", "B"), "S": ("A", "B"), "T": ("A",)}
CONSTANTS = (0, 1, 2)
OPS = tuple(CmpOp)


class QueryGenerator:
    def __init__(self, rng: random.Random, fragment: Fragment = Fragment.FULL, max_depth: int = 3):
        self.rng = rng
        self.fragment = fragment
        self.max_depth = max_depth
        self.counter = 0

    def fresh(self, relation: str) -> str:
        self.counter += 1
        return f"{relation.lower()}{self.counter}"

    def predicate(self, scope):
        rng = self.rng
        var, attrs = rng.choice(scope)
        left = Attr(var, rng.choice(attrs))
        others = [(v, a) for v, attrs2 in scope for a in attrs2 if (v, a) != (var, left.name)]
        if others and rng.random() < 0.6:
            v, a = rng.choice(others)
            op = CmpOp.EQ if rng.random() < 0.5 else rng.choice(OPS)
            return JoinPred(left, op, Attr(v, a))
        return SelPred(left, rng.choice(OPS), rng.choice(CONSTANTS))

    def exists(self, scope, depth, cls=Exists):
        rng = self.rng
        bindings = []
        new_scope = list(scope)
        for _ in range(rng.choice((1, 1, 2))):
            rel = rng.choice(sorted(SCHEMA))
            var = self.fresh(rel)
            bindings.append(Binding(var, rel))
            new_scope.append((var, SCHEMA[rel]))
        if cls is Exists and rng.random() < 0.08:
            return Exists(tuple(bindings), TRUE)
        return cls(tuple(bindings), self.formula(new_scope, depth + 1))

    def formula(self, scope, depth=0):
        rng = self.rng
        if not scope:
            return self.exists(scope, depth)
        if depth >= self.max_depth:
            return self.predicate(scope)
        kinds = ["pred", "pred", "and", "not", "exists", "exists"]
        if self.fragment in (Fragment.ENCV, Fragment.FULL):
            kinds.append("or")
        if self.fragment is Fragment.FULL:
            kinds += ["forall", "implies"]
        kind = rng.choice(kinds)
        if kind == "pred":
            return self.predicate(scope)
        if kind == "and":
            return And(tuple(self.formula(scope, depth + 1) for _ in range(rng.choice((2, 2, 3)))))
        if kind == "or":
            return Or(tuple(self.formula(scope, depth + 1) for _ in range(2)))
        if kind == "not":
            return Not(self.formula(scope, depth + 1))
        if kind == "implies":
            return Implies(self.formula(scope, depth + 1), self.formula(scope, depth + 1))
        if kind == "forall":
            return self.exists(scope, depth, Forall)
        return self.exists(scope, depth)

    def query(self, boolean: bool | None = None):
        rng = self.rng
        if boolean is None:
            boolean = rng.random() < 0.5
        if boolean:
            return normalize(BooleanQuery(self.formula([], 0)))
        header = ("A",) if rng.random() < 0.7 else ("A", "B")
        rel = rng.choice(("R", "S"))
        var = self.fresh(rel)
        scope = [("q", header), (var, SCHEMA[rel])]
        binds = [JoinPred(Attr("q", a), CmpOp.EQ, Attr(var, a)) for a in header]
        body = Exists((Binding(var, rel),), And((*binds, self.formula(scope, 1))))
        return normalize(NonBooleanQuery("q", header, body))


def random_query(seed: int, fragment: Fragment = Fragment.FULL, boolean: bool | None = None, max_depth: int = 3):
    return QueryGenerator(random.Random(seed), fragment, max_depth).query(boolean)


def random_queries(n: int, seed: int = 0, fragment: Fragment = Fragment.FULL, max_depth: int = 3) -> list:
    rng = random.Random(seed)
    return [QueryGenerator(random.Random(rng.getrandbits(32)), fragment, max_depth).query() for _ in range(n)]
