"""Syntactic safety of TRC queries: base partition plus the four binding conditions."""

from __future__ import annotations

from dataclasses import dataclass, field

from .trc import (
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
    children,
    free_vars,
    is_builtin,
    node_at,
    predicate_attrs,
    walk,
)

_BLOCKERS = (Not, Implies, Forall)


def base_partition(q) -> frozenset:
    """Paths of the nodes reachable from the root without passing below a not, implication or forall."""
    body = q.body if isinstance(q, (BooleanQuery, NonBooleanQuery)) else q
    out = set()

    def visit(node, path):
        out.add(path)
        if isinstance(node, _BLOCKERS):
            return
        for i, c in enumerate(children(node)):
            visit(c, path + (i,))

    visit(body, ())
    return frozenset(out)


@dataclass(frozen=True)
class Violation:
    condition: int
    path: tuple
    message: str
    span: object = None

    def location(self) -> str:
        if self.span is not None:
            return f"{self.span.start}..{self.span.end}"
        return "/" + "/".join(map(str, self.path))

    def __str__(self) -> str:
        return f"condition {self.condition}: {self.message} at {self.location()}"


@dataclass
class SafetyReport:
    violations: list = field(default_factory=list)

    @property
    def safe(self) -> bool:
        return not self.violations

    @property
    def verdict(self) -> str:
        return "safe" if self.safe else "unsafe"

    @property
    def conditions(self) -> set:
        return {v.condition for v in self.violations}

    def lines(self) -> list[str]:
        return [str(v) for v in self.violations]

    def __str__(self) -> str:
        return "\n".join([self.verdict, *self.lines()])


def _binding_predicates(q: NonBooleanQuery):
    """Yield ``(path, node, header_attr)`` for every equality binding an output attribute."""
    existential = set()
    for _, node in walk(q.body):
        if isinstance(node, Exists):
            existential.update(b.var for b in node.bindings if not is_builtin(b.relation))
    out = q.out_var
    for path, node in walk(q.body):
        if isinstance(node, SelPred) and node.op is CmpOp.EQ and node.left.var == out:
            yield path, node, node.left.name
        elif isinstance(node, JoinPred) and node.op is CmpOp.EQ:
            for mine, other in ((node.left, node.right), (node.right, node.left)):
                if mine.var == out and other.var in existential:
                    yield path, node, mine.name
                    break


def check_safety(q) -> SafetyReport:
    report = SafetyReport()
    if isinstance(q, BooleanQuery):
        return report
    base = base_partition(q)
    bindings = list(_binding_predicates(q))
    out = q.out_var

    bound_attrs = {attr for _, _, attr in bindings}
    for attr in q.header:
        if attr not in bound_attrs:
            report.violations.append(
                Violation(1, (), f"header attribute {out}.{attr} has no binding predicate", q.body.span)
            )

    in_base = []
    for path, node, attr in bindings:
        if path in base:
            in_base.append((path, node, attr))
        else:
            report.violations.append(
                Violation(2, path, f"binding predicate {node} of {out}.{attr} is outside the base partition", node.span)
            )

    def defined_in(prefix):
        return {attr for path, _, attr in in_base if path[: len(prefix)] == prefix}

    checked_ors = set()
    for path, node, attr in in_base:
        ors = [path[:k] for k in range(len(path)) if isinstance(node_at(q.body, path[:k]), Or)]
        if ors:
            for or_path in ors:
                if or_path in checked_ors:
                    continue
                checked_ors.add(or_path)
                or_node = node_at(q.body, or_path)
                shapes = []
                for i, child in enumerate(or_node.children):
                    fv = free_vars(child)
                    shapes.append((fv, frozenset(defined_in(or_path + (i,)))))
                first = shapes[0]
                if any(fv != {out} for fv, _ in shapes) or any(s != first for s in shapes):
                    desc = "; ".join(
                        f"{sorted(fv)} defining {sorted(d)}" for fv, d in shapes
                    )
                    report.violations.append(
                        Violation(
                            3,
                            or_path,
                            f"disjuncts must share the single free variable {out} with the same attributes ({desc})",
                            or_node.span,
                        )
                    )
        else:
            others = [
                p
                for p, n in walk(q.body)
                if p != path and any(a.var == out and a.name == attr for a in predicate_attrs(n))
            ]
            if others:
                report.violations.append(
                    Violation(
                        4,
                        path,
                        f"{out}.{attr} is bound by {node} and also used in {len(others)} other predicate(s)",
                        node.span,
                    )
                )
    return report


def is_safe(q) -> bool:
    return check_safety(q).safe
