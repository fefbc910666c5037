"""Translations between TRC queries and diagrams.

``to_builtin_form`` anchors every predicate that cannot be drawn as a plain
edge to a built-in relation in the predicate's own scope.  ``trc_to_diagram``
then lays the query out partition by partition, and ``diagram_to_trc`` reads
any valid diagram back.  ``trc_to_representationB`` does the same for queries
with disjunction, turning each disjunct into a fuse box and tagging built-ins
with display hints.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from .diagram import (
    BASE,
    FUSE,
    NEGATION,
    BuiltinBox,
    Diagram,
    Edge,
    Hint,
    OutputBox,
    Partition,
    TableBox,
    desugarable,
    expand_fuse_boxes,
    validate,
)
from .errors import FragmentError, InvalidDiagram
from .fragments import Fragment, classify
from .trc import (
    TRUE,
    And,
    Attr,
    Binding,
    BooleanQuery,
    CmpOp,
    Exists,
    JoinPred,
    NonBooleanQuery,
    Not,
    Or,
    SelPred,
    builtin_name,
    maximal_scope,
    node_at,
    normalize,
    parse_builtin,
    walk,
)


def _all_vars(q) -> set:
    names = {q.out_var} if isinstance(q, NonBooleanQuery) else set()
    for _, n in walk(q.body):
        if isinstance(n, Exists):
            names.update(b.var for b in n.bindings)
    return names


def _fresh(taken: set, base: str) -> str:
    for i in itertools.count(1):
        name = base if i == 1 else f"{base}{i}"
        if name not in taken:
            taken.add(name)
            return name


def _scopes(q, allow_disjunction: bool):
    """Map each predicate (by path) and each variable to its scope id.

    A scope is opened by a negation and, when disjunction is allowed, by each
    child of a disjunction.  The root scope is ``()``.
    """
    var_scope = {}
    if isinstance(q, NonBooleanQuery):
        var_scope[q.out_var] = ()
    pred_scope = {}

    def visit(node, path, scope):
        if isinstance(node, Not):
            visit(node.body, path + (0,), path)
        elif isinstance(node, Or):
            for i, c in enumerate(node.children):
                visit(c, path + (i,), path + (i,) if allow_disjunction else scope)
        elif isinstance(node, And):
            for i, c in enumerate(node.children):
                visit(c, path + (i,), scope)
        elif isinstance(node, Exists):
            for b in node.bindings:
                var_scope[b.var] = scope
            visit(node.body, path + (len(node.bindings),), scope)
        else:
            pred_scope[path] = scope

    visit(q.body, (), ())
    return var_scope, pred_scope


def to_builtin_form(q, allow_disjunction: bool = False):
    """Replace selections and non-co-scoped joins by built-in relations.

    A selection ``r.A θ c`` becomes ``exists c in "θc" [r.A = c.$1]``; a join
    ``r.A θ s.B`` becomes ``exists j in "θ" [r.A = j.$1 and j.$2 = s.B]``.  An
    equijoin stays when its scope is the scope of one of its variables.
    """
    q = normalize(q)
    frag = classify(q)
    allowed = (Fragment.ENC, Fragment.ENCV) if allow_disjunction else (Fragment.ENC,)
    if frag not in allowed:
        raise FragmentError(f"built-in form needs a query in {'/'.join(f.name for f in allowed)}, got {frag.name}")
    var_scope, pred_scope = _scopes(q, allow_disjunction)
    taken = _all_vars(q)

    def rewrite(node, path):
        if isinstance(node, SelPred):
            c = _fresh(taken, "c")
            rel = builtin_name(node.op, node.const)
            return Exists((Binding(c, rel, node.span),), JoinPred(node.left, CmpOp.EQ, Attr(c, "$1"), node.span), node.span)
        if isinstance(node, JoinPred):
            scope = pred_scope[path]
            if node.op is CmpOp.EQ and scope in (var_scope.get(node.left.var), var_scope.get(node.right.var)):
                return node
            j = _fresh(taken, "j")
            body = And(
                (JoinPred(node.left, CmpOp.EQ, Attr(j, "$1"), node.span), JoinPred(Attr(j, "$2"), CmpOp.EQ, node.right, node.span)),
                node.span,
            )
            return Exists((Binding(j, builtin_name(node.op), node.span),), body, node.span)
        if isinstance(node, Not):
            return replace(node, body=rewrite(node.body, path + (0,)))
        if isinstance(node, (And, Or)):
            return replace(node, children=tuple(rewrite(c, path + (i,)) for i, c in enumerate(node.children)))
        if isinstance(node, Exists):
            return replace(node, body=rewrite(node.body, path + (len(node.bindings),)))
        return node

    return maximal_scope(replace(q, body=rewrite(q.body, ())))


def is_builtin_form(q, allow_disjunction: bool = False) -> bool:
    var_scope, pred_scope = _scopes(q, allow_disjunction)
    for path, scope in pred_scope.items():
        node = node_at(q.body, path)
        if isinstance(node, SelPred):
            return False
        if isinstance(node, JoinPred):
            if node.op is not CmpOp.EQ or scope not in (var_scope.get(node.left.var), var_scope.get(node.right.var)):
                return False
    return True


# -- query -> diagram ---------------------------------------------------------------


class _Builder:
    def __init__(self, q):
        self.q = q
        self.partitions = []
        self.tables = []  # [id, relation, var, partition, attrs list]
        self.builtins = []
        self.edges = []
        self.owner = {}  # variable -> box id
        self.groups = itertools.count(1)
        self.outputs = []

    def new_partition(self, kind, parent, group=None):
        pid = f"p{len(self.partitions)}"
        self.partitions.append(Partition(pid, kind, parent, group))
        return pid

    def endpoint(self, attr: Attr):
        box = self.owner.get(attr.var)
        if box is None:
            raise FragmentError(f"variable {attr.var} is not bound by the query")
        for t in self.tables:
            if t[0] == box and attr.name not in t[4]:
                t[4].append(attr.name)
        return (box, attr.name)

    def build(self, f, pid):
        if isinstance(f, Exists):
            for b in f.bindings:
                parsed = parse_builtin(b.relation)
                if parsed is None:
                    bid = f"t{len(self.tables) + 1}"
                    self.tables.append([bid, b.relation, b.var, pid, []])
                else:
                    bid = f"b{len(self.builtins) + 1}"
                    self.builtins.append(BuiltinBox(bid, parsed[0], parsed[1], pid))
                self.owner[b.var] = bid
            self.build(f.body, pid)
        elif isinstance(f, And):
            for c in f.children:
                self.build(c, pid)
        elif isinstance(f, Not):
            self.build(f.body, self.new_partition(NEGATION, pid))
        elif isinstance(f, Or):
            gid = f"g{next(self.groups)}"
            for c in f.children:
                self.build(c, self.new_partition(FUSE, pid, gid))
        elif isinstance(f, JoinPred):
            if f.op is not CmpOp.EQ:
                raise FragmentError(f"predicate {f} is not an equijoin; apply to_builtin_form first")
            self.edges.append(Edge(self.endpoint(f.left), self.endpoint(f.right)))
        elif isinstance(f, SelPred):
            raise FragmentError(f"selection {f} has no anchor; apply to_builtin_form first")
        else:
            raise FragmentError(f"{type(f).__name__} cannot be drawn; rewrite the query into ENC or ENCV first")

    def run(self) -> Diagram:
        base = self.new_partition(BASE, None)
        if isinstance(self.q, NonBooleanQuery):
            self.outputs.append(OutputBox("out", tuple(self.q.header), base))
            self.owner[self.q.out_var] = "out"
        self.build(self.q.body, base)
        tables = tuple(TableBox(i, rel, var, p, tuple(attrs)) for i, rel, var, p, attrs in self.tables)
        return Diagram(tuple(self.partitions), tables, tuple(self.builtins), tuple(self.edges), tuple(self.outputs))


def _check_drawable(q, allow_disjunction):
    if not is_builtin_form(q, allow_disjunction):
        raise FragmentError("query is not in built-in form; apply to_builtin_form first")


def trc_to_diagram(q) -> Diagram:
    """Diagram of an ENC query already in built-in form."""
    q = normalize(q)
    frag = classify(q)
    if frag is not Fragment.ENC:
        raise FragmentError(f"trc_to_diagram needs an ENC query, got {frag.name}")
    _check_drawable(q, False)
    return _Builder(maximal_scope(q)).run()


def trc_to_representationB(q) -> Diagram:
    """Diagram with fuse boxes for disjunctions and shortcut hints for every built-in."""
    q = normalize(q)
    frag = classify(q)
    if frag is Fragment.FULL:
        raise FragmentError("RepresentationB needs a query without forall or implication")
    d = _Builder(to_builtin_form(q, allow_disjunction=True)).run()
    hints = []
    tables = {t.id: t for t in d.tables}
    for b in d.builtins:
        if not desugarable(d, b):
            continue
        if not b.unary:
            hints.append(Hint(b.id, "arrow"))
            continue
        (edge,) = d.edges_of(b.id)
        box_id, _ = edge.other(b.id)
        fused = box_id in tables and tables[box_id].partition == b.partition
        hints.append(Hint(b.id, "fused" if fused else "condition"))
    return replace(d, hints=tuple(hints))


# -- diagram -> query ---------------------------------------------------------------


def _var_names(d: Diagram) -> dict:
    taken = {"q"} if d.outputs else set()
    names = {o.id: "q" for o in d.outputs}
    for t in d.tables:
        initial = t.relation[:1].lower()
        names[t.id] = _fresh(taken, initial if initial.isalpha() else "t")
    for b in d.builtins:
        names[b.id] = _fresh(taken, "c" if b.unary else "j")
    return names


def diagram_to_trc(d: Diagram, disjunction: bool = True, desugar: bool = False):
    """Read a valid diagram back as a query.

    Fuse groups read as disjunctions, or as the negation shells of their
    expansion when ``disjunction`` is false.  Built-ins carrying a hint, or all
    of them with ``desugar``, read as the predicate they stand for.
    """
    report = validate(d)
    if not report.valid:
        raise InvalidDiagram(f"invalid diagram: {report.issues[0]}", report.issues)
    if not disjunction:
        d = expand_fuse_boxes(d)
    names = _var_names(d)
    boxes = {b.id: b for b in d.boxes()}
    depth = {p.id: len(d.ancestors(p.id)) for p in d.partitions}

    def attr(end):
        return Attr(names[end[0]], end[1])

    sugared = {b.id for b in d.builtins if d.hint_for(b.id) or desugar and desugarable(d, b)}
    preds: dict = {p.id: [] for p in d.partitions}
    for b in d.builtins:
        if b.id not in sugared:
            continue
        ends = {}
        for e in d.edges_of(b.id):
            mine = e.a if e.a[0] == b.id else e.b
            ends[mine[1]] = e.other(b.id)
        if b.unary:
            preds[b.partition].append((b.id, SelPred(attr(ends["$1"]), b.op, b.const)))
        else:
            preds[b.partition].append((b.id, JoinPred(attr(ends["$1"]), b.op, attr(ends["$2"]))))
    for i, e in enumerate(d.edges):
        if e.a[0] in sugared or e.b[0] in sugared:
            continue
        pa, pb = boxes[e.a[0]].partition, boxes[e.b[0]].partition
        where = pa if depth[pa] >= depth[pb] else pb
        preds[where].append((f"~{i:06d}", JoinPred(attr(e.a), CmpOp.EQ, attr(e.b))))

    def formula(pid):
        bindings = [Binding(names[t.id], t.relation) for t in d.tables if t.partition == pid]
        bindings += [Binding(names[b.id], b.name) for b in d.builtins if b.partition == pid and b.id not in sugared]
        parts = [p for _, p in sorted(preds[pid], key=lambda x: x[0])]
        done = set()
        for child in d.children(pid):
            if child.kind == NEGATION:
                parts.append(Not(formula(child.id)))
            elif child.group not in done:
                done.add(child.group)
                members = [m for m in d.children(pid) if m.group == child.group]
                parts.append(Or(tuple(formula(m.id) for m in members)))
        body = parts[0] if len(parts) == 1 else And(tuple(parts))
        if bindings:
            return Exists(tuple(bindings), body)
        if body == TRUE:
            raise InvalidDiagram(f"partition {pid} induces no formula")
        return body

    body = formula(d.base.id)
    if d.outputs:
        return normalize(NonBooleanQuery("q", tuple(d.output.attributes), body))
    return normalize(BooleanQuery(body))
