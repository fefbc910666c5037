"""Diagram document model: a partition tree holding table, built-in and output boxes
joined by unlabeled equality edges.

Partitions are stored flat with parent pointers; document order of the
``partitions`` tuple is the order of children everywhere.  A partition is the
single ``base`` root, a ``negation`` scope, or a ``fuse`` box belonging to a
group of at least two siblings that together read as a disjunction.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace

from .errors import FormatError
from .trc import CmpOp, builtin_name, const_kind

FORMAT_VERSION = 1

BASE, NEGATION, FUSE = "base", "negation", "fuse"
HINT_KINDS = ("fused", "condition", "arrow")


@dataclass(frozen=True)
class Partition:
    id: str
    kind: str
    parent: str | None = None
    group: str | None = None


@dataclass(frozen=True)
class TableBox:
    id: str
    relation: str
    var: str
    partition: str
    attributes: tuple = ()


@dataclass(frozen=True)
class BuiltinBox:
    id: str
    op: CmpOp
    const: object = None
    partition: str = ""

    @property
    def unary(self) -> bool:
        return self.const is not None

    @property
    def anchors(self) -> tuple:
        return ("$1",) if self.unary else ("$1", "$2")

    @property
    def name(self) -> str:
        return builtin_name(self.op, self.const)


@dataclass(frozen=True)
class OutputBox:
    id: str
    attributes: tuple
    partition: str


@dataclass(frozen=True)
class Edge:
    a: tuple  # (box id, attribute)
    b: tuple

    def other(self, box_id: str) -> tuple:
        return self.b if self.a[0] == box_id else self.a


@dataclass(frozen=True)
class Hint:
    builtin: str
    kind: str


@dataclass(frozen=True)
class Diagram:
    partitions: tuple
    tables: tuple = ()
    builtins: tuple = ()
    edges: tuple = ()
    outputs: tuple = ()
    hints: tuple = ()

    # -- lookups --

    def partition(self, pid: str) -> Partition:
        for p in self.partitions:
            if p.id == pid:
                return p
        raise KeyError(pid)

    @property
    def base(self) -> Partition:
        return next(p for p in self.partitions if p.kind == BASE)

    @property
    def output(self) -> OutputBox | None:
        return self.outputs[0] if self.outputs else None

    def children(self, pid: str) -> list:
        return [p for p in self.partitions if p.parent == pid]

    def ancestors(self, pid: str) -> list:
        """Partition ids from ``pid`` up to the root, inclusive."""
        by_id = {p.id: p for p in self.partitions}
        chain, seen = [], set()
        while pid is not None and pid in by_id and pid not in seen:
            seen.add(pid)
            chain.append(pid)
            pid = by_id[pid].parent
        return chain

    def negation_depth(self, pid: str) -> int:
        by_id = {p.id: p for p in self.partitions}
        return sum(1 for a in self.ancestors(pid) if by_id[a].kind == NEGATION)

    def boxes(self) -> list:
        return [*self.outputs, *self.tables, *self.builtins]

    def box(self, box_id: str):
        for b in self.boxes():
            if b.id == box_id:
                return b
        raise KeyError(box_id)

    def boxes_in(self, pid: str) -> list:
        return [b for b in self.boxes() if b.partition == pid]

    def edges_of(self, box_id: str) -> list:
        return [e for e in self.edges if e.a[0] == box_id or e.b[0] == box_id]

    def hint_for(self, builtin_id: str) -> str | None:
        for h in self.hints:
            if h.builtin == builtin_id:
                return h.kind
        return None

    def groups(self) -> dict:
        """Group id -> member partitions, in document order."""
        out: dict = {}
        for p in self.partitions:
            if p.kind == FUSE:
                out.setdefault(p.group, []).append(p)
        return out


def desugarable(d: Diagram, b: BuiltinBox) -> bool:
    """A built-in reads as a plain predicate only if every box it touches is in scope at its partition."""
    boxes = {x.id: x for x in d.boxes()}
    scope = d.ancestors(b.partition)
    ends = [e.other(b.id) for e in d.edges_of(b.id)]
    return len(ends) == len(b.anchors) and all(
        end[0] in boxes and not isinstance(boxes[end[0]], BuiltinBox) and boxes[end[0]].partition in scope for end in ends
    )


def box_attributes(box) -> tuple:
    if isinstance(box, BuiltinBox):
        return box.anchors
    return box.attributes


# -- validation -----------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass
class ValidityReport:
    issues: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        return self.valid

    def codes(self) -> set:
        return {i.code for i in self.issues}

    def __str__(self) -> str:
        return "valid" if self.valid else "\n".join(str(i) for i in self.issues)


def validate(d: Diagram) -> ValidityReport:
    report = ValidityReport()

    def bad(code, msg):
        report.issues.append(Issue(code, msg))

    by_id = {}
    for p in d.partitions:
        if p.id in by_id:
            bad("duplicate-id", f"partition id {p.id} used twice")
        by_id[p.id] = p
    box_ids = Counter(b.id for b in d.boxes())
    for bid, n in box_ids.items():
        if n > 1 or bid in by_id:
            bad("duplicate-id", f"box id {bid} used twice")
    boxes = {b.id: b for b in d.boxes()}

    # partition tree
    bases = [p for p in d.partitions if p.kind == BASE]
    if len(bases) != 1:
        bad("base", f"expected exactly one base partition, found {len(bases)}")
    for p in d.partitions:
        if p.kind not in (BASE, NEGATION, FUSE):
            bad("partition-kind", f"partition {p.id} has unknown kind {p.kind!r}")
        if p.kind == BASE:
            if p.parent is not None:
                bad("base", f"base partition {p.id} has a parent")
        elif p.parent not in by_id:
            bad("dangling", f"partition {p.id} has unknown parent {p.parent}")
        if (p.kind == FUSE) != (p.group is not None):
            bad("fuse-group", f"partition {p.id}: only fuse partitions carry a group id")
    for p in d.partitions:
        chain = d.ancestors(p.id)
        if by_id.get(chain[-1], p).parent is not None:
            bad("cycle", f"partition {p.id} does not reach the base partition")
    for gid, members in d.groups().items():
        if len(members) < 2:
            bad("fuse-group", f"fuse group {gid} has {len(members)} member; at least 2 are required")
        if len({m.parent for m in members}) > 1:
            bad("fuse-group", f"members of fuse group {gid} have different parents")

    # boxes
    for b in d.boxes():
        if b.partition not in by_id:
            bad("dangling", f"box {b.id} sits in unknown partition {b.partition}")
    vars_seen = Counter(t.var for t in d.tables)
    for v, n in vars_seen.items():
        if n > 1:
            bad("variable", f"tuple variable {v} appears on {n} tables")
    for t in d.tables:
        if len(set(t.attributes)) != len(t.attributes):
            bad("attribute", f"table {t.id} lists an attribute twice")
    for b in d.builtins:
        if not isinstance(b.op, CmpOp):
            bad("builtin", f"built-in {b.id} has no comparison operator")
        if b.const is not None and const_kind(b.const) is None:
            bad("builtin", f"built-in {b.id} has an unsupported constant")

    if len(d.outputs) > 1:
        bad("output", f"at most one output box is allowed, found {len(d.outputs)}")
    for o in d.outputs:
        if o.partition in by_id and by_id[o.partition].kind != BASE:
            bad("output", "the output box must sit in the base partition, outside every scope")
        if not o.attributes or len(set(o.attributes)) != len(o.attributes):
            bad("output", "the output box needs distinct, non-empty header attributes")

    # edges
    incident = Counter()
    for e in d.edges:
        ok = True
        for end in (e.a, e.b):
            box = boxes.get(end[0])
            if box is None:
                bad("dangling", f"edge endpoint {end[0]}.{end[1]} names no box")
                ok = False
            elif end[1] not in box_attributes(box):
                bad("attribute", f"edge endpoint {end[1]} is not an attribute of {end[0]}")
                ok = False
        if not ok:
            continue
        ba, bb = boxes[e.a[0]], boxes[e.b[0]]
        if isinstance(ba, BuiltinBox) and isinstance(bb, BuiltinBox):
            bad("builtin-edge", f"edge {e.a[0]}-{e.b[0]} joins two built-in boxes")
        if ba.partition in by_id and bb.partition in by_id:
            if ba.partition not in d.ancestors(bb.partition) and bb.partition not in d.ancestors(ba.partition):
                bad(
                    "scope",
                    f"edge {e.a[0]}.{e.a[1]}-{e.b[0]}.{e.b[1]} connects partitions {ba.partition} and {bb.partition}, "
                    "which are not on one ancestor path",
                )
        for end in (e.a, e.b):
            if isinstance(boxes[end[0]], BuiltinBox):
                incident[end] += 1
    for b in d.builtins:
        for anchor in b.anchors:
            n = incident[(b.id, anchor)]
            if n != 1:
                bad("builtin-arity", f"built-in {b.id} ({b.name}) needs exactly one edge at {anchor}, has {n}")
    for o in d.outputs:
        for attr in o.attributes:
            if not any((o.id, attr) in (e.a, e.b) for e in d.edges):
                bad("output", f"output attribute {attr} has no edge")

    # leaves
    for p in d.partitions:
        if p.kind != BASE and not d.children(p.id) and not d.boxes_in(p.id):
            bad("empty-leaf", f"leaf partition {p.id} contains no box")
    if not d.boxes() and len(d.partitions) <= 1:
        bad("empty-leaf", "the diagram is empty")

    # hints
    builtins = {b.id: b for b in d.builtins}
    seen = set()
    for h in d.hints:
        b = builtins.get(h.builtin)
        if b is None:
            bad("hint", f"hint names unknown built-in {h.builtin}")
            continue
        if h.builtin in seen:
            bad("hint", f"built-in {h.builtin} has two hints")
        seen.add(h.builtin)
        if h.kind not in HINT_KINDS:
            bad("hint", f"unknown hint kind {h.kind!r}")
        elif (h.kind == "arrow") == b.unary:
            bad("hint", f"hint {h.kind} does not fit built-in {b.id} ({b.name})")
        elif not desugarable(d, b):
            bad("hint", f"built-in {b.id} ({b.name}) reaches a box outside its scope and cannot be drawn as a shortcut")
        elif h.kind == "fused":
            ends = [e.other(b.id) for e in d.edges_of(b.id)]
            if len(ends) != 1 or not isinstance(boxes.get(ends[0][0]), TableBox) or boxes[ends[0][0]].partition != b.partition:
                bad("hint", f"fused selection {b.id} must hang off a table attribute in its own partition")
    return report


# -- fuse-box expansion -----------------------------------------------------------


def _fresh_ids(d: Diagram, prefix: str):
    taken = {p.id for p in d.partitions} | {b.id for b in d.boxes()}
    n = 0
    while True:
        n += 1
        if f"{prefix}{n}" not in taken:
            yield f"{prefix}{n}"


def expand_fuse_boxes(d: Diagram) -> Diagram:
    """Replace every fuse group by a negation holding one negation per member.

    Boxes and edges stay where they were; every box gains exactly two
    enclosing negations per group it sat in, so zone parity is unchanged.
    """
    groups = d.groups()
    if not groups:
        return d
    fresh = _fresh_ids(d, "p")
    shell = {gid: next(fresh) for gid in groups}
    out = []
    for p in d.partitions:
        if p.kind == FUSE:
            if p is groups[p.group][0]:
                out.append(Partition(shell[p.group], NEGATION, p.parent))
            out.append(Partition(p.id, NEGATION, shell[p.group]))
        else:
            out.append(p)
    return replace(d, partitions=tuple(out))


# -- JSON format ------------------------------------------------------------------


def to_dict(d: Diagram) -> dict:
    def builtin(b):
        item = {"id": b.id, "op": b.op.value}
        if b.const is not None:
            item["const"] = b.const
        item["partition"] = b.partition
        return item

    return {
        "version": FORMAT_VERSION,
        "partitions": [
            {"id": p.id, "kind": p.kind, "parent": p.parent, **({"group": p.group} if p.group else {})}
            for p in d.partitions
        ],
        "tables": [
            {"id": t.id, "relation": t.relation, "var": t.var, "partition": t.partition, "attributes": list(t.attributes)}
            for t in d.tables
        ],
        "builtins": [builtin(b) for b in d.builtins],
        "edges": [{"a": list(e.a), "b": list(e.b)} for e in d.edges],
        "output": [{"id": o.id, "attributes": list(o.attributes), "partition": o.partition} for o in d.outputs],
        "hints": [{"builtin": h.builtin, "kind": h.kind} for h in d.hints],
    }


def write_diagram(d: Diagram) -> str:
    return json.dumps(to_dict(d), indent=2, ensure_ascii=False) + "\n"


class _Reader:
    def __init__(self, data):
        self.data = data

    def get(self, obj, key, kind, where, optional=False, default=None):
        if not isinstance(obj, dict):
            raise FormatError("expected an object", where)
        if key not in obj:
            if optional:
                return default
            raise FormatError(f"missing key {key!r}", where)
        value = obj[key]
        if kind is not None and not (isinstance(value, kind) and not isinstance(value, bool)):
            names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
            raise FormatError(f"expected {names}", f"{where}.{key}")
        return value

    def items(self, key):
        value = self.get(self.data, key, list, "$", optional=key in ("hints", "output", "builtins", "edges", "tables"), default=[])
        for i, item in enumerate(value):
            if not isinstance(item, dict):
                raise FormatError("expected an object", f"$.{key}[{i}]")
            yield f"$.{key}[{i}]", item


def from_dict(data) -> Diagram:
    r = _Reader(data)
    if not isinstance(data, dict):
        raise FormatError("expected a JSON object", "$")
    version = r.get(data, "version", int, "$")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}", "$.version")
    parts = []
    for where, item in r.items("partitions"):
        parts.append(
            Partition(
                r.get(item, "id", str, where),
                r.get(item, "kind", str, where),
                r.get(item, "parent", (str, type(None)), where, optional=True),
                r.get(item, "group", str, where, optional=True),
            )
        )
    tables = []
    for where, item in r.items("tables"):
        attrs = r.get(item, "attributes", list, where)
        if not all(isinstance(a, str) for a in attrs):
            raise FormatError("attributes must be strings", f"{where}.attributes")
        tables.append(
            TableBox(
                r.get(item, "id", str, where),
                r.get(item, "relation", str, where),
                r.get(item, "var", str, where),
                r.get(item, "partition", str, where),
                tuple(attrs),
            )
        )
    builtins = []
    for where, item in r.items("builtins"):
        try:
            op = CmpOp(r.get(item, "op", str, where))
        except ValueError:
            raise FormatError("unknown comparison operator", f"{where}.op") from None
        const = r.get(item, "const", (int, str), where, optional=True)
        builtins.append(BuiltinBox(r.get(item, "id", str, where), op, const, r.get(item, "partition", str, where)))
    outputs = []
    for where, item in r.items("output"):
        attrs = r.get(item, "attributes", list, where)
        outputs.append(OutputBox(r.get(item, "id", str, where), tuple(attrs), r.get(item, "partition", str, where)))
    box_ids = {b.id for b in [*tables, *builtins, *outputs]}
    part_ids = {p.id for p in parts}
    for kind, seq in (("tables", tables), ("builtins", builtins), ("output", outputs)):
        for i, b in enumerate(seq):
            if b.partition not in part_ids:
                raise FormatError(f"unknown partition {b.partition!r}", f"$.{kind}[{i}].partition")
    for i, p in enumerate(parts):
        if p.parent is not None and p.parent not in part_ids:
            raise FormatError(f"unknown parent partition {p.parent!r}", f"$.partitions[{i}].parent")
    edges = []
    for where, item in r.items("edges"):
        ends = []
        for key in ("a", "b"):
            end = r.get(item, key, list, where)
            if len(end) != 2 or not all(isinstance(x, str) for x in end):
                raise FormatError("an endpoint is [box id, attribute]", f"{where}.{key}")
            if end[0] not in box_ids:
                raise FormatError(f"endpoint names unknown box {end[0]!r}", f"{where}.{key}")
            ends.append(tuple(end))
        edges.append(Edge(*ends))
    hints = []
    for where, item in r.items("hints"):
        hints.append(Hint(r.get(item, "builtin", str, where), r.get(item, "kind", str, where)))
    return Diagram(tuple(parts), tuple(tables), tuple(builtins), tuple(edges), tuple(outputs), tuple(hints))


def read_diagram(text: str) -> Diagram:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return from_dict(data)
