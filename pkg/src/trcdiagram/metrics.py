"""Diagram size metrics, with the legacy union-of-cells form as the
comparison baseline for the exponential-succinctness family.

Counting convention (each item is one box unless noted):

* a table box, plus one attribute box per attribute drawn as a plain row and
  one per fused selection row (``A=1``);
* a condition box for each standalone selection;
* each fuse box;
* a built-in drawn without shortcut: its name box plus one box per anchor;
* a labeled join arrow: no box, one edge;
* the output box plus its attribute boxes.

Negation scopes are not boxes.  With this convention ``family(k)`` needs
``5k+1`` boxes and ``2k`` edges, and every legacy union cell ``k+1`` boxes.
"""

from __future__ import annotations

import itertools
import time
from collections import Counter
from dataclasses import dataclass, field, replace

from .diagram import FUSE, Diagram
from .errors import FragmentError, TRCError
from .evaluator import equiv_on, evaluate, gen_instances
from .fragments import Fragment, classify, remove_forall_implies
from .safety import check_safety
from .trc import (
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
    contains,
    normalize,
    relation_of,
    walk,
)
from .translate import diagram_to_trc, to_builtin_form, trc_to_representationB


@dataclass(frozen=True)
class SizeMetrics:
    boxes: int
    edges: int


def size_metrics(d: Diagram) -> SizeMetrics:
    hints = {h.builtin: h.kind for h in d.hints}
    builtin_ids = {b.id for b in d.builtins}
    boxes = len(d.tables) + sum(1 for p in d.partitions if p.kind == FUSE)
    for o in d.outputs:
        boxes += 1 + len(o.attributes)
    for t in d.tables:
        for attr in t.attributes:
            fused = plain = 0
            for e in d.edges_of(t.id):
                if (t.id, attr) not in (e.a, e.b):
                    continue
                other = e.other(t.id) if e.a != e.b else e.a
                if other[0] in builtin_ids and hints.get(other[0]) == "fused":
                    fused += 1
                else:
                    plain += 1
            boxes += fused + (1 if plain or not fused else 0)
    edges = 0
    for b in d.builtins:
        kind = hints.get(b.id)
        if kind == "condition":
            boxes += 1
        elif kind is None:
            boxes += 1 + len(b.anchors)
    for e in d.edges:
        anchor = next((x for x in (e.a, e.b) if x[0] in builtin_ids), None)
        if anchor is None:
            edges += 1
            continue
        kind = hints.get(anchor[0])
        if kind == "fused" or kind == "arrow" and anchor[1] == "$2":
            continue  # an arrow is a single drawn edge
        edges += 1
    return SizeMetrics(boxes, edges)


def family(k: int) -> BooleanQuery:
    """``exists r in R [(r.A1 = c11 or r.A1 = c12) and ... and (r.Ak = ck1 or r.Ak = ck2)]``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    clauses = tuple(
        Or((SelPred(Attr("r", f"A{i}"), CmpOp.EQ, 10 * i + 1), SelPred(Attr("r", f"A{i}"), CmpOp.EQ, 10 * i + 2)))
        for i in range(1, k + 1)
    )
    return normalize(BooleanQuery(Exists((Binding("r", "R"),), And(clauses))))


# -- legacy union form ------------------------------------------------------------------


@dataclass(frozen=True)
class UnionForm:
    cells: tuple

    def evaluate(self, db, dom):
        results = [evaluate(c, db, dom) for c in self.cells]
        if results and isinstance(results[0], bool):
            return any(results)
        return frozenset().union(*results)


def _dnf(f) -> list:
    if isinstance(f, Or):
        return [d for c in f.children for d in _dnf(c)]
    if isinstance(f, And):
        return [And(combo) for combo in itertools.product(*(_dnf(c) for c in f.children))]
    if isinstance(f, Exists):
        return [Exists(f.bindings, d) for d in _dnf(f.body)]
    if isinstance(f, Not):
        if contains(f.body, Or):
            raise FragmentError("a disjunction under a negation cannot be distributed into union cells")
        return [f]
    if isinstance(f, (Forall, Implies)):
        raise FragmentError("union cells need a query without forall or implication")
    return [f]


def legacy_union_form(q) -> UnionForm:
    q = normalize(q)
    if classify(q) is Fragment.FULL:
        raise FragmentError("union cells need a query without forall or implication")
    return UnionForm(tuple(normalize(replace(q, body=d)) for d in _dnf(q.body)))


def legacy_size(q) -> SizeMetrics:
    sizes = [size_metrics(trc_to_representationB(c)) for c in legacy_union_form(q).cells]
    return SizeMetrics(sum(s.boxes for s in sizes), sum(s.edges for s in sizes))


# -- benchmark ---------------------------------------------------------------------


def relational_atoms(q) -> Counter:
    """Atoms with each tuple variable replaced by its relation name (joins oriented)."""
    rel = relation_of(q.body)
    if isinstance(q, NonBooleanQuery):
        rel = {**rel, q.out_var: "<out>"}
    out = Counter()
    for _, n in walk(q.body):
        if isinstance(n, (Exists, Forall)):
            out.update(("bind", b.relation) for b in n.bindings)
        elif isinstance(n, SelPred):
            out[("sel", rel[n.left.var], n.left.name, n.op.value, repr(n.const))] += 1
        elif isinstance(n, JoinPred):
            a = (rel[n.left.var], n.left.name)
            b = (rel[n.right.var], n.right.name)
            op = n.op
            if b < a:
                a, b, op = b, a, op.mirror()
            out[("join", a, op.value, b)] += 1
    return out


def atoms_preserved(q, back) -> bool:
    """Same atoms up to variable renaming, once both sides use the built-in encoding."""
    return relational_atoms(to_builtin_form(q, True)) == relational_atoms(to_builtin_form(back, True))


@dataclass
class BenchRow:
    name: str
    fragment: str = "-"
    verdict: str = "-"
    expected: str = "-"
    translated: bool = False
    atoms_preserved: bool = False
    roundtrip: bool = False
    boxes: int | None = None
    edges: int | None = None
    legacy_boxes: int | None = None
    error: str = ""

    def cells(self) -> list:
        def show(v):
            if v is None:
                return "-"
            if isinstance(v, bool):
                return "yes" if v else "no"
            return str(v)

        return [show(v) for v in (
            self.name, self.fragment, self.verdict, self.expected, self.translated,
            self.atoms_preserved, self.roundtrip, self.boxes, self.edges, self.legacy_boxes, self.error,
        )]


COLUMNS = ["fixture", "fragment", "safety", "expected", "repB", "atoms", "roundtrip", "boxes", "edges", "legacy_boxes", "error"]


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def coverage(self) -> tuple:
        return sum(r.translated for r in self.rows), len(self.rows)

    def to_tsv(self) -> str:
        lines = ["\t".join(COLUMNS)]
        lines += ["\t".join(r.cells()) for r in self.rows]
        done, total = self.coverage
        pct = 100.0 * done / total if total else 100.0
        lines.append(f"# coverage\t{done}/{total}\t{pct:.0f}%")
        return "\n".join(lines) + "\n"


def bench_one(name, q, expected=None, instances: int = 20, seed: int = 0) -> BenchRow:
    row = BenchRow(name, expected=expected or "-")
    try:
        row.fragment = classify(q).value
        row.verdict = check_safety(q).verdict
        encv = remove_forall_implies(q)
        d = trc_to_representationB(encv)
        back = diagram_to_trc(d)
        row.translated = True
        row.atoms_preserved = atoms_preserved(encv, back)
        inst = gen_instances([q, back], instances, seed)
        row.roundtrip = equiv_on(q, back, inst).equivalent
        m = size_metrics(d)
        row.boxes, row.edges = m.boxes, m.edges
        try:
            row.legacy_boxes = legacy_size(encv).boxes
        except FragmentError:
            row.legacy_boxes = None
    except TRCError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # the harness records and moves on
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def run_benchmark(fixtures, instances: int = 20, seed: int = 0) -> BenchReport:
    """Run the full pipeline on each fixture; ``fixtures`` yields objects with
    ``name``, ``query`` and optional ``expect`` mapping."""
    start = time.perf_counter()
    report = BenchReport()
    for fx in fixtures:
        expect = getattr(fx, "expect", {}) or {}
        report.rows.append(bench_one(fx.name, fx.query, expect.get("verdict"), instances, seed))
    report.seconds = time.perf_counter() - start
    return report
