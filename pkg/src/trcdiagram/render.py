"""Deterministic layout and SVG output.

Every coordinate is an integer on an 8px grid and text width is estimated
from character count, so the same diagram always yields the same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

from .diagram import BASE, FUSE, NEGATION, Diagram
from .trc import format_const

GRID = 8
CHAR = 8
ROW = 24
PAD = 16
GAP = 16
TEXT_PAD = 8

GRAY = "#d4d4d4"
WHITE = "#ffffff"
UNARY_TINT = "#dbe9f7"
BINARY_TINT = "#fde2c4"


def _snap(v: int) -> int:
    return -(-v // GRID) * GRID


@dataclass(frozen=True)
class Rect:
    kind: str
    id: str
    x: int
    y: int
    w: int
    h: int
    label: str = ""
    depth: int = 0
    partition: str = ""


@dataclass(frozen=True)
class Line:
    kind: str
    x1: int
    y1: int
    x2: int
    y2: int
    label: str = ""


@dataclass(frozen=True)
class Scene:
    width: int
    height: int
    rects: tuple
    lines: tuple


class _Layout:
    def __init__(self, d: Diagram, spread: bool):
        self.d = d
        self.spread = spread
        self.hints = {h.builtin: h.kind for h in d.hints}
        self.builtins = {b.id: b for b in d.builtins}
        self.rects: list = []
        self.anchor: dict = {}
        self.sizes: dict = {}
        self.rows = {t.id: self.table_rows(t) for t in d.tables}

    def table_rows(self, t) -> list:
        """(label, attr, fused builtin id or None) per drawn row."""
        rows = []
        for attr in t.attributes:
            fused, plain = [], False
            for e in self.d.edges_of(t.id):
                if (t.id, attr) not in (e.a, e.b):
                    continue
                other = e.other(t.id)
                if other[0] in self.builtins and self.hints.get(other[0]) == "fused":
                    fused.append(self.builtins[other[0]])
                else:
                    plain = True
            if plain or not fused:
                rows.append((attr, attr, None))
            for b in fused:
                rows.append((f"{attr}{b.op.value}{format_const(b.const)}", attr, b.id))
        return rows

    # -- measuring --

    def drawn_boxes(self, pid):
        out = []
        for b in self.d.boxes_in(pid):
            if b.id in self.builtins and self.hints.get(b.id) == "fused":
                continue
            out.append(b)
        return out

    def box_lines(self, box) -> tuple:
        """Header label and row labels."""
        if box.id in self.builtins:
            kind = self.hints.get(box.id)
            if kind in ("condition", "arrow"):
                return box.name, []
            return box.name, list(box.anchors)
        if box in self.d.outputs:
            return "Q", list(box.attributes)
        return box.relation, [r[0] for r in self.rows[box.id]]

    def box_size(self, box) -> tuple:
        header, rows = self.box_lines(box)
        width = _snap(max(len(s) for s in [header, *rows]) * CHAR + 2 * TEXT_PAD)
        return max(width, 4 * GRID), ROW * (1 + len(rows))

    def items(self, pid) -> list:
        items = [("box", b) for b in self.drawn_boxes(pid)]
        done = set()
        for child in self.d.children(pid):
            if child.kind == FUSE:
                if child.group in done:
                    continue
                done.add(child.group)
                items.append(("group", [m for m in self.d.children(pid) if m.group == child.group]))
            else:
                items.append(("part", child))
        return items

    def group_gap(self) -> int:
        return 2 * GAP if self.spread else 0

    def measure(self, pid) -> tuple:
        if pid in self.sizes:
            return self.sizes[pid]
        w = h = 0
        items = self.items(pid)
        for kind, item in items:
            iw, ih = self.measure_item(kind, item)
            w = max(w, iw)
            h += ih
        h += GAP * max(0, len(items) - 1)
        size = (w + 2 * PAD, max(h, 0) + 2 * PAD)
        self.sizes[pid] = size
        return size

    def measure_item(self, kind, item) -> tuple:
        if kind == "box":
            return self.box_size(item)
        if kind == "part":
            return self.measure(item.id)
        sizes = [self.measure(m.id) for m in item]
        return max(s[0] for s in sizes), sum(s[1] for s in sizes) + self.group_gap() * (len(item) - 1)

    # -- placing --

    def place(self, pid, x, y, width=None):
        p = self.d.partition(pid)
        w, h = self.measure(pid)
        w = width or w
        depth = self.d.negation_depth(pid)
        self.rects.append(Rect(p.kind, pid, x, y, w, h, depth=depth, partition=pid))
        cy = y + PAD
        for kind, item in self.items(pid):
            iw, ih = self.measure_item(kind, item)
            if kind == "box":
                self.place_box(item, x + PAD, cy, depth)
            elif kind == "part":
                self.place(item.id, x + PAD, cy)
            else:
                my = cy
                for m in item:
                    self.place(m.id, x + PAD, my, iw)
                    my += self.measure(m.id)[1] + self.group_gap()
            cy += ih + GAP

    def place_box(self, box, x, y, depth):
        w, h = self.box_size(box)
        header, rows = self.box_lines(box)
        if box.id in self.builtins:
            kind = self.hints.get(box.id) or ("builtin-unary" if box.unary else "builtin-binary")
            kind = {"condition": "condition", "arrow": "arrow-anchor"}.get(kind, kind)
        elif box in self.d.outputs:
            kind = "output"
        else:
            kind = "table"
        self.rects.append(Rect(kind, box.id, x, y, w, h, header, depth, box.partition))
        if not rows:
            for anchor in getattr(box, "anchors", ()):
                self.anchor[(box.id, anchor)] = (x, y, w, h)
        if box.id in self.rows:
            for i, (label, attr, fused) in enumerate(self.rows[box.id]):
                ry = y + ROW * (i + 1)
                rid = f"{box.id}.{i}"
                self.rects.append(Rect("fused-attribute" if fused else "attribute", rid, x, ry, w, ROW, label, depth, box.partition))
                self.anchor.setdefault((box.id, attr), (x, ry, w, ROW))
                if fused:
                    self.anchor[(fused, "$1")] = (x, ry, w, ROW)
        else:
            for i, label in enumerate(rows):
                ry = y + ROW * (i + 1)
                self.rects.append(Rect("attribute", f"{box.id}.{i}", x, ry, w, ROW, label, depth, box.partition))
                self.anchor[(box.id, label)] = (x, ry, w, ROW)

    def lines(self) -> list:
        out = []
        done_arrows = set()
        for e in self.d.edges:
            ends = [x for x in (e.a, e.b) if x[0] in self.builtins]
            kind = self.hints.get(ends[0][0]) if ends else None
            if kind == "fused":
                continue
            if kind == "arrow":
                bid = ends[0][0]
                if bid in done_arrows:
                    continue
                done_arrows.add(bid)
                src = dst = None
                for e2 in self.d.edges_of(bid):
                    mine = e2.a if e2.a[0] == bid else e2.b
                    if mine[1] == "$1":
                        src = e2.other(bid)
                    else:
                        dst = e2.other(bid)
                label = self.builtins[bid].op.value
                out.append(self.connect(src, (bid, "$1"), "edge", ""))
                out.append(self.connect((bid, "$2"), dst, "arrow", label))
                continue
            out.append(self.connect(e.a, e.b, "edge", ""))
        return out

    def connect(self, a, b, kind, label) -> Line:
        ax, ay, aw, ah = self.anchor[a]
        bx, by, bw, bh = self.anchor[b]
        if ax + aw <= bx:
            x1, x2 = ax + aw, bx
        elif bx + bw <= ax:
            x1, x2 = ax, bx + bw
        else:
            x1, x2 = ax + aw, bx + bw
        return Line(kind, x1, ay + ah // 2, x2, by + bh // 2, label)

    def dotted(self) -> list:
        out = []
        by_id = {r.id: r for r in self.rects if r.kind == FUSE}
        for members in self.d.groups().values():
            for m1, m2 in zip(members, members[1:]):
                r1, r2 = by_id[m1.id], by_id[m2.id]
                if r1.y + r1.h < r2.y:
                    cx = r1.x + r1.w // 2
                    out.append(Line("dotted", cx, r1.y + r1.h, cx, r2.y))
        return out


def layout(d: Diagram, spread_fuse_boxes: bool = False) -> Scene:
    """Nested partitions with boxes stacked vertically in document order.

    Fuse-group members are stacked at equal width; with ``spread_fuse_boxes``
    they are separated by a gap so a dotted connector can join them.
    """
    lay = _Layout(d, spread_fuse_boxes)
    lay.place(d.base.id, 0, 0)
    base = lay.rects[0]
    lines = lay.lines() + lay.dotted()
    # the column to the right of the canvas leaves room for edges that loop outward
    width = base.w + 2 * GRID
    return Scene(width, base.h, tuple(lay.rects), tuple(lines))


def zone_fill(depth: int, shading: bool) -> str:
    return GRAY if shading and depth % 2 else WHITE


def _attr(**kw) -> str:
    return " ".join(f"{k.rstrip('_').replace('_', '-')}={quoteattr(str(v))}" for k, v in kw.items())


def to_svg(scene: Scene, peirce_shading: bool = False, dotted_connectors: bool = False) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{scene.width}" height="{scene.height}" '
        f'viewBox="0 0 {scene.width} {scene.height}" font-family="monospace" font-size="13">',
        "<defs>",
        '<marker id="arrowhead" markerWidth="8" markerHeight="8" refX="8" refY="4" orient="auto">'
        '<path d="M0,0 L8,4 L0,8 z" fill="#333333"/></marker>',
        "</defs>",
    ]
    for r in scene.rects:
        fill = zone_fill(r.depth, peirce_shading)
        if r.kind == BASE:
            out.append(f"<rect {_attr(class_='zone base', data_id=r.id, data_zone_depth=r.depth, data_zone_fill=fill, x=r.x, y=r.y, width=r.w, height=r.h, fill=fill, stroke='none')}/>")
        elif r.kind == NEGATION:
            out.append(
                f"<rect {_attr(class_='zone negation', data_id=r.id, data_zone_depth=r.depth, data_zone_fill=fill, x=r.x, y=r.y, width=r.w, height=r.h, rx=12, ry=12, fill=fill, stroke='#333333', stroke_dasharray='6 4')}/>"
            )
        elif r.kind == FUSE:
            out.append(
                f"<rect {_attr(class_='zone fuse', data_id=r.id, data_zone_depth=r.depth, data_zone_fill=fill, x=r.x, y=r.y, width=r.w, height=r.h, fill=fill, stroke='#000000', stroke_width=3)}/>"
            )
        else:
            tint = {
                "builtin-unary": UNARY_TINT,
                "condition": UNARY_TINT,
                "fused-attribute": UNARY_TINT,
                "builtin-binary": BINARY_TINT,
                "arrow-anchor": BINARY_TINT,
            }.get(r.kind, WHITE)
            weight = "bold" if r.kind in ("table", "output") else "normal"
            out.append(
                f"<g {_attr(class_='box ' + r.kind, data_id=r.id, data_partition=r.partition, data_zone_depth=r.depth, data_zone_fill=fill)}>"
                f"<rect {_attr(x=r.x, y=r.y, width=r.w, height=r.h, fill=tint, stroke='#333333')}/>"
                f"<text {_attr(x=r.x + TEXT_PAD, y=r.y + ROW // 2 + 5, font_weight=weight)}>{escape(r.label)}</text></g>"
            )
    for ln in scene.lines:
        if ln.kind == "dotted":
            if dotted_connectors:
                out.append(f"<line {_attr(class_='connector', x1=ln.x1, y1=ln.y1, x2=ln.x2, y2=ln.y2, stroke='#000000', stroke_width=2, stroke_dasharray='2 3')}/>")
            continue
        extra = {"marker_end": "url(#arrowhead)"} if ln.kind == "arrow" else {}
        out.append(f"<line {_attr(class_=ln.kind, x1=ln.x1, y1=ln.y1, x2=ln.x2, y2=ln.y2, stroke='#333333', stroke_width=1.5, **extra)}/>")
        if ln.label:
            mx, my = (ln.x1 + ln.x2) // 2, (ln.y1 + ln.y2) // 2 - 4
            out.append(f"<text {_attr(class_='arrow-label', x=mx, y=my)}>{escape(ln.label)}</text>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(d: Diagram, peirce_shading: bool = False, dotted_connectors: bool = False) -> str:
    return to_svg(layout(d, spread_fuse_boxes=dotted_connectors), peirce_shading, dotted_connectors)
