"""Text syntax for TRC queries.

Grammar (lowest precedence first)::

    query       := '{' IDENT '(' IDENT (',' IDENT)* ')' '|' formula '}' | formula
    formula     := disjunction ('->' formula)?
    disjunction := conjunction ('or' conjunction)*
    conjunction := unary ('and' unary)*
    unary       := 'not' '(' formula ')' | '(' formula ')' | quantified | comparison
    quantified  := ('exists' | 'forall') binding (',' ['exists' | 'forall'] binding)* '[' formula? ']'
    binding     := IDENT 'in' (IDENT | STRING)
    comparison  := term OP term          OP in = != <> < <= > >=
    term        := IDENT '.' (IDENT | '$1' | '$2') | INT | STRING

A quoted relation name denotes a built-in relation such as ``"<"`` or ``">0"``.
Binary connectives parse as binary nodes; ``normalize`` flattens them.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import TRCSyntaxError
from .trc import (
    And,
    Attr,
    Binding,
    BooleanQuery,
    CmpOp,
    Exists,
    Forall,
    Formula,
    Implies,
    JoinPred,
    NonBooleanQuery,
    Not,
    Or,
    SelPred,
    SourceSpan,
    format_const,
    normalize,
)

KEYWORDS = {"exists", "forall", "in", "and", "or", "not"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<arrow>->)
  | (?P<op><=|>=|!=|<>|=|<|>)
  | (?P<int>-?\d+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<dollar>\$\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}()\[\]|,.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TRCSyntaxError(f"unexpected character {text[pos]!r}", SourceSpan(pos, pos + 1))
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "ident" and value in KEYWORDS:
                kind = value
            elif kind == "punct":
                kind = value
            tokens.append(Token(kind, value, m.start(), m.end()))
        pos = m.end()
    tokens.append(Token("eof", "", len(text), len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise TRCSyntaxError(f"{msg}, found {found}", SourceSpan(tok.start, tok.end))

    def expect(self, kind: str, what: str | None = None) -> Token:
        if self.tok.kind != kind:
            self.error(f"expected {what or repr(kind)}")
        tok = self.tok
        self.i += 1
        return tok

    def accept(self, kind: str) -> Token | None:
        if self.tok.kind == kind:
            tok = self.tok
            self.i += 1
            return tok
        return None

    def span_from(self, start: int) -> SourceSpan:
        return SourceSpan(start, self.tokens[self.i - 1].end)

    # -- grammar --

    def query(self):
        if self.tok.kind == "{":
            start = self.tok.start
            self.i += 1
            out = self.expect("ident", "output variable").text
            self.expect("(")
            header = [self.expect("ident", "header attribute").text]
            while self.accept(","):
                header.append(self.expect("ident", "header attribute").text)
            self.expect(")")
            self.expect("|")
            body = self.formula()
            self.expect("}")
            self.expect("eof", "end of input")
            return NonBooleanQuery(out, tuple(header), body), SourceSpan(start, self.tokens[self.i - 1].end)
        body = self.formula()
        self.expect("eof", "end of input")
        return BooleanQuery(body), body.span

    def formula(self) -> Formula:
        start = self.tok.start
        left = self.disjunction()
        if self.accept("arrow"):
            right = self.formula()
            return Implies(left, right, self.span_from(start))
        return left

    def disjunction(self) -> Formula:
        start = self.tok.start
        node = self.conjunction()
        while self.accept("or"):
            node = Or((node, self.conjunction()), self.span_from(start))
        return node

    def conjunction(self) -> Formula:
        start = self.tok.start
        node = self.unary()
        while self.accept("and"):
            node = And((node, self.unary()), self.span_from(start))
        return node

    def unary(self) -> Formula:
        start = self.tok.start
        if self.accept("not"):
            self.expect("(", "'(' after not")
            body = self.formula()
            self.expect(")")
            return Not(body, self.span_from(start))
        if self.tok.kind == "(":
            self.i += 1
            inner = self.formula()
            self.expect(")")
            return inner
        if self.tok.kind in ("exists", "forall"):
            return self.quantified()
        return self.comparison()

    def quantified(self) -> Formula:
        start = self.tok.start
        kind = self.tok.kind
        self.i += 1
        bindings = [self.binding()]
        while self.accept(","):
            if self.tok.kind in ("exists", "forall"):
                if self.tok.kind != kind:
                    self.error(f"mixed quantifiers in one {kind} list")
                self.i += 1
            bindings.append(self.binding())
        self.expect("[", "'[' opening the quantifier scope")
        if self.tok.kind == "]":
            body: Formula = And((), SourceSpan(self.tok.start, self.tok.start))
        else:
            body = self.formula()
        self.expect("]")
        cls = Exists if kind == "exists" else Forall
        return cls(tuple(bindings), body, self.span_from(start))

    def binding(self) -> Binding:
        start = self.tok.start
        var = self.expect("ident", "tuple variable").text
        self.expect("in", "'in'")
        if self.tok.kind == "string":
            relation = json.loads(self.tok.text)
            self.i += 1
        else:
            relation = self.expect("ident", "relation name").text
        return Binding(var, relation, self.span_from(start))

    def term(self):
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            return int(tok.text)
        if tok.kind == "string":
            self.i += 1
            return json.loads(tok.text)
        if tok.kind == "ident":
            self.i += 1
            self.expect(".", "'.' (attributes are written var.Attr)")
            if self.tok.kind in ("ident", "dollar"):
                name = self.tok.text
                self.i += 1
                return Attr(tok.text, name)
            self.error("expected attribute name")
        self.error("expected an attribute reference or constant")

    def comparison(self) -> Formula:
        start = self.tok.start
        left = self.term()
        optok = self.expect("op", "comparison operator")
        op = CmpOp("!=" if optok.text == "<>" else optok.text)
        right = self.term()
        span = self.span_from(start)
        if isinstance(left, Attr) and isinstance(right, Attr):
            return JoinPred(left, op, right, span)
        if isinstance(left, Attr):
            return SelPred(left, op, right, span)
        if isinstance(right, Attr):
            return SelPred(right, op.mirror(), left, span)
        raise TRCSyntaxError("comparison between two constants", span)


def parse_formula(text: str) -> Formula:
    """Parse a bare formula without normalizing it."""
    p = _Parser(text)
    f = p.formula()
    p.expect("eof", "end of input")
    return f


def parse_raw(text: str):
    """Parse without normalization; returns the query as written."""
    q, _ = _Parser(text).query()
    return q


def parse_query(text: str):
    """Parse and normalize a query.  Raises TRCSyntaxError or a well-formedness error."""
    return normalize(parse_raw(text))


# -- printing -------------------------------------------------------------------

_PREC = {Implies: 1, Or: 2, And: 3}


def _prec(f: Formula) -> int:
    return _PREC.get(type(f), 4)


def _binding_text(b: Binding) -> str:
    rel = b.relation if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", b.relation) else json.dumps(b.relation)
    return f"{b.var} in {rel}"


def pretty_formula(f: Formula) -> str:
    if isinstance(f, JoinPred):
        return f"{f.left} {f.op.value} {f.right}"
    if isinstance(f, SelPred):
        return f"{f.left} {f.op.value} {format_const(f.const)}"
    if isinstance(f, Binding):
        return _binding_text(f)
    if isinstance(f, Not):
        return f"not({pretty_formula(f.body)})"
    if isinstance(f, (Exists, Forall)):
        kw = "exists" if isinstance(f, Exists) else "forall"
        binds = ", ".join(_binding_text(b) for b in f.bindings)
        body = "" if f.body == And(()) else pretty_formula(f.body)
        return f"{kw} {binds} [{body}]"
    if isinstance(f, (And, Or)):
        if not f.children:
            raise ValueError("the empty conjunction is only printable as a quantifier body")
        word = " and " if isinstance(f, And) else " or "
        mine = _prec(f)
        parts = []
        for c in f.children:
            text = pretty_formula(c)
            parts.append(f"({text})" if _prec(c) <= mine else text)
        return word.join(parts)
    if isinstance(f, Implies):
        left = pretty_formula(f.left)
        if _prec(f.left) <= 1:
            left = f"({left})"
        return f"{left} -> {pretty_formula(f.right)}"
    raise TypeError(f"not a formula: {f!r}")


def pretty(q) -> str:
    if isinstance(q, NonBooleanQuery):
        return f"{{ {q.out_var}({', '.join(q.header)}) | {pretty_formula(q.body)} }}"
    if isinstance(q, BooleanQuery):
        return pretty_formula(q.body)
    return pretty_formula(q)
