"""Atom-preserving rewrites into the existential-negation fragments."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .errors import FragmentError
from .trc import (
    And,
    BooleanQuery,
    Exists,
    Forall,
    Implies,
    NonBooleanQuery,
    Not,
    Or,
    contains,
    normalize,
)


class Fragment(enum.Enum):
    FULL = "full"
    ENCV = "encv"  # no forall, no implication
    ENC = "enc"  # additionally no disjunction


def classify(q) -> Fragment:
    body = q.body if isinstance(q, (BooleanQuery, NonBooleanQuery)) else q
    if contains(body, (Forall, Implies)):
        return Fragment.FULL
    if contains(body, Or):
        return Fragment.ENCV
    return Fragment.ENC


@dataclass
class StepCounter:
    steps: int = 0

    def tick(self) -> None:
        self.steps += 1


def _drop_forall_implies(f, counter: StepCounter):
    # outside-in, so rule 1 may expose an implication directly under the new negation
    if isinstance(f, Forall):
        counter.tick()
        return Not(Exists(f.bindings, _drop_forall_implies(Not(f.body), counter), f.span), f.span)
    if isinstance(f, Implies):
        counter.tick()
        left = _drop_forall_implies(Not(f.left), counter)
        return Or((left, _drop_forall_implies(f.right, counter)), f.span)
    if isinstance(f, Not):
        if isinstance(f.body, Implies):
            # not(a -> b) == a and not(b)
            counter.tick()
            inner = f.body
            return And(
                (_drop_forall_implies(inner.left, counter), _drop_forall_implies(Not(inner.right), counter)),
                inner.span,
            )
        if isinstance(f.body, Not):
            counter.tick()
            return _drop_forall_implies(f.body.body, counter)
        return replace(f, body=_drop_forall_implies(f.body, counter))
    if isinstance(f, (And, Or)):
        return replace(f, children=tuple(_drop_forall_implies(c, counter) for c in f.children))
    if isinstance(f, Exists):
        return replace(f, body=_drop_forall_implies(f.body, counter))
    return f


def _drop_disjunction(f, counter: StepCounter):
    if isinstance(f, Or):
        counter.tick()
        negated = tuple(Not(_drop_disjunction(c, counter)) for c in f.children)
        return Not(And(negated, f.span), f.span)
    if isinstance(f, Not):
        return replace(f, body=_drop_disjunction(f.body, counter))
    if isinstance(f, And):
        return replace(f, children=tuple(_drop_disjunction(c, counter) for c in f.children))
    if isinstance(f, Exists):
        return replace(f, body=_drop_disjunction(f.body, counter))
    return f


def remove_forall_implies(q, counter: StepCounter | None = None):
    """Rewrite universal quantifiers and implications away; the result is in ENCV (or ENC)."""
    counter = counter if counter is not None else StepCounter()
    q = normalize(q)
    if isinstance(q, (BooleanQuery, NonBooleanQuery)):
        return normalize(replace(q, body=_drop_forall_implies(q.body, counter)))
    return normalize(_drop_forall_implies(q, counter))


def remove_disjunction(q, counter: StepCounter | None = None):
    """Replace each disjunction by a negated conjunction of negations (ENCV -> ENC)."""
    counter = counter if counter is not None else StepCounter()
    q = normalize(q)
    if classify(q) is Fragment.FULL:
        raise FragmentError("remove_disjunction needs a query without forall or implication; run remove_forall_implies first")
    if isinstance(q, (BooleanQuery, NonBooleanQuery)):
        return normalize(replace(q, body=_drop_disjunction(q.body, counter)))
    return normalize(_drop_disjunction(q, counter))


def to_fragment(q, fragment: Fragment):
    if fragment is Fragment.FULL:
        return normalize(q)
    q = remove_forall_implies(q)
    if fragment is Fragment.ENC:
        q = remove_disjunction(q)
    return q
