"""Tuple relational calculus with disjunction, from query text to diagrams
with negation scopes and DeMorgan fuse boxes and back."""

from .diagram import Diagram, expand_fuse_boxes, read_diagram, validate, write_diagram
from .errors import (
    ArityMismatch,
    EvalTypeError,
    EvaluationError,
    FormatError,
    FragmentError,
    InvalidDiagram,
    TRCError,
    TRCSyntaxError,
    UnknownAttribute,
    UnknownRelation,
    WellFormednessError,
)
from .evaluator import Database, Instance, equiv_on, evaluate, gen_instances, parse_database
from .fragments import Fragment, classify, remove_disjunction, remove_forall_implies, to_fragment
from .metrics import family, legacy_union_form, run_benchmark, size_metrics
from .parser import parse_query, pretty
from .render import layout, render, to_svg
from .safety import base_partition, check_safety, is_safe
from .translate import diagram_to_trc, to_builtin_form, trc_to_diagram, trc_to_representationB
from .trc import AtomBag, alpha_equiv, atoms, canonical, maximal_scope, normalize

__version__ = "0.1.0"

__all__ = [
    "ArityMismatch",
    "AtomBag",
    "Database",
    "Diagram",
    "EvalTypeError",
    "EvaluationError",
    "FormatError",
    "Fragment",
    "FragmentError",
    "Instance",
    "InvalidDiagram",
    "TRCError",
    "TRCSyntaxError",
    "UnknownAttribute",
    "UnknownRelation",
    "WellFormednessError",
    "alpha_equiv",
    "atoms",
    "base_partition",
    "canonical",
    "check_safety",
    "classify",
    "diagram_to_trc",
    "equiv_on",
    "evaluate",
    "expand_fuse_boxes",
    "family",
    "gen_instances",
    "is_safe",
    "layout",
    "legacy_union_form",
    "maximal_scope",
    "normalize",
    "parse_database",
    "parse_query",
    "pretty",
    "read_diagram",
    "remove_disjunction",
    "remove_forall_implies",
    "render",
    "run_benchmark",
    "size_metrics",
    "to_builtin_form",
    "to_fragment",
    "to_svg",
    "trc_to_diagram",
    "trc_to_representationB",
    "validate",
    "write_diagram",
]
