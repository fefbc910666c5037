"""Exception hierarchy shared by all pipeline stages."""

from __future__ import annotations


class TRCError(Exception):
    """Base class. ``span`` is a (start, end) character range into the source, if known."""

    def __init__(self, message: str, span=None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is None:
            return self.message
        return f"{self.message} at {self.span.start}..{self.span.end}"


class TRCSyntaxError(TRCError):
    pass


class WellFormednessError(TRCError):
    pass


class RebindError(WellFormednessError):
    """A tuple variable is bound by more than one quantifier."""


class FreeBoundError(WellFormednessError):
    """A tuple variable occurs both free and bound."""


class FreeVariableError(WellFormednessError):
    """Free variables other than the output variable."""


class HeaderError(WellFormednessError):
    pass


class FragmentError(TRCError):
    """The query is outside the fragment an operation requires."""


class InvalidDiagram(TRCError):
    def __init__(self, message: str, issues=()):
        super().__init__(message)
        self.issues = list(issues)


class FormatError(TRCError):
    """Malformed diagram or database file. ``location`` names the offending element."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location


class EvaluationError(TRCError):
    pass


class UnknownRelation(EvaluationError):
    pass


class UnknownAttribute(EvaluationError):
    pass


class ArityMismatch(EvaluationError):
    pass


class EvalTypeError(EvaluationError, TypeError):
    """Comparison between an integer and a string."""
