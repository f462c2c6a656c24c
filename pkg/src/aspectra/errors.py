"""Exception hierarchy shared by every aspectra module."""


class AspectraError(Exception):
    """Base class for all errors raised by aspectra."""


class GraphError(AspectraError, ValueError):
    """A graph violates its structural invariants."""


class FormatError(AspectraError, ValueError):
    """An exchange document is malformed.

    ``where`` names the offending field path (``states[2].kind``) so the
    CLI can print a precise diagnostic.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where

    def __str__(self):
        msg = super().__str__()
        return f"{self.where}: {msg}" if self.where else msg


class OverlapCapExceeded(AspectraError):
    """Overlap enumeration would produce more gluings than allowed."""

    def __init__(self, cap):
        super().__init__(f"more than {cap} overlaps; pattern too large for exhaustive analysis")
        self.cap = cap


class RuleError(AspectraError, ValueError):
    pass


class InvalidMatch(AspectraError):
    pass


class FlattenError(AspectraError):
    pass


class CompileError(AspectraError):
    pass


class ExpansionOverflow(CompileError):
    pass


class DuplicateAspectName(AspectraError, ValueError):
    pass


class UnparseableRuleName(AspectraError, ValueError):
    pass


class UnknownFormat(AspectraError, ValueError):
    pass
