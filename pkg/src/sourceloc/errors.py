"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SourceLocError(Exception):
    """Base class for every error raised by this package."""


class GraphError(SourceLocError, ValueError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class WeightOutOfRange(GraphError):
    pass


class NodeOutOfRange(GraphError, IndexError):
    pass


class InvalidRange(GraphError):
    pass


class ParseError(GraphError):
    """Malformed edge-list or snapshot file.

    ``lineno`` is 1-based (``None`` for whole-file problems). When the line
    parsed fine but violated a graph invariant, the invariant error is chained
    as ``__cause__`` and exposed as ``reason``.
    """

    def __init__(self, message: str, lineno: int | None = None, reason: Exception | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
        self.reason = reason


class WindowUnreachable(SourceLocError):
    pass


class InvalidSnapshot(SourceLocError, ValueError):
    pass


class DisconnectedInfection(InvalidSnapshot):
    pass


class PowerIterationDiverged(SourceLocError, ArithmeticError):
    pass


class EmptyRecords(SourceLocError, ValueError):
    pass


class NotATree(SourceLocError, ValueError):
    pass


class TooLarge(SourceLocError, ValueError):
    pass


class InvalidRegime(SourceLocError, ValueError):
    pass


class ConfigError(SourceLocError, ValueError):
    pass
