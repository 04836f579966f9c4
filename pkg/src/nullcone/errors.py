"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class NullconeError(Exception):
    """Base class for every error raised by the package."""


class ParseError(NullconeError):
    def __init__(self, message: str, position: int | None = None, source: str | None = None):
        self.position = position
        self.source = source
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownSymbolError(ParseError):
    def __init__(self, name: str, position: int | None = None, source: str | None = None):
        self.name = name
        super().__init__(f"unknown symbol {name!r}", position, source)


class DomainError(NullconeError):
    """Evaluation left the real domain of an expression or of a metric chart."""

    def __init__(self, message: str, subexpression: str | None = None):
        self.subexpression = subexpression
        if subexpression is not None:
            message = f"{message} in {subexpression!r}"
        super().__init__(message)


class DegenerateMetricError(NullconeError):
    pass


class SignatureError(NullconeError):
    pass


class DegenerateFrameError(NullconeError):
    pass


class PointMismatchError(NullconeError):
    pass


class FrameInconsistencyError(NullconeError):
    pass


class StepUnderflowError(NullconeError):
    """Raised when the adaptive step collapses; carries the partial trajectory."""

    def __init__(self, message: str, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)


class TrackingError(NullconeError):
    """Principal-root continuation became ambiguous; ``point`` is where it happened."""

    def __init__(self, message: str, point=None):
        self.point = point
        super().__init__(message)


class SurfaceError(NullconeError):
    pass


class CatalogError(NullconeError):
    def __init__(self, problems: list[tuple[int, str]], path: str = "<catalog>"):
        self.problems = problems
        lines = [f"{path}:{lineno}: {msg}" for lineno, msg in problems]
        super().__init__("\n".join(lines))
