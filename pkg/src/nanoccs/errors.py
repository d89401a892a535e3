"""Exception types shared by the compiler stages and the runtime."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Location of a node in the original text (1-based line and column)."""

    line: int
    column: int
    length: int = 0

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self.line}:{self.column}+{self.length}")

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class NanoError(Exception):
    """Base class for every error raised by nanoccs."""


class SpannedError(NanoError):
    def __init__(self, message: str, span: SourceSpan | None):
        self.message = message
        self.span = span
        where = f" ({span})" if span is not None else ""
        super().__init__(f"{message}{where}")


class LexError(SpannedError):
    pass


class ParseError(SpannedError):
    pass


class SemanticError(SpannedError):
    """Translation failure. ``path`` is the slot path where it happened."""

    def __init__(self, message: str, span: SourceSpan | None, path: str = ""):
        self.path = path
        super().__init__(message, span)


class UnknownIdentifier(SemanticError):
    pass


class KindMismatch(SemanticError):
    pass


class InvalidValue(SemanticError):
    pass


class RegistryAuditError(NanoError):
    pass


class ScatterOverflow(NanoError):
    pass


class CollisionError(NanoError):
    def __init__(self, time: float, source: tuple[int, int], target: tuple[int, int]):
        self.time = time
        self.source = source
        self.target = target
        super().__init__(
            f"collision at t={time:g}: agent at {source} moved onto occupied {target}"
        )
