"""nanoccs: a declarative agent-based modeling language with a backtracking
configuration solver and a discrete-event lattice runtime."""

from .errors import (
    CollisionError,
    KindMismatch,
    LexError,
    NanoError,
    ParseError,
    RegistryAuditError,
    ScatterOverflow,
    SemanticError,
    SourceSpan,
    UnknownIdentifier,
)
from .pipeline import compile_source, default_registry, explain, synthesize_source
from .runtime import World, instantiate
from .syntax import format_ast, parse_source, tokenize

__version__ = "0.1.0"

__all__ = [
    "CollisionError", "KindMismatch", "LexError", "NanoError", "ParseError", "RegistryAuditError",
    "ScatterOverflow", "SemanticError", "SourceSpan", "UnknownIdentifier", "World", "compile_source",
    "default_registry", "explain", "format_ast", "instantiate", "parse_source", "synthesize_source",
    "tokenize",
]
