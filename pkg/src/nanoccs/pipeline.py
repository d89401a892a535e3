"""Compile Nanosyntax text down to a solved build tree, and explain the result."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Any

from .registry import Registry, build_symbol_tables, seed_registry
from .semantics import (
    Diagnostic,
    ListObjectNode,
    MapObjectNode,
    ObjectNode,
    PrimitiveObjectNode,
    check_determination,
    member_segment,
    translate,
)
from .solver import Solved, SolverOutcome, Unsolvable, interpolate
from .syntax import (
    AssignmentNode,
    AstNode,
    PrimitiveNode,
    ReferenceNode,
    format_ast,
    format_expression,
    parse_source,
    ROOT_IDENTIFIER,
)


@functools.lru_cache(maxsize=1)
def default_registry() -> Registry:
    return seed_registry()


@functools.lru_cache(maxsize=1)
def _default_tables():
    return build_symbol_tables(default_registry())


@dataclass
class Compilation:
    ast: AssignmentNode
    tree: MapObjectNode
    diagnostics: list[Diagnostic] = field(default_factory=list)
    outcome: SolverOutcome | None = None

    @property
    def solved(self) -> Solved | None:
        return self.outcome if isinstance(self.outcome, Solved) else None


def compile_source(source: str, registry: Registry | None = None) -> Compilation:
    """Parse, translate, check and interpolate.

    Lexical, parse and translation errors propagate as exceptions. Over- or
    underdetermined models come back with ``diagnostics`` and no outcome.
    """
    if registry is None:
        registry, tables = default_registry(), _default_tables()
    else:
        tables = build_symbol_tables(registry)
    ast = parse_source(source)
    tree = translate(ast, tables)
    result = Compilation(ast, tree, check_determination(tree, registry))
    if not result.diagnostics:
        result.outcome = interpolate(tree, registry)
    return result


# explain


@dataclass(frozen=True)
class ExplainLine:
    path: str
    provenance: str
    value: str

    def render(self) -> str:
        return f"{self.path}: {self.provenance} {self.value}"

    def to_json(self) -> dict[str, Any]:
        return {"path": self.path, "provenance": self.provenance, "value": self.value}


def describe_node(node: ObjectNode) -> str:
    if isinstance(node, MapObjectNode):
        literals = [describe_node(c) for c in node.children.values() if isinstance(c, PrimitiveObjectNode)]
        return " ".join([node.cls, *literals])
    if isinstance(node, ListObjectNode):
        return "[" + ", ".join(item.cls for item in node.items) + "]"
    if node.kind == "predicate":
        return format_expression(node.value)
    return format_expression(PrimitiveNode(node.kind, node.value))


def explain(solved: Solved, root_name: str = "Project") -> list[ExplainLine]:
    """One line per bound slot, depth first, tagged ``user`` or ``default[k]``."""
    lines: list[ExplainLine] = []

    def visit(node: MapObjectNode, path: str) -> None:
        for name, child in node.children.items():
            child_path = f"{path}/{name}"
            lines.append(ExplainLine(child_path, solved.bindings[child_path], describe_node(child)))
            if isinstance(child, MapObjectNode):
                visit(child, child_path)
            elif isinstance(child, ListObjectNode):
                for i, item in enumerate(child.items):
                    visit(item, f"{child_path}/{member_segment(item.keyword, i)}")

    visit(solved.tree, root_name)
    return lines


def to_ast(tree: MapObjectNode) -> AssignmentNode:
    """Spell out a (solved) tree as explicit Nanosyntax."""
    return AssignmentNode(ROOT_IDENTIFIER, tuple(_slot_ast(n, c) for n, c in tree.children.items()))


def _component_ast(node: MapObjectNode) -> AstNode:
    if not node.children:
        return ReferenceNode(node.keyword)
    return AssignmentNode(node.keyword, tuple(_slot_ast(n, c) for n, c in node.children.items()))


def _slot_ast(name: str, node: ObjectNode) -> AssignmentNode:
    if isinstance(node, MapObjectNode):
        return AssignmentNode(name, (_component_ast(node),))
    if isinstance(node, ListObjectNode):
        return AssignmentNode(name, tuple(_component_ast(item) for item in node.items))
    if node.kind == "predicate":
        return AssignmentNode(name, (node.value,))
    return AssignmentNode(name, (PrimitiveNode(node.kind, node.value),))


def synthesize_source(tree: MapObjectNode) -> str:
    return format_ast(to_ast(tree))


__all__ = [
    "Compilation",
    "ExplainLine",
    "Solved",
    "Unsolvable",
    "compile_source",
    "default_registry",
    "describe_node",
    "explain",
    "synthesize_source",
    "to_ast",
]
