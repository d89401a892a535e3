"""Translation of the AST into the typed build hierarchy.

Translation alternates between the two table kinds: an instantiable table
(map, list or primitive) says which names may appear beneath a node, and a
resolving table narrows a name to the concrete class whose instantiable
table governs the next level down. The walk is depth-first and halts on the
first unknown name or misplaced node kind.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Union

from .errors import InvalidValue, KindMismatch, SourceSpan, UnknownIdentifier
from .registry import (
    ListIST,
    MapIST,
    PrimitiveInstantiator,
    Registry,
    ResolvingSymbolTable,
)
from .syntax import (
    ARITHMETIC_OPS,
    COMPARISON_OPS,
    ROOT_IDENTIFIER,
    AssignmentNode,
    AstNode,
    PrimitiveNode,
    ReferenceNode,
    is_operator,
)

_NOWHERE = SourceSpan(1, 1)


@dataclass
class MapObjectNode:
    cls: str
    keyword: str | None
    children: dict[str, "ObjectNode"] = field(default_factory=dict)
    span: SourceSpan = field(default=_NOWHERE, compare=False, repr=False)
    origin: str = "user"
    duplicates: list[tuple[str, SourceSpan]] = field(default_factory=list, compare=False, repr=False)


@dataclass
class ListObjectNode:
    member_class: str
    items: list["ObjectNode"] = field(default_factory=list)
    span: SourceSpan = field(default=_NOWHERE, compare=False, repr=False)
    origin: str = "user"


@dataclass
class PrimitiveObjectNode:
    kind: str
    value: Any
    span: SourceSpan = field(default=_NOWHERE, compare=False, repr=False)
    origin: str = "user"


ObjectNode = Union[MapObjectNode, ListObjectNode, PrimitiveObjectNode]


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # underdetermined | overdetermined
    path: str
    message: str
    span: SourceSpan | None = None

    def render(self) -> str:
        where = f" ({self.span})" if self.span is not None else ""
        return f"{self.path}: {self.message}{where}"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "path": self.path,
            "message": self.message,
            "line": self.span.line if self.span else None,
            "column": self.span.column if self.span else None,
        }


def member_segment(keyword: str | None, index: int) -> str:
    return f"{keyword}[{index}]"


def resolve(rst: ResolvingSymbolTable, node: AstNode, path: str = "") -> MapIST:
    """Look up the identifier of ``node`` in ``rst``."""
    if isinstance(node, PrimitiveNode) or is_operator(node):
        raise KindMismatch(f"expected a {rst.expected} name, found a value", node.span, path)
    try:
        return rst.members[node.identifier]
    except KeyError:
        known = ", ".join(sorted(rst.members))
        raise UnknownIdentifier(
            f"'{node.identifier}' is not a known {rst.expected} (expected one of: {known})", node.span, path
        ) from None


def translate(ast_root: AstNode, root_ist: MapIST) -> MapObjectNode:
    """Build the object-node tree for a whole document."""
    if not isinstance(ast_root, AssignmentNode) or ast_root.identifier != ROOT_IDENTIFIER:
        raise KindMismatch("translation must start at the document root", ast_root.span)
    return _translate_map(ast_root, root_ist, root_ist.produced_class, None)


def _translate(node: AstNode, ist, path: str) -> ObjectNode:
    if isinstance(ist, ListIST):
        return _translate_list(node, ist, path)
    if isinstance(ist, MapIST):
        return _translate_map(node, ist, path, node.identifier)
    if isinstance(ist, PrimitiveInstantiator):
        return instantiate_primitive(node, ist, path)
    raise KindMismatch(f"no instantiable table for {path}", node.span, path)


def _translate_list(node: AssignmentNode, ist: ListIST, path: str) -> ListObjectNode:
    items = []
    for i, child in enumerate(node.values):
        child_ist = resolve(ist.member_rst, child, path)
        segment = member_segment(getattr(child, "identifier", None), i)
        items.append(_translate(child, child_ist, f"{path}/{segment}"))
    return ListObjectNode(ist.member_class, items, node.span)


def _translate_map(node: AstNode, ist: MapIST, path: str, keyword: str | None) -> MapObjectNode:
    if isinstance(node, PrimitiveNode):
        raise KindMismatch(f"{ist.produced_class} needs a block, found a literal", node.span, path)
    out = MapObjectNode(ist.produced_class, keyword, span=node.span)
    values = node.values if isinstance(node, AssignmentNode) else ()
    for child in values:
        if not isinstance(child, AssignmentNode) or is_operator(child):
            raise KindMismatch(f"expected 'slot: value' inside {ist.produced_class}", child.span, path)
        name = child.identifier
        if name not in ist.slots:
            known = ", ".join(ist.slots) or "none"
            raise UnknownIdentifier(
                f"'{name}' is not a slot of {ist.produced_class} (slots: {known})", child.span, path
            )
        table, _required = ist.slots[name]
        child_path = f"{path}/{name}"
        if isinstance(table, ListIST):
            obj = _translate_list(child, table, child_path)
        else:
            if len(child.values) != 1:
                raise KindMismatch(f"slot '{name}' takes exactly one value", child.span, child_path)
            value = child.values[0]
            if isinstance(table, PrimitiveInstantiator):
                obj = instantiate_primitive(value, table, child_path)
            else:
                obj = _translate(value, resolve(table, value, child_path), child_path)
        obj.span = child.span
        if name in out.children:
            out.duplicates.append((name, child.span))
        else:
            out.children[name] = obj
    return out


def instantiate_primitive(node: AstNode, ist: PrimitiveInstantiator, path: str) -> PrimitiveObjectNode:
    """Redesignate a primitive AST node as an object node of kind ``ist.kind``."""
    kind = ist.kind
    if kind == "predicate":
        check_predicate(node, ist.variables, path)
        return PrimitiveObjectNode(kind, node, node.span)
    if not isinstance(node, PrimitiveNode):
        raise KindMismatch(f"expected a {kind} literal", node.span, path)
    value = node.value
    if kind == "decimal" and node.kind in ("integer", "decimal"):
        value = float(value)
    elif node.kind != kind:
        raise KindMismatch(f"expected a {kind} literal, found {node.kind}", node.span, path)
    if ist.minimum is not None:
        too_small = value <= ist.minimum if ist.exclusive_minimum else value < ist.minimum
        if too_small:
            bound = ">" if ist.exclusive_minimum else ">="
            raise InvalidValue(f"value {value} must be {bound} {ist.minimum}", node.span, path)
    return PrimitiveObjectNode(kind, value, node.span)


# predicates

_COMPARE = {
    "geq": operator.ge, "leq": operator.le, "gt": operator.gt,
    "lt": operator.lt, "eq": operator.eq, "neq": operator.ne,
}
_ARITH = {"plus": operator.add, "minus": operator.sub, "times": operator.mul, "divide": operator.truediv}
assert set(_COMPARE) == set(COMPARISON_OPS.values()) and set(_ARITH) == set(ARITHMETIC_OPS.values())


def check_predicate(node: AstNode, variables: tuple[str, ...], path: str) -> None:
    if isinstance(node, PrimitiveNode) and node.kind == "boolean":
        return
    if not (is_operator(node) and node.identifier in _COMPARE):
        raise KindMismatch("expected a comparison such as 'time >= 100.0' or true/false", node.span, path)
    for operand in node.values:
        _check_numeric(operand, variables, path)


def _check_numeric(node: AstNode, variables: tuple[str, ...], path: str) -> None:
    if isinstance(node, PrimitiveNode):
        if node.kind not in ("integer", "decimal"):
            raise KindMismatch(f"expected a number, found {node.kind}", node.span, path)
    elif isinstance(node, ReferenceNode):
        if node.identifier not in variables:
            raise UnknownIdentifier(
                f"'{node.identifier}' is not available here (known: {', '.join(variables)})", node.span, path
            )
    elif is_operator(node) and node.identifier in _ARITH:
        for operand in node.values:
            _check_numeric(operand, variables, path)
    else:
        raise KindMismatch("expected an arithmetic expression", node.span, path)


def evaluate_predicate(node: AstNode, env: Mapping[str, float]) -> bool:
    if isinstance(node, PrimitiveNode):
        return bool(node.value)
    lhs, rhs = node.values
    return _COMPARE[node.identifier](_evaluate_numeric(lhs, env), _evaluate_numeric(rhs, env))


def _evaluate_numeric(node: AstNode, env: Mapping[str, float]) -> float:
    if isinstance(node, PrimitiveNode):
        return node.value
    if isinstance(node, ReferenceNode):
        return env[node.identifier]
    lhs, rhs = node.values
    return _ARITH[node.identifier](_evaluate_numeric(lhs, env), _evaluate_numeric(rhs, env))


# determination


def check_determination(root: MapObjectNode, registry: Registry) -> list[Diagnostic]:
    """Report duplicated slots (overdetermined) and missing required slots (underdetermined)."""
    diagnostics: list[Diagnostic] = []
    for path, node in iter_nodes(root, registry.root):
        if not isinstance(node, MapObjectNode):
            continue
        for name, span in node.duplicates:
            diagnostics.append(Diagnostic("overdetermined", f"{path}/{name}",
                                          f"'{name}' is specified more than once", span))
        for slot in registry[node.cls].slots:
            if slot.required and slot.name not in node.children:
                diagnostics.append(Diagnostic(
                    "underdetermined", f"{path}/{slot.name}",
                    f"required slot '{slot.name}' of {node.cls} has no value and no default", node.span))
    return diagnostics


def iter_nodes(node: ObjectNode, path: str) -> Iterator[tuple[str, ObjectNode]]:
    """Depth-first pre-order walk yielding ``(path, node)``."""
    yield path, node
    if isinstance(node, MapObjectNode):
        for name, child in node.children.items():
            yield from iter_nodes(child, f"{path}/{name}")
    elif isinstance(node, ListObjectNode):
        for i, child in enumerate(node.items):
            keyword = child.keyword if isinstance(child, MapObjectNode) else None
            yield from iter_nodes(child, f"{path}/{member_segment(keyword, i)}")


def configuration(node: ObjectNode) -> Any:
    """Plain nested value of a tree, ignoring spans and provenance."""
    if isinstance(node, MapObjectNode):
        return (node.cls, tuple((k, configuration(v)) for k, v in node.children.items()))
    if isinstance(node, ListObjectNode):
        return (node.member_class, tuple(configuration(v) for v in node.items))
    return (node.kind, node.value)
